#pragma once

#include <Eigen/Core>

#include <vector>

namespace hdinf {

/// Least-squares nondecreasing fit to y with positive weights w (pool adjacent violators).
/// Runs in O(n): each block is merged at most once.
template <typename DY, typename DW>
Eigen::Matrix<typename DY::Scalar, Eigen::Dynamic, 1> isotonic_regression(
    const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DW>& w) {
  using Scalar = typename DY::Scalar;
  const Eigen::Index n = y.size();
  std::vector<Scalar> level;
  std::vector<Scalar> weight;
  std::vector<Eigen::Index> count;
  level.reserve(static_cast<std::size_t>(n));
  weight.reserve(static_cast<std::size_t>(n));
  count.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    level.push_back(y(i));
    weight.push_back(w(i));
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const Scalar wsum = weight[weight.size() - 2] + weight.back();
      const Scalar merged = (level[level.size() - 2] * weight[weight.size() - 2] +
                             level.back() * weight.back()) / wsum;
      const Eigen::Index c = count.back();
      level.pop_back();
      weight.pop_back();
      count.pop_back();
      level.back() = merged;
      weight.back() = wsum;
      count.back() += c;
    }
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  Eigen::Index pos = 0;
  for (std::size_t b = 0; b < level.size(); ++b) {
    out.segment(pos, count[b]).setConstant(level[b]);
    pos += count[b];
  }
  return out;
}

template <typename DY>
Eigen::Matrix<typename DY::Scalar, Eigen::Dynamic, 1> isotonic_regression(const Eigen::MatrixBase<DY>& y) {
  using Vec = Eigen::Matrix<typename DY::Scalar, Eigen::Dynamic, 1>;
  return isotonic_regression(y, Vec::Ones(y.size()));
}

}  // namespace hdinf
