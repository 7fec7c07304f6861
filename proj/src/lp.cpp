#include "hdinf/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace hdinf {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Simplex {
 public:
  Simplex(const Matrix& A, const Vector& b, const LpOptions& opts)
      : m_(A.rows()), n_(A.cols()), opts_(opts) {
    require_dims(b.size() == m_, "solve_lp: size(b) must equal rows(A)");
    Index n_art = 0;
    for (Index i = 0; i < m_; ++i) n_art += b(i) < 0.0 ? 1 : 0;
    art_begin_ = 2 * n_ + m_;
    cols_ = art_begin_ + n_art;
    rhs_ = cols_;
    T_ = Tableau::Zero(m_, cols_ + 1);
    basis_.assign(static_cast<std::size_t>(m_), -1);

    Index next_art = art_begin_;
    for (Index i = 0; i < m_; ++i) {
      const double sign = b(i) < 0.0 ? -1.0 : 1.0;
      T_.row(i).segment(0, n_) = sign * A.row(i);
      T_.row(i).segment(n_, n_) = -sign * A.row(i);
      T_(i, 2 * n_ + i) = sign;
      T_(i, rhs_) = sign * b(i);
      if (b(i) < 0.0) {
        T_(i, next_art) = 1.0;
        basis_[static_cast<std::size_t>(i)] = next_art++;
      } else {
        basis_[static_cast<std::size_t>(i)] = 2 * n_ + i;
      }
    }
    max_pivots_ = opts.max_pivots > 0 ? opts.max_pivots : static_cast<int>(50 * (m_ + cols_));
  }

  // Returns false on iteration limit.
  bool phase_one(double& infeasibility) {
    Vector cost = Vector::Zero(cols_);
    for (Index j = art_begin_; j < cols_; ++j) cost(j) = 1.0;
    const auto status = optimize(cost, /*allow_artificial=*/true);
    infeasibility = objective_value(cost);
    if (status == Step::limit) return false;
    expel_artificials();
    return true;
  }

  enum class Step { optimal, unbounded, limit };

  Step phase_two(const Vector& c) {
    Vector cost = Vector::Zero(cols_);
    cost.head(n_) = c;
    cost.segment(n_, n_) = -c;
    return optimize(cost, /*allow_artificial=*/false);
  }

  Vector solution() const {
    Vector x = Vector::Zero(n_);
    for (Index i = 0; i < m_; ++i) {
      const Index j = basis_[static_cast<std::size_t>(i)];
      if (j < n_) x(j) += T_(i, rhs_);
      else if (j < 2 * n_) x(j - n_) -= T_(i, rhs_);
    }
    return x;
  }

  int pivots() const { return pivots_; }

 private:
  double objective_value(const Vector& cost) const {
    double v = 0.0;
    for (Index i = 0; i < m_; ++i) v += cost(basis_[static_cast<std::size_t>(i)]) * T_(i, rhs_);
    return v;
  }

  Step optimize(const Vector& cost, bool allow_artificial) {
    const Index usable = allow_artificial ? cols_ : art_begin_;
    Vector reduced = cost;
    for (Index i = 0; i < m_; ++i) {
      const double cb = cost(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0.0) reduced -= cb * T_.row(i).head(cols_).transpose();
    }
    int degenerate_run = 0;
    while (true) {
      const bool bland = degenerate_run > 50;
      Index enter = -1;
      double best = -opts_.tol;
      for (Index j = 0; j < usable; ++j) {
        if (reduced(j) < best) {
          enter = j;
          if (bland) break;
          best = reduced(j);
        }
      }
      if (enter < 0) return Step::optimal;
      if (pivots_ >= max_pivots_) return Step::limit;

      Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m_; ++i) {
        const double a = T_(i, enter);
        if (a <= opts_.tol) continue;
        const double r = T_(i, rhs_) / a;
        if (r < ratio - 1e-12 ||
            (r <= ratio + 1e-12 && leave >= 0 &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          ratio = std::min(ratio, r);
          leave = i;
        }
      }
      if (leave < 0) return Step::unbounded;
      degenerate_run = ratio <= 1e-12 ? degenerate_run + 1 : 0;
      pivot(leave, enter);
      const double factor = reduced(enter);
      reduced -= factor * T_.row(leave).head(cols_).transpose();
    }
  }

  void pivot(Index row, Index col) {
    T_.row(row) /= T_(row, col);
    for (Index i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = T_(i, col);
      if (f != 0.0) T_.row(i) -= f * T_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
    ++pivots_;
  }

  // Artificial variables still basic at zero level are swapped for any structural
  // column with a usable pivot; rows with none are redundant and left alone.
  void expel_artificials() {
    for (Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < art_begin_) continue;
      for (Index j = 0; j < art_begin_; ++j) {
        if (std::abs(T_(i, j)) > 1e-7) {
          pivot(i, j);
          break;
        }
      }
    }
  }

  Index m_;
  Index n_;
  LpOptions opts_;
  Index art_begin_ = 0;
  Index cols_ = 0;
  Index rhs_ = 0;
  Tableau T_;
  std::vector<Index> basis_;
  int pivots_ = 0;
  int max_pivots_ = 0;
};

double residual(const Matrix& A, const Vector& b, const Vector& x) {
  if (A.rows() == 0) return 0.0;
  return std::max(0.0, (A * x - b).maxCoeff());
}

}  // namespace

LpResult find_feasible(const Matrix& A, const Vector& b, const LpOptions& opts) {
  Simplex sx(A, b, opts);
  LpResult res;
  double infeas = 0.0;
  const bool done = sx.phase_one(infeas);
  res.pivots = sx.pivots();
  res.x = sx.solution();
  res.max_residual = residual(A, b, res.x);
  if (!done) {
    res.status = LpStatus::iteration_limit;
  } else if (infeas > 1e-7 * (1.0 + b.cwiseAbs().maxCoeff())) {
    res.status = LpStatus::infeasible;
  } else {
    res.status = LpStatus::optimal;
  }
  return res;
}

LpResult solve_lp(const Vector& c, const Matrix& A, const Vector& b, const LpOptions& opts) {
  require_dims(c.size() == A.cols(), "solve_lp: size(c) must equal cols(A)");
  Simplex sx(A, b, opts);
  LpResult res;
  double infeas = 0.0;
  if (!sx.phase_one(infeas)) {
    res.status = LpStatus::iteration_limit;
  } else if (infeas > 1e-7 * (1.0 + (b.size() ? b.cwiseAbs().maxCoeff() : 0.0))) {
    res.status = LpStatus::infeasible;
  } else {
    switch (sx.phase_two(c)) {
      case Simplex::Step::optimal: res.status = LpStatus::optimal; break;
      case Simplex::Step::unbounded: res.status = LpStatus::unbounded; break;
      case Simplex::Step::limit: res.status = LpStatus::iteration_limit; break;
    }
  }
  res.pivots = sx.pivots();
  res.x = sx.solution();
  res.objective = c.dot(res.x);
  res.max_residual = residual(A, b, res.x);
  return res;
}

}  // namespace hdinf
