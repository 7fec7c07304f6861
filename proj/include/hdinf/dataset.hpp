#pragma once

#include "hdinf/common.hpp"
#include "hdinf/covariance.hpp"
#include "hdinf/rng.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

namespace hdinf {

struct Truth {
  Vector theta0;
  double sigma = 1.0;
};

/// y = X theta0 + sigma w. `truth` is only present for simulated data.
struct Dataset {
  Matrix X;
  Vector y;
  std::optional<Truth> truth;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }

  /// Throws DimensionError unless rows(X) == size(y), n >= 2, p >= 1.
  void validate() const;

  /// Rows listed in `rows`, in that order; truth is carried over.
  Dataset subset(const std::vector<Index>& rows) const;

  Matrix gram() const { return (X.transpose() * X) / static_cast<double>(n()); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t row, std::size_t column, const std::string& what);
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Rows are L z with z ~ N(0, I); y = X theta0 + sigma w. `chol` is the lower
/// Cholesky factor of the row covariance, passed in so Monte Carlo loops factor once.
Dataset sample_dataset(Index n, const Matrix& chol, const Vector& theta0, double sigma, const RngSeed& seed);

Dataset sample_dataset(Index n, const CovarianceModel& cov, const Vector& theta0, double sigma,
                       const RngSeed& seed);

/// s0 entries equal to b on a uniformly random support, zero elsewhere.
Vector make_signal(Index p, Index s0, double b, const RngSeed& seed);

/// Numeric CSV (comma separated). A first line whose first token is not a number
/// is treated as a header. The response file must have exactly one column.
Dataset load_csv(const std::filesystem::path& x_path, const std::filesystem::path& y_path);

/// Matrix from a numeric CSV, same header rule as load_csv.
Matrix read_csv_matrix(const std::filesystem::path& path);

}  // namespace hdinf
