#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace hdinf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Argument outside the mathematical domain of an operation (|rho| >= 1, q not in (0,1), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotSpdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an iterative solver cannot produce an answer; `stage` names the
// pipeline step that failed so callers can aggregate failures per stage.
class SolverError : public std::runtime_error {
 public:
  SolverError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace hdinf
