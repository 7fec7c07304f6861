#pragma once

#include "hdinf/common.hpp"
#include "hdinf/decorrelate.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <variant>

namespace hdinf {

/// theta_i = x if |x| >= c, c on (c/2, c), -c on (-c, -c/2), 0 on [-c/2, c/2].
/// Coordinatewise this is both the l_inf and the Euclidean projection onto
/// {theta : min over supp(theta) of |theta_j| >= c}.
template <typename Scalar>
Scalar threshold_S(Scalar x, Scalar c) {
  using std::abs;
  if (!(c > Scalar(0))) throw DomainError("threshold_S: c must be positive");
  const Scalar a = abs(x);
  if (a >= c) return x;
  if (a <= c / 2) return Scalar(0);
  return x > Scalar(0) ? c : -c;
}

namespace sets {

struct BetaMin {
  double c = 1.0;
};
struct NonnegCone {};
struct MonotoneCone {};  // theta_1 <= theta_2 <= ... <= theta_p
struct LinearFunctional {
  Vector xi;
  double c = 0.0;
};
struct SqNorm {
  double c = 0.0;
};
struct Polyhedral {  // A theta <= b
  Matrix A;
  Vector b;
};

}  // namespace sets

/// Null hypothesis set Omega_0. Construct through the named factories, which
/// validate parameters (a polyhedron is certified nonempty by a feasibility LP).
class HypothesisSet {
 public:
  using Variant = std::variant<sets::BetaMin, sets::NonnegCone, sets::MonotoneCone,
                               sets::LinearFunctional, sets::SqNorm, sets::Polyhedral>;

  static HypothesisSet beta_min(double c);
  static HypothesisSet nonneg_cone();
  static HypothesisSet monotone_cone();
  static HypothesisSet linear_functional(Vector xi, double c);
  static HypothesisSet sq_norm(double c);
  static HypothesisSet polyhedral(Matrix A, Vector b);

  const Variant& variant() const { return v_; }
  std::string name() const;
  bool is_convex() const;

  template <typename T>
  const T* get() const { return std::get_if<T>(&v_); }

  /// Linear inequalities A theta <= b describing the set in dimension p. Only for the
  /// polyhedral variants (cones, linear functional, polyhedral).
  bool linear_constraints(Index p, Matrix& A, Vector& b) const;

 private:
  explicit HypothesisSet(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

nlohmann::json to_json(const HypothesisSet& set);
/// Throws std::invalid_argument on unknown tags or missing parameters.
HypothesisSet hypothesis_set_from_json(const nlohmann::json& j);

/// Variant-specific membership, every inequality and equality relaxed by tol.
bool membership(const HypothesisSet& set, const Vector& theta, double tol);

/// Euclidean projection of v onto the set.
Vector euclidean_projection(const HypothesisSet& set, const Vector& v);

struct ProjectionResult {
  double T_n = 0.0;
  std::optional<Vector> theta_p;
  bool exact = false;  // closed form rather than LP
};

class UnsupportedProjection : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// T_n = min over theta in Omega_0 of |D (gamma_d - U^T theta)|_inf.
///
/// Closed forms: beta_min and nonneg_cone with coordinate U, nonneg_cone with any single
/// direction, linear_functional with u parallel to xi. Cones, linear functionals and
/// polyhedra otherwise go through the epigraph LP. beta_min with a non-coordinate U and
/// sq_norm throw UnsupportedProjection.
ProjectionResult project(const HypothesisSet& set, const Vector& gamma_d, const Vector& D,
                         const Subspace& U);

/// The epigraph LP route, exposed so it can be checked against the closed forms.
ProjectionResult project_lp(const HypothesisSet& set, const Vector& gamma_d, const Vector& D,
                            const Subspace& U);

}  // namespace hdinf
