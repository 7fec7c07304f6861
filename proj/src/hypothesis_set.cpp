#include "hdinf/hypothesis_set.hpp"

#include "hdinf/isotonic.hpp"
#include "hdinf/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hdinf {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

HypothesisSet HypothesisSet::beta_min(double c) {
  if (!(c > 0.0)) throw DomainError("beta_min: c must be positive");
  return HypothesisSet(sets::BetaMin{c});
}

HypothesisSet HypothesisSet::nonneg_cone() { return HypothesisSet(sets::NonnegCone{}); }

HypothesisSet HypothesisSet::monotone_cone() { return HypothesisSet(sets::MonotoneCone{}); }

HypothesisSet HypothesisSet::linear_functional(Vector xi, double c) {
  if (!(xi.norm() > 0.0)) throw DomainError("linear_functional: xi must be nonzero");
  return HypothesisSet(sets::LinearFunctional{std::move(xi), c});
}

HypothesisSet HypothesisSet::sq_norm(double c) {
  if (!(c >= 0.0)) throw DomainError("sq_norm: c must be nonnegative");
  return HypothesisSet(sets::SqNorm{c});
}

HypothesisSet HypothesisSet::polyhedral(Matrix A, Vector b) {
  require_dims(A.rows() == b.size() && A.rows() >= 1, "polyhedral: A must be m x p with m = size(b) >= 1");
  const LpResult feas = find_feasible(A, b);
  if (feas.status != LpStatus::optimal) {
    throw DomainError(std::string("polyhedral: set is empty (phase one: ") + to_string(feas.status) + ")");
  }
  return HypothesisSet(sets::Polyhedral{std::move(A), std::move(b)});
}

std::string HypothesisSet::name() const {
  return std::visit(overloaded{
                        [](const sets::BetaMin&) { return std::string("beta_min"); },
                        [](const sets::NonnegCone&) { return std::string("nonneg_cone"); },
                        [](const sets::MonotoneCone&) { return std::string("monotone_cone"); },
                        [](const sets::LinearFunctional&) { return std::string("linear_functional"); },
                        [](const sets::SqNorm&) { return std::string("sq_norm"); },
                        [](const sets::Polyhedral&) { return std::string("polyhedral"); },
                    },
                    v_);
}

bool HypothesisSet::is_convex() const {
  return !std::holds_alternative<sets::BetaMin>(v_) && !std::holds_alternative<sets::SqNorm>(v_);
}

bool HypothesisSet::linear_constraints(Index p, Matrix& A, Vector& b) const {
  return std::visit(
      overloaded{
          [&](const sets::NonnegCone&) {
            A = -Matrix::Identity(p, p);
            b = Vector::Zero(p);
            return true;
          },
          [&](const sets::MonotoneCone&) {
            A = Matrix::Zero(std::max<Index>(p - 1, 0), p);
            for (Index i = 0; i + 1 < p; ++i) {
              A(i, i) = 1.0;
              A(i, i + 1) = -1.0;
            }
            b = Vector::Zero(A.rows());
            return true;
          },
          [&](const sets::LinearFunctional& s) {
            require_dims(s.xi.size() == p, "linear_functional: xi has wrong length");
            A.resize(2, p);
            A.row(0) = s.xi.transpose();
            A.row(1) = -s.xi.transpose();
            b.resize(2);
            b << s.c, -s.c;
            return true;
          },
          [&](const sets::Polyhedral& s) {
            require_dims(s.A.cols() == p, "polyhedral: A has wrong number of columns");
            A = s.A;
            b = s.b;
            return true;
          },
          [](const auto&) { return false; },
      },
      v_);
}

nlohmann::json to_json(const HypothesisSet& set) {
  nlohmann::json j;
  j["type"] = set.name();
  std::visit(overloaded{
                 [&](const sets::BetaMin& s) { j["c"] = s.c; },
                 [&](const sets::LinearFunctional& s) {
                   j["xi"] = std::vector<double>(s.xi.data(), s.xi.data() + s.xi.size());
                   j["c"] = s.c;
                 },
                 [&](const sets::SqNorm& s) { j["c"] = s.c; },
                 [&](const sets::Polyhedral& s) {
                   nlohmann::json rows = nlohmann::json::array();
                   for (Index i = 0; i < s.A.rows(); ++i) {
                     std::vector<double> r(static_cast<std::size_t>(s.A.cols()));
                     for (Index k = 0; k < s.A.cols(); ++k) r[static_cast<std::size_t>(k)] = s.A(i, k);
                     rows.push_back(r);
                   }
                   j["A"] = rows;
                   j["b"] = std::vector<double>(s.b.data(), s.b.data() + s.b.size());
                 },
                 [](const auto&) {},
             },
             set.variant());
  return j;
}

namespace {

Vector vector_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw std::invalid_argument(std::string("hypothesis set: missing array field '") + key + "'");
  }
  const auto v = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

double number_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw std::invalid_argument(std::string("hypothesis set: missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace

HypothesisSet hypothesis_set_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw std::invalid_argument("hypothesis set: expected an object with a string 'type'");
  }
  const auto type = j.at("type").get<std::string>();
  if (type == "beta_min") return HypothesisSet::beta_min(number_from_json(j, "c"));
  if (type == "nonneg_cone") return HypothesisSet::nonneg_cone();
  if (type == "monotone_cone") return HypothesisSet::monotone_cone();
  if (type == "linear_functional") {
    return HypothesisSet::linear_functional(vector_from_json(j, "xi"), number_from_json(j, "c"));
  }
  if (type == "sq_norm") return HypothesisSet::sq_norm(number_from_json(j, "c"));
  if (type == "polyhedral") {
    if (!j.contains("A") || !j.at("A").is_array() || j.at("A").empty()) {
      throw std::invalid_argument("hypothesis set: polyhedral needs a nonempty 'A'");
    }
    const auto rows = j.at("A").get<std::vector<std::vector<double>>>();
    const std::size_t width = rows.front().size();
    Matrix A(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != width) throw std::invalid_argument("hypothesis set: ragged 'A'");
      for (std::size_t k = 0; k < width; ++k) A(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    }
    return HypothesisSet::polyhedral(std::move(A), vector_from_json(j, "b"));
  }
  throw std::invalid_argument("hypothesis set: unknown type '" + type + "'");
}

bool membership(const HypothesisSet& set, const Vector& theta, double tol) {
  return std::visit(
      overloaded{
          [&](const sets::BetaMin& s) {
            for (Index i = 0; i < theta.size(); ++i) {
              const double a = std::abs(theta(i));
              if (a > tol && a < s.c - tol) return false;
            }
            return true;
          },
          [&](const sets::NonnegCone&) { return theta.size() == 0 || theta.minCoeff() >= -tol; },
          [&](const sets::MonotoneCone&) {
            for (Index i = 0; i + 1 < theta.size(); ++i) {
              if (theta(i) > theta(i + 1) + tol) return false;
            }
            return true;
          },
          [&](const sets::LinearFunctional& s) {
            require_dims(s.xi.size() == theta.size(), "membership: xi has wrong length");
            return std::abs(s.xi.dot(theta) - s.c) <= tol * (1.0 + std::abs(s.c));
          },
          [&](const sets::SqNorm& s) { return std::abs(theta.squaredNorm() - s.c) <= tol * (1.0 + s.c); },
          [&](const sets::Polyhedral& s) {
            require_dims(s.A.cols() == theta.size(), "membership: A has wrong number of columns");
            return (s.A * theta - s.b).maxCoeff() <= tol;
          },
      },
      set.variant());
}

namespace {

// Hildreth's dual coordinate ascent for min 0.5 |theta - v|^2 s.t. A theta <= b.
Vector project_polyhedron(const Matrix& A, const Vector& b, const Vector& v) {
  const Index m = A.rows();
  Vector lambda = Vector::Zero(m);
  Vector theta = v;
  const Vector row_sq = A.rowwise().squaredNorm();
  const double scale = 1.0 + v.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double biggest = 0.0;
    for (Index i = 0; i < m; ++i) {
      if (row_sq(i) <= 0.0) continue;
      const double step = (A.row(i).dot(theta) - b(i)) / row_sq(i);
      const double fresh = std::max(0.0, lambda(i) + step);
      const double delta = fresh - lambda(i);
      if (delta != 0.0) {
        theta.noalias() -= delta * A.row(i).transpose();
        lambda(i) = fresh;
        biggest = std::max(biggest, std::abs(delta) * std::sqrt(row_sq(i)));
      }
    }
    if (biggest <= 1e-13 * scale) break;
  }
  return theta;
}

}  // namespace

Vector euclidean_projection(const HypothesisSet& set, const Vector& v) {
  return std::visit(
      overloaded{
          [&](const sets::BetaMin& s) {
            Vector out(v.size());
            for (Index i = 0; i < v.size(); ++i) out(i) = threshold_S(v(i), s.c);
            return out;
          },
          [&](const sets::NonnegCone&) { return Vector(v.cwiseMax(0.0)); },
          [&](const sets::MonotoneCone&) { return Vector(isotonic_regression(v)); },
          [&](const sets::LinearFunctional& s) {
            require_dims(s.xi.size() == v.size(), "euclidean_projection: xi has wrong length");
            return Vector(v - (s.xi.dot(v) - s.c) / s.xi.squaredNorm() * s.xi);
          },
          [&](const sets::SqNorm& s) {
            const double norm = v.norm();
            if (norm == 0.0) {
              Vector out = Vector::Zero(v.size());
              if (v.size() > 0) out(0) = std::sqrt(s.c);
              return out;
            }
            return Vector(v * (std::sqrt(s.c) / norm));
          },
          [&](const sets::Polyhedral& s) {
            require_dims(s.A.cols() == v.size(), "euclidean_projection: A has wrong number of columns");
            return project_polyhedron(s.A, s.b, v);
          },
      },
      set.variant());
}

namespace {

double linf_gap(const Vector& gamma_d, const Vector& D, const Subspace& U, const Vector& theta) {
  return (D.array() * (gamma_d - U.U.transpose() * theta).array()).abs().maxCoeff();
}

// Distance from x to the interval [lo, hi] (either end may be infinite).
double interval_distance(double x, double lo, double hi) {
  if (x < lo) return lo - x;
  if (x > hi) return x - hi;
  return 0.0;
}

void check_projection_dims(const Vector& gamma_d, const Vector& D, const Subspace& U) {
  require_dims(gamma_d.size() == U.k() && D.size() == U.k(), "project: gamma_d, D and U must share k");
  if (D.size() > 0 && !(D.minCoeff() > 0.0)) throw DomainError("project: D must be positive");
}

}  // namespace

ProjectionResult project_lp(const HypothesisSet& set, const Vector& gamma_d, const Vector& D,
                            const Subspace& U) {
  check_projection_dims(gamma_d, D, U);
  const Index p = U.p();
  const Index k = U.k();
  Matrix Aset;
  Vector bset;
  if (!set.linear_constraints(p, Aset, bset)) {
    throw UnsupportedProjection("project: no LP formulation for " + set.name());
  }
  // Variables (theta, t); minimize t subject to |D_i (gamma_i - u_i^T theta)| <= t and the set.
  const Index m = 2 * k + Aset.rows();
  Matrix A = Matrix::Zero(m, p + 1);
  Vector b(m);
  for (Index i = 0; i < k; ++i) {
    const Eigen::RowVectorXd du = D(i) * U.U.col(i).transpose();
    A.row(2 * i).head(p) = -du;
    A(2 * i, p) = -1.0;
    b(2 * i) = -D(i) * gamma_d(i);
    A.row(2 * i + 1).head(p) = du;
    A(2 * i + 1, p) = -1.0;
    b(2 * i + 1) = D(i) * gamma_d(i);
  }
  A.bottomLeftCorner(Aset.rows(), p) = Aset;
  b.tail(Aset.rows()) = bset;
  Vector c = Vector::Zero(p + 1);
  c(p) = 1.0;

  const LpResult lp = solve_lp(c, A, b);
  if (lp.status != LpStatus::optimal) {
    throw SolverError("project", std::string("LP ") + to_string(lp.status) + ", residual " +
                                     std::to_string(lp.max_residual));
  }
  ProjectionResult out;
  const Vector theta = lp.x.head(p);
  out.T_n = linf_gap(gamma_d, D, U, theta);
  out.theta_p = theta;
  out.exact = false;
  return out;
}

ProjectionResult project(const HypothesisSet& set, const Vector& gamma_d, const Vector& D,
                         const Subspace& U) {
  check_projection_dims(gamma_d, D, U);
  const Index p = U.p();
  const Index k = U.k();
  std::vector<Index> coords;
  const bool coordinate = U.is_coordinate(&coords);

  if (const auto* s = set.get<sets::BetaMin>()) {
    if (!coordinate) throw UnsupportedProjection("project: beta_min requires U made of standard basis vectors");
    ProjectionResult out;
    Vector theta = Vector::Zero(p);
    for (Index i = 0; i < k; ++i) {
      const double target = threshold_S(gamma_d(i), s->c);
      theta(coords[static_cast<std::size_t>(i)]) = target;
      out.T_n = std::max(out.T_n, D(i) * std::abs(gamma_d(i) - target));
    }
    out.theta_p = theta;
    out.exact = true;
    return out;
  }

  if (set.get<sets::NonnegCone>() && coordinate) {
    ProjectionResult out;
    Vector theta = Vector::Zero(p);
    for (Index i = 0; i < k; ++i) {
      theta(coords[static_cast<std::size_t>(i)]) = std::max(gamma_d(i), 0.0);
      out.T_n = std::max(out.T_n, D(i) * std::max(-gamma_d(i), 0.0));
    }
    out.theta_p = theta;
    out.exact = true;
    return out;
  }

  if (set.get<sets::NonnegCone>() && k == 1) {
    // {u^T theta : theta >= 0} is [lo, hi] with an infinite end wherever u has entries of that sign.
    const Vector u = U.U.col(0);
    Index arg_pos = 0;
    Index arg_neg = 0;
    u.maxCoeff(&arg_pos);
    u.minCoeff(&arg_neg);
    const double inf = std::numeric_limits<double>::infinity();
    const double lo = u(arg_neg) < 0.0 ? -inf : 0.0;
    const double hi = u(arg_pos) > 0.0 ? inf : 0.0;
    const double g = gamma_d(0);
    ProjectionResult out;
    Vector theta = Vector::Zero(p);
    if (g > 0.0 && hi > 0.0) theta(arg_pos) = g / u(arg_pos);
    if (g < 0.0 && lo < 0.0) theta(arg_neg) = g / u(arg_neg);
    out.T_n = D(0) * interval_distance(g, lo, hi);
    out.theta_p = theta;
    out.exact = true;
    return out;
  }

  if (const auto* s = set.get<sets::LinearFunctional>()) {
    require_dims(s->xi.size() == p, "project: xi has wrong length");
    const double xi_norm = s->xi.norm();
    if (k == 1) {
      const double cosine = U.U.col(0).dot(s->xi) / xi_norm;
      if (std::abs(std::abs(cosine) - 1.0) <= 1e-10) {
        // Every member has u^T theta = sign * c / |xi|.
        const double level = (cosine > 0.0 ? 1.0 : -1.0) * s->c / xi_norm;
        ProjectionResult out;
        out.T_n = D(0) * std::abs(gamma_d(0) - level);
        out.theta_p = Vector(s->c / s->xi.squaredNorm() * s->xi);
        out.exact = true;
        return out;
      }
    }
    return project_lp(set, gamma_d, D, U);
  }

  if (set.get<sets::SqNorm>()) {
    throw UnsupportedProjection("project: sq_norm is handled by the confidence-interval routines");
  }
  return project_lp(set, gamma_d, D, U);
}

}  // namespace hdinf
