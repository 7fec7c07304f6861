#include "hdinf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

namespace hdinf {

void Dataset::validate() const {
  require_dims(X.rows() == y.size(), "Dataset: rows(X) = " + std::to_string(X.rows()) +
                                         " but size(y) = " + std::to_string(y.size()));
  require_dims(X.rows() >= 2, "Dataset: need n >= 2");
  require_dims(X.cols() >= 1, "Dataset: need p >= 1");
  if (truth) {
    require_dims(truth->theta0.size() == X.cols(), "Dataset: truth theta0 has wrong length");
  }
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out;
  out.X.resize(static_cast<Index>(rows.size()), X.cols());
  out.y.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index src = rows[r];
    require_dims(src >= 0 && src < X.rows(), "Dataset::subset: row index out of range");
    out.X.row(static_cast<Index>(r)) = X.row(src);
    out.y(static_cast<Index>(r)) = y(src);
  }
  out.truth = truth;
  return out;
}

ParseError::ParseError(const std::string& file, std::size_t row, std::size_t column,
                       const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(row) + ":" + std::to_string(column) + ": " +
                         what),
      row_(row),
      column_(column) {}

Dataset sample_dataset(Index n, const Matrix& chol, const Vector& theta0, double sigma,
                       const RngSeed& seed) {
  const Index p = chol.rows();
  require_dims(chol.cols() == p, "sample_dataset: covariance factor must be square");
  require_dims(theta0.size() == p, "sample_dataset: theta0 length must equal p");
  if (n < 2) throw DomainError("sample_dataset: n must be >= 2");
  if (!(sigma >= 0.0)) throw DomainError("sample_dataset: sigma must be nonnegative");

  Engine eng = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix Z(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) Z(i, j) = normal(eng);
  }
  Vector w(n);
  for (Index i = 0; i < n; ++i) w(i) = normal(eng);

  Dataset d;
  d.X.noalias() = Z * chol.transpose();
  d.y.noalias() = d.X * theta0;
  if (sigma > 0.0) d.y += sigma * w;
  d.truth = Truth{theta0, sigma};
  return d;
}

Dataset sample_dataset(Index n, const CovarianceModel& cov, const Vector& theta0, double sigma,
                       const RngSeed& seed) {
  require_dims(theta0.size() == cov.p, "sample_dataset: theta0 length must equal cov.p");
  const Matrix L = cov.kind == CovarianceModel::Kind::identity ? Matrix(Matrix::Identity(cov.p, cov.p))
                                                                : cholesky(cov.sigma());
  return sample_dataset(n, L, theta0, sigma, seed);
}

Vector make_signal(Index p, Index s0, double b, const RngSeed& seed) {
  if (p < 1) throw DomainError("make_signal: p must be >= 1");
  if (s0 < 0 || s0 > p) throw DomainError("make_signal: need 0 <= s0 <= p");
  std::vector<Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  Engine eng = make_engine(seed);
  // Partial Fisher-Yates: the first s0 slots form a uniform sample without replacement.
  for (Index i = 0; i < s0; ++i) {
    std::uniform_int_distribution<Index> pick(i, p - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(eng))]);
  }
  Vector theta = Vector::Zero(p);
  for (Index i = 0; i < s0; ++i) theta(idx[static_cast<std::size_t>(i)]) = b;
  return theta;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view token, double& out) {
  token = trim(token);
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

Matrix read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  const std::string name = path.string();
  if (!in) throw ParseError(name, 0, 0, "cannot open file");

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto tokens = split_commas(line);
    if (first_content) {
      first_content = false;
      double probe = 0.0;
      if (!parse_double(tokens.front(), probe)) continue;  // header row
    }
    std::vector<double> values(tokens.size());
    for (std::size_t c = 0; c < tokens.size(); ++c) {
      if (!parse_double(tokens[c], values[c])) {
        throw ParseError(name, line_no, c + 1, "non-numeric field '" + std::string(trim(tokens[c])) + "'");
      }
    }
    if (rows.empty()) {
      width = values.size();
    } else if (values.size() != width) {
      throw ParseError(name, line_no, values.size(),
                       "ragged row: expected " + std::to_string(width) + " fields, found " +
                           std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(name, line_no, 0, "no numeric rows");

  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) M(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  }
  return M;
}

Dataset load_csv(const std::filesystem::path& x_path, const std::filesystem::path& y_path) {
  Dataset d;
  d.X = read_csv_matrix(x_path);
  const Matrix ym = read_csv_matrix(y_path);
  if (ym.cols() != 1) {
    throw ParseError(y_path.string(), 1, static_cast<std::size_t>(ym.cols()),
                     "response file must have exactly one column");
  }
  d.y = ym.col(0);
  require_dims(d.y.size() == d.X.rows(), "load_csv: " + std::to_string(d.X.rows()) +
                                             " design rows but " + std::to_string(d.y.size()) +
                                             " responses");
  d.validate();
  return d;
}

}  // namespace hdinf
