#include "pcbf/barrier.hpp"

#include <cmath>
#include <sstream>

namespace pcbf {

namespace {

void check_coefficients(const std::vector<double>& c) {
  if (c.empty()) throw ConfigError("alpha vector needs at least one coefficient");
  for (std::size_t p = 0; p < c.size(); ++p) {
    if (!std::isfinite(c[p]) || c[p] < 0.0) {
      throw ConfigError("alpha coefficient " + std::to_string(p) +
                        " must be finite and non-negative");
    }
  }
}

bool finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

}  // namespace

AlphaVector::AlphaVector(std::initializer_list<double> coefficients)
    : coefficients_(coefficients) {
  check_coefficients(coefficients_);
}

AlphaVector::AlphaVector(std::vector<double> coefficients)
    : coefficients_(std::move(coefficients)) {
  check_coefficients(coefficients_);
}

AlphaVector AlphaVector::padded(std::size_t q) const {
  if (q < size()) throw ConfigError("cannot pad alpha vector to a shorter length");
  std::vector<double> c = coefficients_;
  c.resize(q, 0.0);
  return AlphaVector(std::move(c));
}

void SafetyConfig::validate() const {
  if (!(r_safe > 0.0) || !std::isfinite(r_safe)) throw ConfigError("r_safe must be positive");
  if (q < 1) throw ConfigError("basis length q must be at least 1");
}

double safety_value(const Vec2& xi, const Vec2& xj, const SafetyConfig& cfg) {
  if (!finite(xi) || !finite(xj)) throw std::domain_error("safety_value: non-finite position");
  return (xi - xj).squaredNorm() - cfg.r_safe * cfg.r_safe;
}

BarrierBasis basis(double h, int q) {
  if (q < 1) throw ConfigError("basis length q must be at least 1");
  BarrierBasis out;
  out.values.resize(static_cast<std::size_t>(q));
  const double h2 = h * h;
  double term = h;
  for (auto& v : out.values) {
    v = term;
    term *= h2;
  }
  return out;
}

double kappa(const AlphaVector& alpha, double h) {
  return kappa(alpha, basis(h, static_cast<int>(alpha.size())));
}

double kappa(const AlphaVector& alpha, const BarrierBasis& h_basis) {
  if (h_basis.size() != alpha.size()) {
    throw ConfigError("kappa: alpha has " + std::to_string(alpha.size()) +
                      " weights but basis has " + std::to_string(h_basis.size()));
  }
  double sum = 0.0;
  for (std::size_t p = 0; p < alpha.size(); ++p) sum += alpha[p] * h_basis.values[p];
  return sum;
}

double hdot(const Vec2& xi, const Vec2& xj, const Vec2& vi, const Vec2& vj,
            const Vec2& ui, const Vec2& uj, double dt) {
  const Vec2 dx = xi - xj;
  return 2.0 * dx.dot(vi - vj) + 2.0 * dx.dot(ui - uj) * dt;
}

std::string to_string(const AlphaVector& alpha) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t p = 0; p < alpha.size(); ++p) {
    if (p) os << ' ';
    os << alpha[p];
  }
  return os.str();
}

}  // namespace pcbf
