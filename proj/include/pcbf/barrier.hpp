#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcbf {

using Vec2 = Eigen::Vector2d;

/// Raised when an input violates a configuration invariant (q < 1, negative
/// weights, mismatched lengths, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-negative weights of the polynomial class-K map
///   kappa(h) = a_1 h + a_2 h^3 + ... + a_q h^(2q-1).
/// The weights describe a driving style: weight on higher-order terms lets the
/// vehicle approach the safety boundary faster.
class AlphaVector {
 public:
  AlphaVector(std::initializer_list<double> coefficients);
  explicit AlphaVector(std::vector<double> coefficients);

  std::size_t size() const { return coefficients_.size(); }
  double operator[](std::size_t p) const { return coefficients_[p]; }
  std::span<const double> coefficients() const { return coefficients_; }

  /// Copy extended with zero weights up to length q (q >= size()).
  AlphaVector padded(std::size_t q) const;

  bool operator==(const AlphaVector&) const = default;

 private:
  std::vector<double> coefficients_;
};

/// [h, h^3, ..., h^(2q-1)]
struct BarrierBasis {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

struct SafetyConfig {
  double r_safe = 5.0;  // m
  int q = 2;

  void validate() const;
};

/// h = |xi - xj|^2 - r_safe^2, in m^2. Throws std::domain_error on non-finite input.
double safety_value(const Vec2& xi, const Vec2& xj, const SafetyConfig& cfg);

BarrierBasis basis(double h, int q);

/// alpha . H(h), with H of the same length as alpha.
double kappa(const AlphaVector& alpha, double h);
/// alpha . H for a precomputed basis. Throws ConfigError when lengths differ.
double kappa(const AlphaVector& alpha, const BarrierBasis& h_basis);

/// Discrete-time barrier rate for the pair (i, j) under the double integrator:
///   2 dx^T dv + 2 dx^T (ui - uj) dt,  dx = xi - xj, dv = vi - vj.
/// The control terms vanish as dt -> 0.
double hdot(const Vec2& xi, const Vec2& xj, const Vec2& vi, const Vec2& vj,
            const Vec2& ui, const Vec2& uj, double dt);

std::string to_string(const AlphaVector& alpha);

}  // namespace pcbf
