#pragma once

// Convex loss families for M-estimation of the scalar slope.

#include <string>
#include <string_view>

namespace qregress {

enum class LossFamily { square, absolute, huber, lq, quantile };

inline constexpr double kDefaultHuberC = 1.345;

class LossFunction {
 public:
  static LossFunction square() { return {LossFamily::square, 0.0}; }
  static LossFunction absolute() { return {LossFamily::absolute, 0.0}; }
  static LossFunction huber(double c = kDefaultHuberC);
  static LossFunction lq(double q);
  static LossFunction quantile(double alpha);

  // "square", "absolute", "huber", "huber:1.5", "lq:1.5", "quantile:0.25".
  static LossFunction parse(std::string_view spec);

  LossFamily family() const noexcept { return family_; }
  // c for huber, q for lq, alpha for quantile; 0 otherwise.
  double parameter() const noexcept { return param_; }

  // True when rho' jumps at 0 (absolute, quantile, lq with q = 1).
  bool has_kink() const noexcept;

  std::string describe() const;

  friend bool operator==(const LossFunction&, const LossFunction&) = default;

 private:
  LossFunction(LossFamily f, double p) : family_(f), param_(p) {}
  LossFamily family_;
  double param_;
};

struct Derivative {
  double value = 0.0;
  // Set when x sits on a jump of rho'; value is then the subgradient midpoint.
  bool at_discontinuity = false;
};

double rho_eval(const LossFunction& loss, double x);
Derivative rho_prime(const LossFunction& loss, double x);

}  // namespace qregress
