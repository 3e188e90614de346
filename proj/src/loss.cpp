#include "qregress/loss.hpp"

#include "qregress/detail/numfmt.hpp"
#include "qregress/error.hpp"

#include <charconv>
#include <cmath>

namespace qregress {

namespace {

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(Errc::invalid_parameter, "cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

LossFunction LossFunction::huber(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error(Errc::invalid_parameter, "huber c must be > 0");
  return {LossFamily::huber, c};
}

LossFunction LossFunction::lq(double q) {
  if (!(q >= 1.0 && q <= 2.0)) throw Error(Errc::invalid_parameter, "lq q must lie in [1, 2]");
  return {LossFamily::lq, q};
}

LossFunction LossFunction::quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(Errc::invalid_parameter, "quantile alpha must lie in (0, 1)");
  }
  return {LossFamily::quantile, alpha};
}

LossFunction LossFunction::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string_view name = spec.substr(0, colon);
  const bool has_arg = colon != std::string_view::npos;
  const auto arg = [&] {
    if (!has_arg) throw Error(Errc::invalid_parameter, "loss '" + std::string(name) + "' needs a parameter");
    return parse_double(spec.substr(colon + 1));
  };
  if (name == "square" || name == "ls") return square();
  if (name == "absolute" || name == "lad") return absolute();
  if (name == "huber") return has_arg ? huber(arg()) : huber();
  if (name == "lq") return lq(arg());
  if (name == "quantile") return quantile(arg());
  throw Error(Errc::invalid_parameter, "unknown loss '" + std::string(spec) + "'");
}

bool LossFunction::has_kink() const noexcept {
  return family_ == LossFamily::absolute || family_ == LossFamily::quantile ||
         (family_ == LossFamily::lq && param_ == 1.0);
}

std::string LossFunction::describe() const {
  using detail::format_number;
  switch (family_) {
    case LossFamily::square: return "square";
    case LossFamily::absolute: return "absolute";
    case LossFamily::huber: return "huber:" + format_number(param_);
    case LossFamily::lq: return "lq:" + format_number(param_);
    case LossFamily::quantile: return "quantile:" + format_number(param_);
  }
  return "unknown";
}

double rho_eval(const LossFunction& loss, double x) {
  const double ax = std::abs(x);
  const double p = loss.parameter();
  switch (loss.family()) {
    case LossFamily::square: return x * x;
    case LossFamily::absolute: return ax;
    case LossFamily::huber: return ax <= p ? 0.5 * x * x : p * ax - 0.5 * p * p;
    case LossFamily::lq: return p == 2.0 ? x * x : (p == 1.0 ? ax : std::pow(ax, p));
    case LossFamily::quantile: return ax + (2.0 * p - 1.0) * x;
  }
  return 0.0;
}

Derivative rho_prime(const LossFunction& loss, double x) {
  const double p = loss.parameter();
  switch (loss.family()) {
    case LossFamily::square:
      return {2.0 * x, false};
    case LossFamily::absolute:
      return {sign(x), x == 0.0};
    case LossFamily::huber:
      return {std::abs(x) <= p ? x : p * sign(x), false};
    case LossFamily::lq:
      if (p == 1.0) return {sign(x), x == 0.0};
      if (x == 0.0) return {0.0, false};
      return {p * std::pow(std::abs(x), p - 1.0) * sign(x), false};
    case LossFamily::quantile:
      return {sign(x) + 2.0 * p - 1.0, x == 0.0};
  }
  return {};
}

}  // namespace qregress
