#include "qregress/asymptotics.hpp"

#include "qregress/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qregress {

namespace {

// Order of the absolute moment of e that E|rho'(e)|^power needs.
double required_moment(const LossFunction& loss, double power) {
  switch (loss.family()) {
    case LossFamily::square: return power;
    case LossFamily::lq: return power * (loss.parameter() - 1.0);
    default: return 0.0;  // bounded rho'
  }
}

void check_moment(const LossFunction& loss, const ErrorModel& model, double power,
                  const char* what) {
  const double need = required_moment(loss, power);
  if (need > 0.0 && model.moment_limit() <= need) {
    throw Error(Errc::non_finite_moment, std::string(what) + " is infinite for " + loss.describe() +
                                             " under " + model.describe());
  }
}

void check_draws(std::size_t draws) {
  if (draws < 2) throw Error(Errc::invalid_parameter, "need at least two Monte Carlo draws");
}

std::vector<double> error_sample(const ErrorModel& model, std::size_t draws, RngSeed seed) {
  const CounterRng rng(seed, RngDomain::constants);
  std::vector<double> e(draws);
  for (std::size_t i = 0; i < draws; ++i) e[i] = error_draw(model, rng, i);
  return e;
}

// Welford mean and standard error of the mean; fixed summation order.
template <class F>
MonteCarloEstimate mc_mean(std::size_t draws, F&& term) {
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double x = term(i);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  const double var = m2 / static_cast<double>(draws - 1);
  MonteCarloEstimate out{mean, std::sqrt(var / static_cast<double>(draws)), draws};
  if (!std::isfinite(out.value) || !std::isfinite(out.std_error)) {
    throw Error(Errc::non_finite_moment, "Monte Carlo estimate diverged");
  }
  return out;
}

// P(|e| <= c)
std::optional<double> central_mass(const ErrorModel& model, double c) {
  switch (model.family()) {
    case ErrorFamily::gaussian:
      return std::erf(c / (model.sigma() * std::numbers::sqrt2));
    case ErrorFamily::laplace:
      return 1.0 - std::exp(-c / model.scale());
    case ErrorFamily::contaminated:
      return (1.0 - model.outlier_prob()) * std::erf(c / (model.sigma() * std::numbers::sqrt2)) +
             model.outlier_prob() * std::erf(c / (model.outlier_sigma() * std::numbers::sqrt2));
    case ErrorFamily::student_t:
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> variance_of(const ErrorModel& model) {
  switch (model.family()) {
    case ErrorFamily::gaussian:
      return model.sigma() * model.sigma();
    case ErrorFamily::laplace:
      return 2.0 * model.scale() * model.scale();
    case ErrorFamily::contaminated:
      return (1.0 - model.outlier_prob()) * model.sigma() * model.sigma() +
             model.outlier_prob() * model.outlier_sigma() * model.outlier_sigma();
    case ErrorFamily::student_t:
      if (model.df() > 2.0) return model.df() / (model.df() - 2.0) * model.scale() * model.scale();
      return std::nullopt;
  }
  return std::nullopt;
}

// E[min(e^2, c^2)] for e ~ N(0, sigma^2).
double gaussian_huber_second_moment(double sigma, double c) {
  const double k = c / sigma;
  const double pdf = std::exp(-0.5 * k * k) / std::sqrt(2.0 * std::numbers::pi);
  const double inside = std::erf(k / std::numbers::sqrt2);
  return sigma * sigma * (inside - 2.0 * k * pdf) + c * c * (1.0 - inside);
}

}  // namespace

DesignStats design_stats(std::span<const double> lambdas) {
  DesignStats s;
  s.n = lambdas.size();
  double max_sq = 0.0;
  for (double l : lambdas) {
    s.s_n += l * l;
    max_sq = std::max(max_sq, l * l);
  }
  if (!(s.s_n > 0.0)) throw Error(Errc::degenerate_design, "all lambda_j are zero");
  s.d_n_sq = max_sq / s.s_n;
  return s;
}

PrefixLeverage prefix_leverage(std::span<const double> lambdas,
                               std::span<const std::size_t> prefixes) {
  PrefixLeverage out;
  std::size_t prev = 0;
  for (std::size_t n : prefixes) {
    if (n <= prev && !out.prefixes.empty()) {
      throw Error(Errc::invalid_parameter, "prefixes must be strictly ascending");
    }
    if (n > lambdas.size()) throw Error(Errc::invalid_parameter, "prefix longer than data");
    const double d = design_stats(lambdas.first(n)).d_n_sq;
    if (!out.d_n_sq.empty() && d > out.d_n_sq.back()) out.nonincreasing = false;
    out.prefixes.push_back(n);
    out.d_n_sq.push_back(d);
    prev = n;
  }
  return out;
}

MonteCarloEstimate estimate_a(const LossFunction& loss, const ErrorModel& model, double h,
                              std::size_t draws, RngSeed seed) {
  if (!(h > 0.0)) throw Error(Errc::invalid_parameter, "h must be positive");
  check_draws(draws);
  check_moment(loss, model, 1.0, "E|rho'(e)|");
  const std::vector<double> e = error_sample(model, draws, seed);
  return mc_mean(draws, [&](std::size_t i) {
    return (rho_prime(loss, e[i] + h).value - rho_prime(loss, e[i] - h).value) / (2.0 * h);
  });
}

MonteCarloEstimate estimate_D(const LossFunction& loss, const ErrorModel& model,
                              std::size_t draws, RngSeed seed) {
  check_draws(draws);
  check_moment(loss, model, 2.0, "E[rho'(e)^2]");
  const std::vector<double> e = error_sample(model, draws, seed);
  const MonteCarloEstimate d = mc_mean(draws, [&](std::size_t i) {
    const double p = rho_prime(loss, e[i]).value;
    return p * p;
  });
  if (!(d.value > 0.0)) throw Error(Errc::non_finite_moment, "D must be positive");
  return d;
}

GCurve g_curve(const LossFunction& loss, const ErrorModel& model, double delta,
               std::size_t grid_points, std::size_t draws, RngSeed seed) {
  if (!(delta > 0.0)) throw Error(Errc::invalid_parameter, "delta must be positive");
  if (grid_points == 0) throw Error(Errc::invalid_parameter, "grid_points must be positive");
  check_draws(draws);
  check_moment(loss, model, 1.0, "E|rho'(e)|");
  const std::vector<double> e = error_sample(model, draws, seed);
  std::vector<double> base(draws);
  for (std::size_t i = 0; i < draws; ++i) base[i] = rho_prime(loss, e[i]).value;

  GCurve curve;
  const double spacing = 2.0 * delta / static_cast<double>(grid_points + 1);
  const auto middle = static_cast<double>(grid_points + 1) / 2.0;
  for (std::size_t k = 0; k < grid_points; ++k) {
    // Symmetric about 0 by construction: (k + 1 - middle) is exact.
    const double c = (static_cast<double>(k + 1) - middle) * spacing;
    const MonteCarloEstimate m = mc_mean(draws, [&](std::size_t i) {
      return rho_prime(loss, e[i] + c).value - base[i];
    });
    curve.c.push_back(c);
    curve.g.push_back(m.value);
    curve.std_error.push_back(m.std_error);
  }
  return curve;
}

std::optional<double> closed_form_a(const LossFunction& loss, const ErrorModel& model) {
  switch (loss.family()) {
    case LossFamily::square:
      return 2.0;
    case LossFamily::absolute:
    case LossFamily::quantile:
      return 2.0 * model.density(0.0);
    case LossFamily::lq:
      if (loss.parameter() == 1.0) return 2.0 * model.density(0.0);
      if (loss.parameter() == 2.0) return 2.0;
      return std::nullopt;
    case LossFamily::huber:
      return central_mass(model, loss.parameter());
  }
  return std::nullopt;
}

std::optional<double> closed_form_D(const LossFunction& loss, const ErrorModel& model) {
  switch (loss.family()) {
    case LossFamily::square: {
      const auto v = variance_of(model);
      if (!v) return std::nullopt;
      return 4.0 * *v;
    }
    case LossFamily::absolute:
      return 1.0;
    case LossFamily::quantile: {
      // (sign(e) + 2 alpha - 1)^2 takes (2 alpha)^2 on e > 0 and (2 alpha - 2)^2 on e < 0;
      // every error family is symmetric about 0, so each side has mass 1/2.
      const double alpha = loss.parameter();
      return 0.5 * (4.0 * alpha * alpha) + 0.5 * (2.0 * alpha - 2.0) * (2.0 * alpha - 2.0);
    }
    case LossFamily::lq:
      if (loss.parameter() == 1.0) return 1.0;
      if (loss.parameter() == 2.0) {
        const auto v = variance_of(model);
        if (!v) return std::nullopt;
        return 4.0 * *v;
      }
      return std::nullopt;
    case LossFamily::huber: {
      const double c = loss.parameter();
      switch (model.family()) {
        case ErrorFamily::gaussian:
          return gaussian_huber_second_moment(model.sigma(), c);
        case ErrorFamily::contaminated:
          return (1.0 - model.outlier_prob()) * gaussian_huber_second_moment(model.sigma(), c) +
                 model.outlier_prob() * gaussian_huber_second_moment(model.outlier_sigma(), c);
        default:
          return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

AsymptoticConstants asymptotic_constants(const LossFunction& loss, const ErrorModel& model,
                                         RngSeed seed, std::size_t draws, double h,
                                         double g_delta, std::size_t g_points) {
  AsymptoticConstants k;
  const MonteCarloEstimate a = estimate_a(loss, model, h, draws, seed);
  const MonteCarloEstimate d = estimate_D(loss, model, draws, seed);
  k.a = a.value;
  k.a_std_error = a.std_error;
  k.d_const = d.value;
  k.d_std_error = d.std_error;
  k.g_values = g_curve(loss, model, g_delta, g_points, draws, seed);
  k.estimation_h = h;
  k.mc_draws = draws;
  return k;
}

double normalized_statistic(double beta_hat, double beta_true, double a, double d_const,
                            double s_n) {
  if (a == 0.0) throw Error(Errc::degenerate_normalization, "a is zero");
  if (!(d_const > 0.0)) throw Error(Errc::invalid_parameter, "D must be positive");
  if (!(s_n > 0.0)) throw Error(Errc::degenerate_design, "S_n must be positive");
  return a * std::sqrt(s_n / d_const) * (beta_hat - beta_true);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double kolmogorov_survival(double t) {
  if (!(t > 0.0)) return 1.0;
  constexpr double kTermTol = 1e-12;
  double p;
  if (t < 1.18) {
    // Theta-function form; converges fast for small t.
    const double factor = std::sqrt(2.0 * std::numbers::pi) / t;
    const double w = std::numbers::pi * std::numbers::pi / (8.0 * t * t);
    double sum = 0.0;
    for (int k = 1; k < 1000; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * w);
      sum += term;
      if (term < kTermTol) break;
    }
    p = 1.0 - factor * sum;
  } else {
    double sum = 0.0;
    for (int k = 1; k < 1000; ++k) {
      const double term = std::exp(-2.0 * k * k * t * t);
      sum += (k % 2 == 1 ? term : -term);
      if (term < kTermTol) break;
    }
    p = 2.0 * sum;
  }
  return std::clamp(p, 0.0, 1.0);
}

NormalityReport ks_test(std::span<const double> z_values) {
  if (z_values.size() < kMinKsSize) {
    throw Error(Errc::too_few_replications, "KS test needs at least " + std::to_string(kMinKsSize) +
                                                " values, got " + std::to_string(z_values.size()));
  }
  NormalityReport r;
  r.z_values.assign(z_values.begin(), z_values.end());
  std::vector<double> sorted = r.z_values;
  std::sort(sorted.begin(), sorted.end());
  const auto m = static_cast<double>(sorted.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = normal_cdf(sorted[i]);
    const double upper = static_cast<double>(i + 1) / m - cdf;
    const double lower = cdf - static_cast<double>(i) / m;
    stat = std::max({stat, upper, lower});
  }
  r.ks_statistic = stat;
  r.ks_p_value = kolmogorov_survival(std::sqrt(m) * stat);

  double mean = 0.0;
  for (double z : r.z_values) mean += z;
  mean /= m;
  double ss = 0.0;
  for (double z : r.z_values) ss += (z - mean) * (z - mean);
  r.mean = mean;
  r.variance = ss / (m - 1.0);
  return r;
}

ConsistencyReport consistency_check(const std::map<std::size_t, std::vector<double>>& abs_errors_by_n,
                                    double delta) {
  if (!(delta > 0.0)) throw Error(Errc::invalid_parameter, "delta must be positive");
  ConsistencyReport r;
  r.strictly_decreasing = true;
  r.nonincreasing = true;
  std::optional<double> prev;
  for (const auto& [n, errs] : abs_errors_by_n) {
    if (errs.empty()) throw Error(Errc::invalid_parameter, "no replications at n = " + std::to_string(n));
    const auto over = std::count_if(errs.begin(), errs.end(), [&](double e) { return e > delta; });
    const double p = static_cast<double>(over) / static_cast<double>(errs.size());
    if (prev) {
      if (!(p < *prev)) r.strictly_decreasing = false;
      if (p > *prev) r.nonincreasing = false;
    }
    r.exceedance[n] = p;
    prev = p;
  }
  return r;
}

}  // namespace qregress
