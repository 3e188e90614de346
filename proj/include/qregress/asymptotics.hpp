#pragma once

// Design and loss constants behind the consistency and asymptotic-normality
// results, estimated by Monte Carlo, plus the diagnostics that check them.

#include "qregress/loss.hpp"
#include "qregress/rng.hpp"
#include "qregress/sampling.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace qregress {

struct DesignStats {
  double s_n = 0.0;     // sum lambda_j^2
  double d_n_sq = 0.0;  // max_j lambda_j^2 / S_n
  std::size_t n = 0;
};

DesignStats design_stats(std::span<const double> lambdas);

struct PrefixLeverage {
  std::vector<std::size_t> prefixes;
  std::vector<double> d_n_sq;
  bool nonincreasing = true;
};

// d_n^2 on nested prefixes lambdas[0, n_k); prefixes must be ascending and
// each must contain a nonzero lambda.
PrefixLeverage prefix_leverage(std::span<const double> lambdas, std::span<const std::size_t> prefixes);

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

inline constexpr double kDefaultSlopeStep = 1e-3;
inline constexpr std::size_t kDefaultConstantDraws = 1'000'000;
inline constexpr double kDefaultGDelta = 0.5;
inline constexpr std::size_t kDefaultGPoints = 21;

// a in E[rho'(e + c)] = a c + o(|c|): central difference of the Monte Carlo
// mean at +-h, same error draws on both sides.
MonteCarloEstimate estimate_a(const LossFunction& loss, const ErrorModel& model, double h,
                              std::size_t draws, RngSeed seed);

// D = E[rho'(e)^2].
MonteCarloEstimate estimate_D(const LossFunction& loss, const ErrorModel& model,
                              std::size_t draws, RngSeed seed);

struct GCurve {
  std::vector<double> c;
  std::vector<double> g;
  std::vector<double> std_error;

  friend bool operator==(const GCurve&, const GCurve&) = default;
};

// g(c) = E[rho'(e + c) - rho'(e)] on grid_points equispaced points strictly
// inside (-delta, delta); 0 is on the grid when grid_points is odd.
GCurve g_curve(const LossFunction& loss, const ErrorModel& model, double delta,
               std::size_t grid_points, std::size_t draws, RngSeed seed);

// Closed forms where they are known; used to cross-check the Monte Carlo values.
std::optional<double> closed_form_a(const LossFunction& loss, const ErrorModel& model);
std::optional<double> closed_form_D(const LossFunction& loss, const ErrorModel& model);

struct AsymptoticConstants {
  double a = 0.0;
  double a_std_error = 0.0;
  double d_const = 0.0;
  double d_std_error = 0.0;
  GCurve g_values;
  double estimation_h = kDefaultSlopeStep;
  std::size_t mc_draws = 0;
};

AsymptoticConstants asymptotic_constants(const LossFunction& loss, const ErrorModel& model,
                                         RngSeed seed,
                                         std::size_t draws = kDefaultConstantDraws,
                                         double h = kDefaultSlopeStep,
                                         double g_delta = kDefaultGDelta,
                                         std::size_t g_points = kDefaultGPoints);

// T_n^{-1/2} K_n (beta_hat - beta) with K_n = a S_n, T_n = D S_n.
double normalized_statistic(double beta_hat, double beta_true, double a, double d_const,
                            double s_n);

double normal_cdf(double x);
// P(K > t) for the Kolmogorov distribution.
double kolmogorov_survival(double t);

struct NormalityReport {
  std::vector<double> z_values;
  double ks_statistic = 0.0;
  double ks_p_value = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

inline constexpr std::size_t kMinKsSize = 20;

// One-sample KS test against N(0, 1) with the asymptotic p-value.
NormalityReport ks_test(std::span<const double> z_values);

struct ConsistencyReport {
  std::map<std::size_t, double> exceedance;  // n -> P(|beta_hat - beta| > delta)
  bool strictly_decreasing = false;
  bool nonincreasing = false;
};

ConsistencyReport consistency_check(const std::map<std::size_t, std::vector<double>>& abs_errors_by_n,
                                    double delta);

}  // namespace qregress
