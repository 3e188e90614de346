#pragma once

// M-estimation of beta in mu_j = beta lambda_j + e_j, fitted through the origin.

#include "qregress/loss.hpp"
#include "qregress/sampling.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qregress {

class RegressionData {
 public:
  // Throws dimension_mismatch on unequal lengths or n = 0.
  RegressionData(std::vector<double> lambdas, std::vector<double> mus);
  static RegressionData from_samples(std::span<const Sample> samples);

  std::size_t size() const noexcept { return lambdas_.size(); }
  const std::vector<double>& lambdas() const noexcept { return lambdas_; }
  const std::vector<double>& mus() const noexcept { return mus_; }
  // S_n = sum lambda_j^2
  double design_magnitude() const noexcept { return s_n_; }

 private:
  std::vector<double> lambdas_;
  std::vector<double> mus_;
  double s_n_ = 0.0;
};

struct EstimatorResult {
  double beta_hat = 0.0;
  double objective_value = 0.0;
  std::string solver;
  int iterations = 0;
  std::optional<std::pair<double, double>> minimizer_interval;
  // Bracket handed to the golden-section stage (general solver only).
  std::optional<std::pair<double, double>> search_bracket;
};

inline constexpr double kDefaultSolverTol = 1e-10;
inline constexpr int kDefaultSolverMaxIter = 200;

double objective(const LossFunction& loss, const RegressionData& data, double beta);

EstimatorResult estimate_ls(const RegressionData& data);

// Exact minimiser of sum |r| + (2 alpha - 1) r via a weighted quantile of the
// slopes mu_j / lambda_j. alpha = 1/2 is least absolute deviations.
EstimatorResult estimate_weighted_quantile(const RegressionData& data, double alpha);

// Bracket expansion from the LS estimate, then golden-section contraction
// to width <= tol (1 + |beta|).
EstimatorResult estimate_general(const LossFunction& loss, const RegressionData& data,
                                 double tol = kDefaultSolverTol,
                                 int max_iter = kDefaultSolverMaxIter);

// Picks the exact solver when one exists, the general solver otherwise.
EstimatorResult fit(const LossFunction& loss, const RegressionData& data);

// Brute-force argmin over lo, lo + step, ... <= hi; ties go to the smallest beta.
double grid_oracle(const LossFunction& loss, const RegressionData& data, double lo, double hi,
                   double step);

// objective(beta_hat) <= objective(beta_hat +- 1e-6 (1 + |beta_hat|)), up to
// rounding in the objective sum.
bool is_local_minimum(const LossFunction& loss, const RegressionData& data, double beta_hat);

}  // namespace qregress
