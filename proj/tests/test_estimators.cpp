#include "support.hpp"

#include "qregress/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace qregress;

namespace {

RegressionData data(std::vector<std::pair<double, double>> pairs) {
  std::vector<double> l, m;
  for (auto [a, b] : pairs) {
    l.push_back(a);
    m.push_back(b);
  }
  return RegressionData(l, m);
}

// Continuous design with random signs, so flat minima have probability zero.
RegressionData random_instance(std::mt19937_64& gen, std::size_t n, double beta0, double noise) {
  std::uniform_real_distribution<double> mag(0.5, 3.0);
  std::bernoulli_distribution flip(0.5);
  std::student_t_distribution<double> err(3.0);
  std::vector<double> l(n), m(n);
  for (std::size_t j = 0; j < n; ++j) {
    l[j] = flip(gen) ? -mag(gen) : mag(gen);
    m[j] = beta0 * l[j] + noise * err(gen);
  }
  return RegressionData(l, m);
}

// Coarse grid over the whole bracket, then the fine grid around the coarse
// winner. Valid because every objective here is convex.
double two_stage_grid(const LossFunction& loss, const RegressionData& d, double lo, double hi,
                      double step) {
  const double coarse_step = 100 * step;
  const double coarse = grid_oracle(loss, d, lo, hi, coarse_step);
  const double flo = std::max(lo, coarse - 3 * coarse_step);
  const double fhi = std::min(hi, coarse + 3 * coarse_step);
  return grid_oracle(loss, d, flo, fhi, step);
}

std::vector<LossFunction> five_families() {
  return {LossFunction::square(), LossFunction::absolute(), LossFunction::huber(1.345),
          LossFunction::lq(1.5), LossFunction::quantile(0.3)};
}

}  // namespace

TEST_CASE("regression data validation") {
  CHECK_ERRC(RegressionData({1.0, 2.0}, {1.0}), Errc::dimension_mismatch);
  CHECK_ERRC(RegressionData({}, {}), Errc::dimension_mismatch);
  CHECK_ERRC(RegressionData({1.0}, {std::numeric_limits<double>::infinity()}),
             Errc::invalid_parameter);
  const auto d = data({{1, 2}, {2, 4}});
  CHECK(d.size() == 2);
  CHECK(d.design_magnitude() == 5.0);
}

TEST_CASE("objective examples") {
  CHECK(objective(LossFunction::square(), data({{1, 2}, {2, 4}}), 2.0) == 0.0);
  CHECK(objective(LossFunction::absolute(), data({{1, 1}}), 0.0) == 1.0);
  CHECK(objective(LossFunction::huber(1.0), data({{1, 3}}), 0.0) == 2.5);
}

TEST_CASE("estimate_ls examples") {
  const auto r = estimate_ls(data({{1, 2}, {2, 4}}));
  CHECK(r.beta_hat == 2.0);
  CHECK(r.objective_value == 0.0);
  CHECK(r.solver == "least_squares");
  CHECK(estimate_ls(data({{1, 1}, {1, 3}})).beta_hat == 2.0);
  CHECK(estimate_ls(data({{1, 2}, {2, 3}, {3, 5}})).beta_hat == 23.0 / 14.0);
  CHECK(estimate_ls(data({{-2, 1}, {4, 1}})).beta_hat == 2.0 / 20.0);
  CHECK_ERRC(estimate_ls(data({{0, 5}})), Errc::degenerate_design);
}

TEST_CASE("estimate_weighted_quantile examples") {
  const auto median = estimate_weighted_quantile(data({{1, 1}, {1, 2}, {1, 3}}), 0.5);
  CHECK(median.beta_hat == 2.0);
  CHECK_FALSE(median.minimizer_interval.has_value());
  CHECK(median.solver == "weighted_median");

  const auto even = estimate_weighted_quantile(data({{1, 1}, {1, 3}}), 0.5);
  CHECK(even.beta_hat == 2.0);
  REQUIRE(even.minimizer_interval.has_value());
  CHECK(even.minimizer_interval->first == 1.0);
  CHECK(even.minimizer_interval->second == 3.0);

  CHECK_ERRC(estimate_weighted_quantile(data({{0, 1}}), 0.5), Errc::degenerate_design);
}

TEST_CASE("weighted median against the grid oracle on a flat minimum") {
  // The objective is flat on [2, 3]; the midpoint rule picks 2.5 while the
  // grid oracle breaks ties toward the smallest beta, so they agree on the
  // minimizing set rather than on a single point.
  const auto d = data({{1, 1}, {2, 6}, {1, 2}});
  const auto loss = LossFunction::absolute();
  const auto r = estimate_weighted_quantile(d, 0.5);
  REQUIRE(r.minimizer_interval.has_value());
  CHECK(r.minimizer_interval->first == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.minimizer_interval->second == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.beta_hat == doctest::Approx(2.5).epsilon(1e-12));
  const double grid = grid_oracle(loss, d, 0.0, 5.0, 1e-3);
  CHECK(std::abs(grid - r.minimizer_interval->first) < 1e-9);
  CHECK(objective(loss, d, r.beta_hat) == doctest::Approx(objective(loss, d, grid)).epsilon(1e-12));
}

TEST_CASE("weighted quantile with negative design points") {
  // Residual mu - beta lambda with lambda < 0 flips which side is tilted.
  std::mt19937_64 gen(4);
  for (double alpha : {0.1, 0.5, 0.75}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto d = random_instance(gen, 31, -1.2, 1.0);
      const auto loss = LossFunction::quantile(alpha);
      const auto exact = estimate_weighted_quantile(d, alpha);
      const double grid = two_stage_grid(loss, d, exact.beta_hat - 1.0, exact.beta_hat + 1.0, 1e-7);
      CHECK(std::abs(exact.beta_hat - grid) <= 1e-7 + 1e-9);
      CHECK(is_local_minimum(loss, d, exact.beta_hat));
    }
  }
}

TEST_CASE("estimate_general examples") {
  std::mt19937_64 gen(8);
  const auto d = random_instance(gen, 40, 1.3, 0.5);
  const auto general = estimate_general(LossFunction::square(), d);
  CHECK(std::abs(general.beta_hat - estimate_ls(d).beta_hat) < 1e-9);
  CHECK(general.solver == "golden_section");
  REQUIRE(general.search_bracket.has_value());
  CHECK(general.search_bracket->first <= general.beta_hat);
  CHECK(general.beta_hat <= general.search_bracket->second);

  const auto huber = estimate_general(LossFunction::huber(1.345), data({{1, 2}, {3, 6}}));
  CHECK(std::abs(huber.beta_hat - 2.0) < 1e-9);

  const auto lq_data = random_instance(gen, 50, 0.7, 1.0);
  const auto lq = estimate_general(LossFunction::lq(1.5), lq_data);
  const double grid = two_stage_grid(LossFunction::lq(1.5), lq_data, lq.search_bracket->first,
                                     lq.search_bracket->second, 1e-7);
  CHECK(std::abs(lq.beta_hat - grid) < 1e-6);

  CHECK_ERRC(estimate_general(LossFunction::huber(), data({{0, 1}, {0, 2}})), Errc::degenerate_design);
}

TEST_CASE("bracket expansion gives up after max_iter doublings") {
  // One huge outlier drags the LS start far from the LAD minimum.
  const auto d = data({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1e6}});
  CHECK_ERRC(estimate_general(LossFunction::absolute(), d, 1e-10, 3), Errc::bracket_failure);
  CHECK(std::abs(estimate_general(LossFunction::absolute(), d).beta_hat - 1.0) < 1e-8);
}

TEST_CASE("grid_oracle examples") {
  CHECK(std::abs(grid_oracle(LossFunction::square(), data({{1, 2}}), 0.0, 4.0, 1e-3) - 2.0) <= 1e-3);
  CHECK(grid_oracle(LossFunction::absolute(), data({{1, 1}, {1, 3}}), 0.0, 4.0, 1e-3) ==
        doctest::Approx(1.0).epsilon(1e-12));
  std::mt19937_64 gen(20);
  const auto d = random_instance(gen, 20, 2.0, 1.0);
  const auto loss = LossFunction::huber(1.0);
  const auto r = estimate_general(loss, d);
  const double grid = two_stage_grid(loss, d, r.search_bracket->first, r.search_bracket->second, 1e-7);
  CHECK(std::abs(r.beta_hat - grid) <= 1e-7 + 1e-10);
  CHECK_ERRC(grid_oracle(loss, d, 1.0, 1.0, 1e-3), Errc::invalid_parameter);
  CHECK_ERRC(grid_oracle(loss, d, 0.0, 1.0, 0.0), Errc::invalid_parameter);
}

TEST_CASE("solver-oracle equivalence on random instances") {
  std::mt19937_64 gen(2718);
  std::uniform_int_distribution<std::size_t> size(5, 200);
  std::uniform_real_distribution<double> beta(-3.0, 3.0);
  const auto losses = five_families();
  for (int trial = 0; trial < 25; ++trial) {
    const auto& loss = losses[static_cast<std::size_t>(trial) % losses.size()];
    const auto d = random_instance(gen, size(gen), beta(gen), 1.0);
    const auto r = estimate_general(loss, d);
    const double grid =
        two_stage_grid(loss, d, r.search_bracket->first, r.search_bracket->second, 1e-7);
    CHECK_MESSAGE(std::abs(r.beta_hat - grid) <= 1e-7 + 10 * kDefaultSolverTol, loss.describe());
  }
}

TEST_CASE("exact and general solvers agree where both apply") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_instance(gen, 60, 1.0, 1.0);
    const double alpha = 0.2 + 0.03 * trial;
    const auto exact = estimate_weighted_quantile(d, alpha);
    const auto general = estimate_general(LossFunction::quantile(alpha), d);
    CHECK(std::abs(exact.beta_hat - general.beta_hat) < 1e-8);
  }
}

TEST_CASE("fit dispatches to the exact solvers") {
  std::mt19937_64 gen(3);
  const auto d = random_instance(gen, 25, 2.0, 1.0);
  CHECK(fit(LossFunction::square(), d).solver == "least_squares");
  CHECK(fit(LossFunction::absolute(), d).solver == "weighted_median");
  CHECK(fit(LossFunction::quantile(0.3), d).solver == "weighted_quantile");
  CHECK(fit(LossFunction::quantile(0.5), d).solver == "weighted_median");
  CHECK(fit(LossFunction::huber(), d).solver == "golden_section");
  CHECK(fit(LossFunction::lq(1.5), d).solver == "golden_section");
  CHECK(fit(LossFunction::lq(1.0), d).beta_hat == fit(LossFunction::absolute(), d).beta_hat);
  CHECK(fit(LossFunction::lq(2.0), d).beta_hat == fit(LossFunction::square(), d).beta_hat);
}

TEST_CASE("noiseless data recovers beta for every family") {
  std::mt19937_64 gen(55);
  std::uniform_real_distribution<double> beta(-5.0, 5.0);
  const auto losses = five_families();
  for (int trial = 0; trial < 20; ++trial) {
    const double b = beta(gen);
    const auto d = random_instance(gen, 30, b, 0.0);
    for (const auto& loss : losses) {
      CHECK(std::abs(fit(loss, d).beta_hat - b) < 1e-9);
      CHECK(std::abs(estimate_general(loss, d).beta_hat - b) < 1e-9);
    }
  }
}

TEST_CASE("fitted values carry the local-minimum certificate") {
  std::mt19937_64 gen(6);
  for (const auto& loss : five_families()) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto d = random_instance(gen, 80, -0.5, 2.0);
      const auto r = fit(loss, d);
      CHECK(is_local_minimum(loss, d, r.beta_hat));
      CHECK(r.objective_value == objective(loss, d, r.beta_hat));
      CHECK(r.objective_value >= 0.0);
      CHECK_FALSE(is_local_minimum(loss, d, r.beta_hat + 0.5));
    }
  }
}

TEST_CASE("quantile argmin is invariant under positive rescaling of the data") {
  std::mt19937_64 gen(13);
  for (double alpha : {0.2, 0.5, 0.85}) {
    const auto d = random_instance(gen, 45, 1.5, 1.0);
    const auto base = estimate_weighted_quantile(d, alpha).beta_hat;
    for (double c : {0.25, 3.0, 1000.0}) {
      std::vector<double> l = d.lambdas(), m = d.mus();
      for (auto& v : l) v *= c;
      for (auto& v : m) v *= c;
      const auto scaled = estimate_weighted_quantile(RegressionData(l, m), alpha).beta_hat;
      CHECK(std::abs(scaled - base) <= 1e-12 * (1.0 + std::abs(base)));
    }
  }
}
