// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [--criterion N]   (all criteria when omitted)

#include "qregress/experiment.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace qregress;

namespace {

constexpr std::uint64_t kMasterSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

json reference_model() {
  return json::parse(R"({
    "operator": {"generator": "diagonal", "diagonal": [1, 2, 3]},
    "state": "maximally_mixed",
    "beta0": 2.0,
    "error_model": "gaussian:1"
  })");
}

json consistency_config(const std::string& loss) {
  auto j = reference_model();
  j["loss"] = loss;
  j["n_values"] = {50, 200, 800, 3200};
  j["replications"] = 500;
  j["base_seed"] = kMasterSeed;
  j["delta_consistency"] = 0.1;
  return j;
}

std::vector<LossFunction> five_families() {
  return {LossFunction::square(), LossFunction::absolute(), LossFunction::huber(1.345),
          LossFunction::lq(1.5), LossFunction::quantile(0.3)};
}

// Seeded regression instance drawn through the library pipeline on a random
// operator and state.
RegressionData instance(std::uint64_t seed, std::size_t dim, std::size_t n, double beta0,
                        const std::optional<ErrorModel>& errors) {
  const auto x = random_symmetric(dim, seed);
  const auto phi = gibbs_state(x, 1.0 + static_cast<double>(seed % 5));
  const auto pair = build_true_pair(x, beta0);
  const auto pmf = eigen_pmf(phi, pair.x_spectrum);
  auto samples = sample_eigen_pairs(pmf, pair, n, {seed, 1});
  if (errors) samples = apply_error(std::move(samples), *errors, beta0, {seed, 2});
  return RegressionData::from_samples(samples);
}

Outcome criterion1() {
  double worst_recon = 0.0, worst_idem = 0.0, worst_orth = 0.0, worst_complete = 0.0, worst_eig = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t dim = 2 + seed % 15;
    const auto op = random_symmetric(dim, 1000 + seed);
    const auto d = spectral_decompose(op);
    worst_recon = std::max(worst_recon, max_abs(reconstruct(d).matrix() - op.matrix()));
    Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t a = 0; a < d.size(); ++a) {
      const Matrix& p = d.projections[a];
      worst_idem = std::max(worst_idem, max_abs(p * p - p));
      for (std::size_t b = a + 1; b < d.size(); ++b) {
        worst_orth = std::max(worst_orth, max_abs(p * d.projections[b]));
      }
      sum += p;
    }
    worst_complete = std::max(
        worst_complete, max_abs(sum - Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))));
    // Independent eigensolver: every reference eigenvalue lands on a cluster.
    const Eigen::SelfAdjointEigenSolver<Matrix> ref(op.matrix());
    for (Eigen::Index k = 0; k < ref.eigenvalues().size(); ++k) {
      double nearest = std::numeric_limits<double>::infinity();
      for (double e : d.eigenvalues) nearest = std::min(nearest, std::abs(e - ref.eigenvalues()[k]));
      worst_eig = std::max(worst_eig, nearest);
    }
  }
  const bool pass = worst_recon <= 1e-8 && worst_idem <= 1e-8 && worst_orth <= 1e-8 && worst_complete <= 1e-8 &&
                    worst_eig <= 1e-8;
  return {pass, "reconstruction " + fmt(worst_recon) + ", idempotence " + fmt(worst_idem) + ", orthogonality " +
                    fmt(worst_orth) + ", completeness " + fmt(worst_complete) + ", eigenvalues vs reference " +
                    fmt(worst_eig) + " (limit 1e-8)"};
}

Outcome criterion2() {
  const auto x = diagonal_operator({1, 2, 3});
  const auto pair = build_true_pair(x, 2.0);
  const auto pmf = eigen_pmf(maximally_mixed(3), pair.x_spectrum);
  double mass_err = 0.0;
  for (double m : pmf.masses) mass_err = std::max(mass_err, std::abs(m - 1.0 / 3.0));
  const bool support_ok = pmf.support == std::vector<double>{1, 2, 3};

  constexpr std::size_t n = 100000;
  const auto samples = sample_eigen_pairs(pmf, pair, n, {kMasterSeed, 0});
  std::array<double, 3> counts{};
  for (const auto& s : samples) counts.at(static_cast<std::size_t>(std::lround(s.lambda)) - 1) += 1.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - n / 3.0) * (c - n / 3.0) / (n / 3.0);
  // Chi-squared survival with 2 degrees of freedom.
  const double p = std::exp(-chi2 / 2.0);
  const bool pass = support_ok && pmf.masses.size() == 3 && mass_err <= 1e-10 && p > 0.01;
  return {pass, "max |mass - 1/3| " + fmt(mass_err) + ", chi2 " + fmt(chi2) + ", p " + fmt(p) + " (> 0.01)"};
}

Outcome criterion3() {
  double worst = 0.0;
  for (const auto& loss : five_families()) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const double beta0 = (seed % 2 == 0 ? 1.0 : -1.0) * (0.5 + 0.25 * static_cast<double>(seed));
      const auto d = instance(300 + seed, 2 + seed % 7, 10 + 5 * seed, beta0, std::nullopt);
      worst = std::max(worst, std::abs(fit(loss, d).beta_hat - beta0));
    }
  }
  return {worst <= 1e-9, "max |beta_hat - beta0| over 100 fits " + fmt(worst) + " (limit 1e-9)"};
}

// Coarse grid over the bracket, then the fine grid around the coarse winner.
// Valid because every objective is convex in beta.
double two_stage_grid(const LossFunction& loss, const RegressionData& d, double lo, double hi, double step) {
  const double coarse_step = 100 * step;
  const double coarse = grid_oracle(loss, d, lo, hi, coarse_step);
  return grid_oracle(loss, d, std::max(lo, coarse - 3 * coarse_step), std::min(hi, coarse + 3 * coarse_step), step);
}

Outcome criterion4() {
  constexpr double step = 1e-7;
  const double limit = step + 10 * kDefaultSolverTol;
  double worst = 0.0;
  std::size_t count = 0;
  const auto losses = five_families();
  for (std::size_t li = 0; li < losses.size(); ++li) {
    for (std::uint64_t k = 0; k < 20; ++k) {
      const std::uint64_t seed = 500 + 20 * li + k;
      const std::size_t n = 5 + (seed * 37) % 196;
      const auto d = instance(seed, 2 + seed % 9, n, 1.55 - 0.1 * static_cast<double>(k),
                              ErrorModel::gaussian(0.5));
      const auto r = estimate_general(losses[li], d);
      if (!r.search_bracket) return {false, "no search bracket reported for " + losses[li].describe()};
      const double grid = two_stage_grid(losses[li], d, r.search_bracket->first, r.search_bracket->second, step);
      worst = std::max(worst, std::abs(r.beta_hat - grid));
      ++count;
    }
  }
  return {count == 100 && worst <= limit,
          "max |general - grid| over " + std::to_string(count) + " instances " + fmt(worst) + " (limit " +
              fmt(limit) + ")"};
}

Outcome criterion5() {
  constexpr std::size_t draws = 1'000'000;
  struct Case {
    std::string name;
    MonteCarloEstimate est;
    double truth;
  };
  std::vector<Case> cases;
  for (double sigma : {1.0, 2.0}) {
    const auto m = ErrorModel::gaussian(sigma);
    cases.push_back({"square a, sigma " + fmt(sigma),
                     estimate_a(LossFunction::square(), m, kDefaultSlopeStep, draws, {kMasterSeed, 10}), 2.0});
    cases.push_back({"square D, sigma " + fmt(sigma),
                     estimate_D(LossFunction::square(), m, draws, {kMasterSeed, 11}), 4.0 * sigma * sigma});
  }
  const auto g1 = ErrorModel::gaussian(1.0);
  cases.push_back({"absolute a", estimate_a(LossFunction::absolute(), g1, kDefaultSlopeStep, draws, {kMasterSeed, 12}),
                   std::sqrt(2.0 / std::numbers::pi)});
  cases.push_back({"absolute D", estimate_D(LossFunction::absolute(), g1, draws, {kMasterSeed, 13}), 1.0});

  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    // The floor covers estimators whose draws are all equal (standard error 0).
    const double diff = std::abs(c.est.value - c.truth);
    const bool ok = diff <= 3.0 * c.est.std_error + 1e-12 * (1.0 + std::abs(c.truth));
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + c.name + " " + fmt(c.est.value) + " vs " + fmt(c.truth) + " (" +
              fmt(c.est.std_error > 0 ? diff / c.est.std_error : 0.0) + " SE)";
  }
  return {pass, detail};
}

Outcome criterion6() {
  bool pass = true;
  std::string detail;
  std::string note;
  for (const std::string loss : {"square", "absolute"}) {
    const auto r = run_experiment(config_from_json(consistency_config(loss)), {0});
    std::string ex;
    for (const auto& s : r.summaries) ex += (ex.empty() ? "" : ", ") + std::to_string(s.n) + ":" + fmt(s.exceedance);
    const bool ok = r.exceedance_strictly_decreasing && r.summaries.back().exceedance <= 0.01;
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + loss + " exceedance {" + ex + "} strictly decreasing " +
              (r.exceedance_strictly_decreasing ? "yes" : "no");
    note += (note.empty() ? "" : ", ") + loss + " " + (r.exceedance_nonincreasing ? "yes" : "no");
  }
  std::cout << "note: criterion 6 exceedance nonincreasing: " << note << "\n";
  return {pass, detail};
}

Outcome criterion7() {
  bool pass = true;
  std::string detail;
  for (const std::string loss : {"square", "huber:1.345", "absolute"}) {
    auto j = reference_model();
    j["loss"] = loss;
    j["n_values"] = {5000};
    j["replications"] = 1000;
    j["base_seed"] = kMasterSeed;
    const auto r = run_experiment(config_from_json(j), {0});
    const bool ok = r.normality_n == 5000 && r.ks_p_value > 0.01 && std::abs(r.z_mean) < 0.1 &&
                    std::abs(r.z_variance - 1.0) < 0.15;
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + loss + " KS p " + fmt(r.ks_p_value) + ", mean " + fmt(r.z_mean) +
              ", var " + fmt(r.z_variance);
  }
  return {pass, detail};
}

Outcome criterion8() {
  const auto x = diagonal_operator({1, 2, 3});
  const auto pair = build_true_pair(x, 2.0);
  const auto pmf = eigen_pmf(maximally_mixed(3), pair.x_spectrum);
  const std::vector<std::size_t> prefixes{10, 100, 1000, 10000};
  std::vector<double> mean(prefixes.size(), 0.0);
  bool per_seed = true;
  bool agrees = true;
  double worst_final = 0.0;
  constexpr int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto samples = sample_eigen_pairs(pmf, pair, prefixes.back(), {kMasterSeed + static_cast<std::uint64_t>(s), 0});
    std::vector<double> lambdas;
    for (const auto& smp : samples) lambdas.push_back(smp.lambda);
    const auto lev = prefix_leverage(lambdas, prefixes);
    per_seed = per_seed && lev.nonincreasing;
    for (std::size_t k = 0; k < prefixes.size(); ++k) {
      // Direct computation of max lambda^2 / sum lambda^2 on the prefix.
      double sum = 0.0, mx = 0.0;
      for (std::size_t i = 0; i < prefixes[k]; ++i) {
        sum += lambdas[i] * lambdas[i];
        mx = std::max(mx, lambdas[i] * lambdas[i]);
      }
      agrees = agrees && std::abs(mx / sum - lev.d_n_sq[k]) <= 1e-12;
      mean[k] += lev.d_n_sq[k] / seeds;
    }
    worst_final = std::max(worst_final, lev.d_n_sq.back());
  }
  bool mean_mono = true;
  for (std::size_t k = 1; k < mean.size(); ++k) mean_mono = mean_mono && mean[k] <= mean[k - 1];
  std::string m;
  for (std::size_t k = 0; k < mean.size(); ++k) m += (k ? ", " : "") + fmt(mean[k]);
  const bool pass = worst_final < 0.05 && per_seed && mean_mono && agrees;
  return {pass, "max d_n^2 at n=10000 " + fmt(worst_final) + " (< 0.05), mean by prefix {" + m +
                    "}, per-seed nonincreasing " + (per_seed ? "yes" : "no") + ", direct check " +
                    (agrees ? "agrees" : "disagrees")};
}

std::optional<std::string> capture(const std::string& cmd) {
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return std::nullopt;
  std::string out;
  std::array<char, 65536> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  if (::pclose(pipe) != 0) return std::nullopt;
  return out;
}

Outcome criterion9() {
  const auto path = std::filesystem::temp_directory_path() / "qregress_acceptance_c9.json";
  std::ofstream(path) << consistency_config("square").dump(2);
  const std::string cmd = std::string("\"") + QREGRESS_CLI_PATH + "\" mc \"" + path.string() + "\"";
  std::vector<std::string> docs;
  for (int run = 0; run < 2; ++run) {
    const auto out = capture(cmd);
    if (!out) return {false, "mc run " + std::to_string(run + 1) + " failed"};
    auto j = json::parse(*out);
    if (!j.contains("wall_time_seconds")) return {false, "report has no wall_time_seconds field"};
    j.erase("wall_time_seconds");
    docs.push_back(j.dump());
  }
  return {docs[0] == docs[1], "two mc runs, " + std::to_string(docs[0].size()) + " bytes each, " +
                                  (docs[0] == docs[1] ? "identical" : "different") + " without wall time"};
}

struct Criterion {
  std::function<Outcome()> run;
  double budget_seconds;
};

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, Criterion> criteria{
      {1, {criterion1, 10}}, {2, {criterion2, 5}},   {3, {criterion3, 5}},
      {4, {criterion4, 60}}, {5, {criterion5, 30}},  {6, {criterion6, 300}},
      {7, {criterion7, 600}}, {8, {criterion8, 5}}, {9, {criterion9, 600}},
  };
  std::vector<int> selected;
  if (argc == 3 && std::string(argv[1]) == "--criterion") {
    selected.push_back(std::atoi(argv[2]));
    if (!criteria.contains(selected[0])) {
      std::cerr << "unknown criterion " << argv[2] << "\n";
      return 2;
    }
  } else if (argc == 1) {
    for (const auto& [k, _] : criteria) selected.push_back(k);
  } else {
    std::cerr << "usage: acceptance [--criterion N]\n";
    return 2;
  }

  bool all = true;
  for (int k : selected) {
    const auto& c = criteria.at(k);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.pass && in_time;
    all = all && pass;
    std::cout << "criterion " << k << ": " << (pass ? "PASS" : "FAIL") << " - " << o.detail << "; "
              << fmt(secs) << " s (budget " << c.budget_seconds << " s" << (in_time ? "" : ", exceeded") << ")"
              << std::endl;
  }
  return all ? 0 : 1;
}
