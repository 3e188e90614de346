#include "qregress/estimators.hpp"

#include "qregress/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qregress {

namespace {

constexpr double kInvPhi = 0.6180339887498948482;  // (sqrt(5) - 1) / 2
constexpr double kInitialBracketFraction = 1e-2;

void require_design(const RegressionData& data) {
  if (!(data.design_magnitude() > 0.0)) {
    throw Error(Errc::degenerate_design, "S_n = sum lambda_j^2 is zero");
  }
}

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// A point of the subdifferential of the objective at beta (sum of the
// per-term subgradient midpoints). Its sign is exact enough to steer the
// search where objective values differ by less than rounding.
double objective_slope(const LossFunction& loss, const RegressionData& data, double beta) {
  CompensatedSum s;
  const auto& l = data.lambdas();
  const auto& m = data.mus();
  for (std::size_t j = 0; j < l.size(); ++j) s.add(-l[j] * rho_prime(loss, m[j] - beta * l[j]).value);
  return s.value();
}

// Objective values are sums of nonnegative terms, so a few ulps of the
// larger value bound the evaluation error.
bool indistinguishable(double fa, double fb) {
  constexpr double kNoise = 16.0 * std::numeric_limits<double>::epsilon();
  return std::abs(fa - fb) <= kNoise * std::max(fa, fb);
}

}  // namespace

RegressionData::RegressionData(std::vector<double> lambdas, std::vector<double> mus)
    : lambdas_(std::move(lambdas)), mus_(std::move(mus)) {
  if (lambdas_.size() != mus_.size()) {
    throw Error(Errc::dimension_mismatch, "lambdas and mus differ in length");
  }
  if (lambdas_.empty()) throw Error(Errc::dimension_mismatch, "regression data is empty");
  CompensatedSum s;
  for (std::size_t j = 0; j < lambdas_.size(); ++j) {
    if (!std::isfinite(lambdas_[j]) || !std::isfinite(mus_[j])) {
      throw Error(Errc::invalid_parameter, "regression data must be finite");
    }
    s.add(lambdas_[j] * lambdas_[j]);
  }
  s_n_ = s.value();
}

RegressionData RegressionData::from_samples(std::span<const Sample> samples) {
  std::vector<double> lambdas;
  std::vector<double> mus;
  lambdas.reserve(samples.size());
  mus.reserve(samples.size());
  for (const auto& s : samples) {
    lambdas.push_back(s.lambda);
    mus.push_back(s.mu);
  }
  return RegressionData(std::move(lambdas), std::move(mus));
}

double objective(const LossFunction& loss, const RegressionData& data, double beta) {
  const auto& lambdas = data.lambdas();
  const auto& mus = data.mus();
  CompensatedSum s;
  for (std::size_t j = 0; j < lambdas.size(); ++j) s.add(rho_eval(loss, mus[j] - beta * lambdas[j]));
  return s.value();
}

EstimatorResult estimate_ls(const RegressionData& data) {
  require_design(data);
  CompensatedSum cross;
  const auto& lambdas = data.lambdas();
  const auto& mus = data.mus();
  for (std::size_t j = 0; j < lambdas.size(); ++j) cross.add(lambdas[j] * mus[j]);
  EstimatorResult r;
  r.beta_hat = cross.value() / data.design_magnitude();
  r.objective_value = objective(LossFunction::square(), data, r.beta_hat);
  r.solver = "least_squares";
  r.iterations = 1;
  return r;
}

EstimatorResult estimate_weighted_quantile(const RegressionData& data, double alpha) {
  const LossFunction loss = LossFunction::quantile(alpha);
  require_design(data);

  // For lambda != 0 the term is |lambda| rho(r_j - beta) with r_j = mu_j / lambda_j;
  // the sign of lambda flips the tilt. Slope of the objective in beta between
  // candidates: sum_{r_j < beta} below_j - sum_{r_j > beta} above_j.
  struct Candidate {
    double slope;
    double below;
    double above;
  };
  const double tilt = 2.0 * alpha - 1.0;
  std::vector<Candidate> cands;
  cands.reserve(data.size());
  const auto& lambdas = data.lambdas();
  const auto& mus = data.mus();
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    const double lam = lambdas[j];
    if (lam == 0.0) continue;
    const double w = std::abs(lam);
    const double t = lam > 0 ? tilt : -tilt;
    cands.push_back({mus[j] / lam, w * (1.0 - t), w * (1.0 + t)});
  }
  std::sort(cands.begin(), cands.end(),
            [](const Candidate& a, const Candidate& b) { return a.slope < b.slope; });

  double above_total = 0.0;
  double weight_total = 0.0;
  for (const auto& c : cands) {
    above_total += c.above;
    weight_total += c.below + c.above;
  }
  const double eps = 1e-13 * weight_total;

  EstimatorResult r;
  r.solver = alpha == 0.5 ? "weighted_median" : "weighted_quantile";
  double below_sum = 0.0;
  double above_sum = above_total;
  std::size_t i = 0;
  int groups = 0;
  while (i < cands.size()) {
    std::size_t end = i;
    double group_below = 0.0;
    double group_above = 0.0;
    while (end < cands.size() && cands[end].slope == cands[i].slope) {
      group_below += cands[end].below;
      group_above += cands[end].above;
      ++end;
    }
    ++groups;
    const double right_slope = (below_sum + group_below) - (above_sum - group_above);
    if (right_slope >= -eps) {
      const double v = cands[i].slope;
      if (right_slope <= eps && end < cands.size()) {
        const double next = cands[end].slope;
        r.minimizer_interval = std::make_pair(v, next);
        r.beta_hat = 0.5 * (v + next);
      } else {
        r.beta_hat = v;
      }
      break;
    }
    below_sum += group_below;
    above_sum -= group_above;
    i = end;
  }
  r.iterations = groups;
  r.objective_value = objective(loss, data, r.beta_hat);
  return r;
}

EstimatorResult estimate_general(const LossFunction& loss, const RegressionData& data, double tol,
                                 int max_iter) {
  require_design(data);
  if (!(tol > 0.0)) throw Error(Errc::invalid_parameter, "tol must be positive");
  if (max_iter < 1) throw Error(Errc::invalid_parameter, "max_iter must be positive");

  const auto f = [&](double b) { return objective(loss, data, b); };
  const auto fail_if_bad = [](double v) {
    if (!std::isfinite(v)) throw Error(Errc::bracket_failure, "objective is not finite");
  };

  // Expand until f(lo) >= f(mid) <= f(hi).
  double mid = estimate_ls(data).beta_hat;
  double h = kInitialBracketFraction * (1.0 + std::abs(mid));
  double lo = mid - h;
  double hi = mid + h;
  double f_mid = f(mid);
  double f_lo = f(lo);
  double f_hi = f(hi);
  int iterations = 0;
  for (;;) {
    fail_if_bad(f_mid);
    fail_if_bad(f_lo);
    fail_if_bad(f_hi);
    if (f_lo >= f_mid && f_hi >= f_mid) break;
    if (++iterations > max_iter) {
      throw Error(Errc::bracket_failure, "objective keeps decreasing; no bracket found");
    }
    h *= 2.0;
    if (f_hi < f_mid) {
      lo = mid;
      f_lo = f_mid;
      mid = hi;
      f_mid = f_hi;
      hi = mid + h;
      f_hi = f(hi);
    } else {
      hi = mid;
      f_hi = f_mid;
      mid = lo;
      f_mid = f_lo;
      lo = mid - h;
      f_lo = f(lo);
    }
  }

  EstimatorResult r;
  r.search_bracket = std::make_pair(lo, hi);

  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int golden = 0;
  while (b - a > tol * (1.0 + std::abs(0.5 * (a + b))) && golden < max_iter) {
    ++golden;
    const bool keep_left = indistinguishable(fc, fd)
                               ? objective_slope(loss, data, 0.5 * (c + d)) >= 0.0
                               : fc <= fd;
    if (keep_left) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }

  r.beta_hat = 0.5 * (a + b);
  r.objective_value = f(r.beta_hat);
  r.solver = "golden_section";
  r.iterations = iterations + golden;
  return r;
}

EstimatorResult fit(const LossFunction& loss, const RegressionData& data) {
  switch (loss.family()) {
    case LossFamily::square:
      return estimate_ls(data);
    case LossFamily::absolute:
      return estimate_weighted_quantile(data, 0.5);
    case LossFamily::quantile:
      return estimate_weighted_quantile(data, loss.parameter());
    case LossFamily::lq:
      if (loss.parameter() == 1.0) return estimate_weighted_quantile(data, 0.5);
      if (loss.parameter() == 2.0) return estimate_ls(data);
      return estimate_general(loss, data);
    case LossFamily::huber:
      return estimate_general(loss, data);
  }
  return estimate_general(loss, data);
}

double grid_oracle(const LossFunction& loss, const RegressionData& data, double lo, double hi,
                   double step) {
  if (!(lo < hi)) throw Error(Errc::invalid_parameter, "grid needs lo < hi");
  if (!(step > 0.0)) throw Error(Errc::invalid_parameter, "grid step must be positive");
  const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  double best_beta = lo;
  double best_value = objective(loss, data, lo);
  for (long long i = 1; i <= count; ++i) {
    const double beta = lo + static_cast<double>(i) * step;
    const double value = objective(loss, data, beta);
    if (value < best_value) {
      best_value = value;
      best_beta = beta;
    }
  }
  return best_beta;
}

bool is_local_minimum(const LossFunction& loss, const RegressionData& data, double beta_hat) {
  const double probe = 1e-6 * (1.0 + std::abs(beta_hat));
  const double f0 = objective(loss, data, beta_hat);
  double scale = 1.0 + std::abs(f0);
  for (double m : data.mus()) scale += std::abs(m);
  const double slack = 1e-12 * scale;
  return f0 <= objective(loss, data, beta_hat - probe) + slack &&
         f0 <= objective(loss, data, beta_hat + probe) + slack;
}

}  // namespace qregress
