#include "qregress/sampling.hpp"

#include "qregress/detail/numfmt.hpp"
#include "qregress/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace qregress {

namespace {

constexpr double kEigenCheckTol = 1e-8;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(Errc::invalid_parameter, std::string(name) + " must be a positive finite number");
  }
}

// Box-Muller on the first two uniforms of the stream.
double standard_normal(VariateStream& s) {
  const double u1 = s.next_uniform();
  const double u2 = s.next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double laplace_from_uniform(double u, double scale) {
  const double d = u - 0.5;
  const double tail = 1.0 - 2.0 * std::abs(d);
  return -scale * (d < 0 ? -1.0 : 1.0) * std::log(tail);
}

// Bailey's polar construction; exact for any df > 0.
double student_t_variate(VariateStream& s, double df) {
  for (;;) {
    const double u = 2.0 * s.next_uniform() - 1.0;
    const double v = 2.0 * s.next_uniform() - 1.0;
    const double w = u * u + v * v;
    if (w >= 1.0 || w == 0.0) continue;
    return u * std::sqrt(df * (std::pow(w, -2.0 / df) - 1.0) / w);
  }
}

double normal_pdf(double x, double sigma) {
  const double z = x / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

TruePair build_true_pair(const SymmetricOperator& x, double beta0) {
  if (beta0 == 0.0) throw Error(Errc::zero_beta, "beta0 must be nonzero");
  if (!std::isfinite(beta0)) throw Error(Errc::invalid_parameter, "beta0 must be finite");

  SymmetricOperator y = make_symmetric(x.dim(), Matrix(beta0 * x.matrix()));
  SpectralDecomposition dx = spectral_decompose(x);
  const SpectralDecomposition dy = spectral_decompose(y);

  // Same eigenspaces, eigenvalues mapped by mu = beta0 lambda (order reverses for beta0 < 0).
  const std::size_t k = dx.size();
  bool ok = dy.size() == k;
  for (std::size_t i = 0; ok && i < k; ++i) {
    const std::size_t j = beta0 > 0 ? i : k - 1 - i;
    const double expected = beta0 * dx.eigenvalues[i];
    ok = std::abs(dy.eigenvalues[j] - expected) <= kEigenCheckTol * (1.0 + std::abs(expected)) &&
         (dy.projections[j] - dx.projections[i]).cwiseAbs().maxCoeff() <= kEigenCheckTol;
  }
  if (!ok) {
    throw Error(Errc::eigensolver_failure, "X and beta0*X do not share eigenspaces numerically");
  }
  return TruePair{x, std::move(y), beta0, std::move(dx)};
}

ErrorModel ErrorModel::gaussian(double sigma) {
  require_positive(sigma, "sigma");
  return {ErrorFamily::gaussian, sigma, 0.0, 0.0};
}

ErrorModel ErrorModel::laplace(double scale) {
  require_positive(scale, "scale");
  return {ErrorFamily::laplace, scale, 0.0, 0.0};
}

ErrorModel ErrorModel::student_t(double df, double scale) {
  require_positive(df, "df");
  require_positive(scale, "scale");
  return {ErrorFamily::student_t, df, scale, 0.0};
}

ErrorModel ErrorModel::contaminated(double sigma, double outlier_sigma, double outlier_prob) {
  require_positive(sigma, "sigma");
  require_positive(outlier_sigma, "outlier_sigma");
  if (!(outlier_prob >= 0.0 && outlier_prob < 1.0)) {
    throw Error(Errc::invalid_parameter, "outlier_prob must lie in [0, 1)");
  }
  return {ErrorFamily::contaminated, sigma, outlier_sigma, outlier_prob};
}

double ErrorModel::density(double x) const {
  switch (family_) {
    case ErrorFamily::gaussian:
      return normal_pdf(x, p0_);
    case ErrorFamily::laplace:
      return std::exp(-std::abs(x) / p0_) / (2.0 * p0_);
    case ErrorFamily::student_t: {
      const double df = p0_;
      const double z = x / p1_;
      const double log_norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                              0.5 * std::log(df * std::numbers::pi);
      return std::exp(log_norm - 0.5 * (df + 1.0) * std::log1p(z * z / df)) / p1_;
    }
    case ErrorFamily::contaminated:
      return (1.0 - p2_) * normal_pdf(x, p0_) + p2_ * normal_pdf(x, p1_);
  }
  return 0.0;
}

double ErrorModel::moment_limit() const noexcept {
  return family_ == ErrorFamily::student_t ? p0_ : std::numeric_limits<double>::infinity();
}

std::string ErrorModel::describe() const {
  using detail::format_number;
  switch (family_) {
    case ErrorFamily::gaussian:
      return "gaussian(" + format_number(p0_) + ")";
    case ErrorFamily::laplace:
      return "laplace(" + format_number(p0_) + ")";
    case ErrorFamily::student_t:
      return "student_t(" + format_number(p0_) + "," + format_number(p1_) + ")";
    case ErrorFamily::contaminated:
      return "contaminated(" + format_number(p0_) + "," + format_number(p1_) + "," +
             format_number(p2_) + ")";
  }
  return "unknown";
}

double error_draw(const ErrorModel& model, const CounterRng& rng, std::uint64_t index) {
  VariateStream s(rng, index);
  switch (model.family()) {
    case ErrorFamily::gaussian:
      return model.sigma() * standard_normal(s);
    case ErrorFamily::laplace:
      return laplace_from_uniform(s.next_uniform(), model.scale());
    case ErrorFamily::student_t:
      return model.scale() * student_t_variate(s, model.df());
    case ErrorFamily::contaminated: {
      // Normal first so that outlier_prob = 0 reproduces gaussian(sigma) draw for draw.
      const double z = standard_normal(s);
      const double pick = s.next_uniform();
      return (pick < model.outlier_prob() ? model.outlier_sigma() : model.sigma()) * z;
    }
  }
  return 0.0;
}

std::vector<Sample> sample_eigen_pairs(const EigenPMF& pmf, const TruePair& pair, std::size_t n,
                                       RngSeed seed) {
  if (pmf.support.empty()) throw Error(Errc::empty_support, "pmf has no support points");
  if (pmf.masses.size() != pmf.support.size()) {
    throw Error(Errc::dimension_mismatch, "pmf support and masses differ in length");
  }
  std::vector<double> cumulative(pmf.masses.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < pmf.masses.size(); ++k) {
    acc += pmf.masses[k];
    cumulative[k] = acc;
  }
  if (!(acc > 0.0)) throw Error(Errc::empty_support, "pmf has zero total mass");
  std::size_t last = pmf.masses.size() - 1;
  while (last > 0 && pmf.masses[last] == 0.0) --last;

  const CounterRng rng(seed, RngDomain::eigen_sampling);
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = rng.uniform(j) * acc;
    std::size_t k = 0;
    while (k < last && !(u < cumulative[k])) ++k;
    const double lambda = pmf.support[k];
    out.push_back(Sample{lambda, pair.beta0 * lambda, k, 0.0});
  }
  return out;
}

std::vector<Sample> apply_error(std::vector<Sample> samples, const ErrorModel& model, double beta,
                                RngSeed seed) {
  const CounterRng rng(seed, RngDomain::errors);
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const double fitted = beta * samples[j].lambda;
    samples[j].mu = fitted + error_draw(model, rng, j);
    // The error actually carried by mu after rounding, so mu - beta*lambda == error bitwise.
    samples[j].error = samples[j].mu - fitted;
  }
  return samples;
}

}  // namespace qregress
