#pragma once

// Observed eigenvalue pairs under Y = beta0 X and the additive error terms
// of the reduced scalar model mu_j = beta lambda_j + e_j.

#include "qregress/operator_core.hpp"
#include "qregress/rng.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace qregress {

struct TruePair {
  SymmetricOperator x;
  SymmetricOperator y;
  double beta0;
  SpectralDecomposition x_spectrum;
};

TruePair build_true_pair(const SymmetricOperator& x, double beta0);

enum class ErrorFamily { gaussian, laplace, student_t, contaminated };

class ErrorModel {
 public:
  static ErrorModel gaussian(double sigma);
  static ErrorModel laplace(double scale);
  static ErrorModel student_t(double df, double scale);
  static ErrorModel contaminated(double sigma, double outlier_sigma, double outlier_prob);

  ErrorFamily family() const noexcept { return family_; }
  double sigma() const noexcept { return p0_; }   // gaussian, contaminated
  double scale() const noexcept { return family_ == ErrorFamily::student_t ? p1_ : p0_; }
  double df() const noexcept { return p0_; }      // student_t
  double outlier_sigma() const noexcept { return p1_; }
  double outlier_prob() const noexcept { return p2_; }

  // Probability density at x.
  double density(double x) const;
  // Finite absolute moments exist up to (but excluding) this order.
  double moment_limit() const noexcept;

  std::string describe() const;

  friend bool operator==(const ErrorModel&, const ErrorModel&) = default;

 private:
  ErrorModel(ErrorFamily f, double p0, double p1, double p2) : family_(f), p0_(p0), p1_(p1), p2_(p2) {}
  ErrorFamily family_;
  double p0_;
  double p1_;
  double p2_;
};

struct Sample {
  double lambda = 0.0;
  double mu = 0.0;
  std::size_t eigenvector_index = 0;
  double error = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Draw `index` of the error stream; each draw depends only on (rng, index).
double error_draw(const ErrorModel& model, const CounterRng& rng, std::uint64_t index);

// Noiseless eigenvalue pairs (lambda_j, beta0 lambda_j); lambda_j i.i.d. from pmf
// by inverse CDF over the ascending support.
std::vector<Sample> sample_eigen_pairs(const EigenPMF& pmf, const TruePair& pair, std::size_t n,
                                       RngSeed seed);

// Replace mu by beta lambda + e_j with e_j i.i.d. from the model.
std::vector<Sample> apply_error(std::vector<Sample> samples, const ErrorModel& model, double beta,
                                RngSeed seed);

}  // namespace qregress
