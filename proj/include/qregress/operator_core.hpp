#pragma once

// Finite-dimensional observables, density operators and their spectral data.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace qregress {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowList = std::vector<std::vector<double>>;

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;
inline constexpr int kJacobiMaxSweeps = 100;

// Real symmetric matrix standing in for a compact self-adjoint observable.
// Entries are exactly symmetric once constructed.
class SymmetricOperator {
 public:
  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(std::size_t i, std::size_t j) const {
    return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

 private:
  explicit SymmetricOperator(Matrix m) : m_(std::move(m)) {}
  Matrix m_;

  friend SymmetricOperator make_symmetric(std::size_t dim, const Matrix& entries);
};

// Density operator: symmetric, positive semi-definite, unit trace.
class QuantumState {
 public:
  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }

 private:
  explicit QuantumState(Matrix m) : m_(std::move(m)) {}
  Matrix m_;

  friend QuantumState make_state(std::size_t dim, const Matrix& entries);
};

struct EigenSystem {
  Vector eigenvalues;  // ascending
  Matrix eigenvectors; // column k pairs with eigenvalues[k]
  int sweeps = 0;
};

// Distinct eigenvalues (ascending) with the orthogonal projections onto
// their eigenspaces. bases[k] holds an orthonormal basis of eigenspace k
// as columns, in deterministic order.
struct SpectralDecomposition {
  std::vector<double> eigenvalues;
  std::vector<Matrix> projections;
  std::vector<Matrix> bases;
  double cluster_tol = 0.0;

  std::size_t dim() const {
    return projections.empty() ? 0 : static_cast<std::size_t>(projections.front().rows());
  }
  std::size_t size() const noexcept { return eigenvalues.size(); }
  std::size_t rank(std::size_t k) const { return static_cast<std::size_t>(bases.at(k).cols()); }
  // First basis vector of eigenspace k.
  Vector representative(std::size_t k) const { return bases.at(k).col(0); }
};

// Probability mass function of the observed eigenvalue, m_alpha = tr(phi P_alpha).
struct EigenPMF {
  std::vector<double> support;
  std::vector<double> masses;
};

SymmetricOperator make_symmetric(std::size_t dim, const Matrix& entries);
SymmetricOperator make_symmetric(std::size_t dim, const RowList& entries);

QuantumState make_state(std::size_t dim, const Matrix& entries);
QuantumState make_state(std::size_t dim, const RowList& entries);

// Cyclic Jacobi eigensolver for a symmetric matrix. Throws
// Errc::eigensolver_failure when the sweep cap is exceeded.
EigenSystem jacobi_eigen(const Matrix& a, int max_sweeps = kJacobiMaxSweeps);

double default_cluster_tol(const SymmetricOperator& op);

SpectralDecomposition spectral_decompose(const SymmetricOperator& op,
                                         std::optional<double> cluster_tol = std::nullopt);

SymmetricOperator reconstruct(const SpectralDecomposition& decomp);

double quantum_expectation(const QuantumState& state, const SymmetricOperator& op);

EigenPMF eigen_pmf(const QuantumState& state, const SpectralDecomposition& decomp);

// max |(phi X - X phi)_ij|; zero when the state commutes with the observable.
double commutator_norm(const QuantumState& state, const SymmetricOperator& op);

SymmetricOperator diagonal_operator(const std::vector<double>& diagonal);
// Entries uniform on [-1, 1], symmetric, fully determined by seed.
SymmetricOperator random_symmetric(std::size_t dim, std::uint64_t seed);

QuantumState maximally_mixed(std::size_t dim);
// exp(-X / temperature) normalised to unit trace.
QuantumState gibbs_state(const SymmetricOperator& op, double temperature);

}  // namespace qregress
