#include "qregress/operator_core.hpp"

#include "qregress/error.hpp"
#include "qregress/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qregress {

namespace {

Matrix from_rows(std::size_t dim, const RowList& rows) {
  if (rows.size() != dim) {
    throw Error(Errc::dimension_mismatch,
                "expected " + std::to_string(dim) + " rows, got " + std::to_string(rows.size()));
  }
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (row.size() != dim) {
      throw Error(Errc::dimension_mismatch, "row " + std::to_string(i) + " has " +
                                                std::to_string(row.size()) + " entries");
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

void check_square(std::size_t dim, const Matrix& m) {
  if (dim == 0) throw Error(Errc::dimension_mismatch, "dimension must be at least 1");
  if (static_cast<std::size_t>(m.rows()) != dim || static_cast<std::size_t>(m.cols()) != dim) {
    throw Error(Errc::dimension_mismatch, "entries are " + std::to_string(m.rows()) + "x" +
                                              std::to_string(m.cols()) + ", expected " +
                                              std::to_string(dim) + "x" + std::to_string(dim));
  }
  if (!m.allFinite()) throw Error(Errc::invalid_parameter, "entries must be finite");
}

Matrix symmetrized(const Matrix& m) {
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol) {
    throw Error(Errc::asymmetry_too_large, "max |a_ij - a_ji| = " + std::to_string(asym));
  }
  Matrix s = 0.5 * (m + m.transpose());
  return s;
}

void check_dims(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(Errc::dimension_mismatch,
                "dimensions " + std::to_string(a) + " and " + std::to_string(b) + " differ");
  }
}

// Flip sign so the largest-magnitude component (first on ties) is positive.
void canonical_sign(Eigen::Ref<Vector> v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0) v = -v;
}

}  // namespace

SymmetricOperator make_symmetric(std::size_t dim, const Matrix& entries) {
  check_square(dim, entries);
  return SymmetricOperator(symmetrized(entries));
}

SymmetricOperator make_symmetric(std::size_t dim, const RowList& entries) {
  return make_symmetric(dim, from_rows(dim, entries));
}

QuantumState make_state(std::size_t dim, const Matrix& entries) {
  check_square(dim, entries);
  Matrix m = symmetrized(entries);
  const double tr = m.trace();
  if (std::abs(tr - 1.0) > kTraceTol) {
    throw Error(Errc::not_unit_trace, "trace is " + std::to_string(tr));
  }
  const EigenSystem es = jacobi_eigen(m);
  const double smallest = es.eigenvalues(0);
  if (smallest < -kPsdTol) {
    throw Error(Errc::not_positive_semidefinite,
                "smallest eigenvalue is " + std::to_string(smallest));
  }
  return QuantumState(std::move(m));
}

QuantumState make_state(std::size_t dim, const RowList& entries) {
  return make_state(dim, from_rows(dim, entries));
}

EigenSystem jacobi_eigen(const Matrix& input, int max_sweeps) {
  const Eigen::Index n = input.rows();
  Matrix a = input;
  Matrix v = Matrix::Identity(n, n);
  const double frob = a.norm();
  const double threshold = 1e-12 * frob;

  auto off_diagonal = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (;; ++sweep) {
    if (off_diagonal() <= threshold) break;
    if (sweep >= max_sweeps) {
      throw Error(Errc::eigensolver_failure,
                  "Jacobi did not converge in " + std::to_string(max_sweeps) + " sweeps");
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });

  EigenSystem out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    out.eigenvectors.col(k) = v.col(src);
    canonical_sign(out.eigenvectors.col(k));
  }
  out.sweeps = sweep;
  return out;
}

double default_cluster_tol(const SymmetricOperator& op) {
  return 1e-8 * op.max_abs() * static_cast<double>(op.dim());
}

SpectralDecomposition spectral_decompose(const SymmetricOperator& op,
                                         std::optional<double> cluster_tol) {
  const double tol = cluster_tol.value_or(default_cluster_tol(op));
  if (!(tol >= 0.0)) throw Error(Errc::invalid_parameter, "cluster_tol must be nonnegative");

  const EigenSystem es = jacobi_eigen(op.matrix());
  const Eigen::Index n = es.eigenvalues.size();

  SpectralDecomposition d;
  d.cluster_tol = tol;
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && es.eigenvalues(end) - es.eigenvalues(end - 1) <= tol) ++end;
    const Eigen::Index width = end - start;
    const Matrix basis = es.eigenvectors.middleCols(start, width);
    d.eigenvalues.push_back(es.eigenvalues.segment(start, width).mean());
    d.projections.push_back(basis * basis.transpose());
    d.bases.push_back(basis);
    start = end;
  }
  return d;
}

SymmetricOperator reconstruct(const SpectralDecomposition& decomp) {
  const auto n = static_cast<Eigen::Index>(decomp.dim());
  Matrix sum = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < decomp.size(); ++k) sum += decomp.eigenvalues[k] * decomp.projections[k];
  // Projections are symmetric up to rounding; fold the residue away.
  sum = 0.5 * (sum + sum.transpose()).eval();
  return make_symmetric(decomp.dim(), sum);
}

double quantum_expectation(const QuantumState& state, const SymmetricOperator& op) {
  check_dims(state.dim(), op.dim());
  // tr(phi X) = sum_ij phi_ij X_ji
  return state.matrix().cwiseProduct(op.matrix().transpose()).sum();
}

EigenPMF eigen_pmf(const QuantumState& state, const SpectralDecomposition& decomp) {
  check_dims(state.dim(), decomp.dim());
  EigenPMF pmf;
  pmf.support = decomp.eigenvalues;
  pmf.masses.reserve(decomp.size());
  double raw_sum = 0.0;
  double clamped_sum = 0.0;
  for (const auto& p : decomp.projections) {
    const double m = state.matrix().cwiseProduct(p.transpose()).sum();
    raw_sum += m;
    const double kept = std::max(m, 0.0);
    clamped_sum += kept;
    pmf.masses.push_back(kept);
  }
  if (clamped_sum - raw_sum > 1e-12) {
    for (double& m : pmf.masses) m /= clamped_sum;
  }
  return pmf;
}

double commutator_norm(const QuantumState& state, const SymmetricOperator& op) {
  check_dims(state.dim(), op.dim());
  const Matrix c = state.matrix() * op.matrix() - op.matrix() * state.matrix();
  return c.cwiseAbs().maxCoeff();
}

SymmetricOperator diagonal_operator(const std::vector<double>& diagonal) {
  const auto n = static_cast<Eigen::Index>(diagonal.size());
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = diagonal[static_cast<std::size_t>(i)];
  return make_symmetric(diagonal.size(), m);
}

SymmetricOperator random_symmetric(std::size_t dim, std::uint64_t seed) {
  const CounterRng rng({seed, 0}, RngDomain::operator_generation);
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix m(n, n);
  std::uint64_t draw = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double x = 2.0 * rng.uniform(draw++) - 1.0;
      m(i, j) = x;
      m(j, i) = x;
    }
  }
  return make_symmetric(dim, m);
}

QuantumState maximally_mixed(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return make_state(dim, Matrix(Matrix::Identity(n, n) / static_cast<double>(dim)));
}

QuantumState gibbs_state(const SymmetricOperator& op, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(Errc::invalid_parameter, "temperature must be positive");
  }
  const SpectralDecomposition d = spectral_decompose(op);
  const double shift = d.eigenvalues.front();
  const auto n = static_cast<Eigen::Index>(op.dim());
  Matrix m = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < d.size(); ++k) {
    m += std::exp(-(d.eigenvalues[k] - shift) / temperature) * d.projections[k];
  }
  m /= m.trace();
  m = 0.5 * (m + m.transpose()).eval();
  return make_state(op.dim(), m);
}

}  // namespace qregress
