#pragma once

// Shared fixtures for the unit tests. Test-side randomness comes from
// std::mt19937_64 so it never shares a generator with the code under test.

#include "qregress/error.hpp"
#include "qregress/operator_core.hpp"

#include <doctest.h>

#include <Eigen/QR>

#include <random>

namespace qtest {

using qregress::Matrix;

#define CHECK_ERRC(expr, errc)                                \
  do {                                                        \
    bool qtest_thrown = false;                                \
    try {                                                     \
      (void)(expr);                                           \
    } catch (const qregress::Error& qtest_e) {                \
      qtest_thrown = true;                                    \
      CHECK_MESSAGE(qtest_e.code() == (errc), qtest_e.what()); \
    }                                                         \
    CHECK_MESSAGE(qtest_thrown, "expected " #errc);           \
  } while (0)

inline Matrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = u(gen);
  return m;
}

inline Matrix random_symmetric_matrix(std::mt19937_64& gen, std::size_t dim) {
  const Matrix a = random_matrix(gen, dim, dim);
  return (a + a.transpose()) / 2.0;
}

inline Matrix random_orthogonal(std::mt19937_64& gen, std::size_t dim) {
  const Matrix a = random_matrix(gen, dim, dim);
  return Eigen::HouseholderQR<Matrix>(a).householderQ();
}

// B B^T / tr(B B^T): a full-rank density matrix in general position.
inline Matrix random_density(std::mt19937_64& gen, std::size_t dim) {
  const Matrix b = random_matrix(gen, dim, dim);
  Matrix rho = b * b.transpose();
  rho /= rho.trace();
  return (rho + rho.transpose()) / 2.0;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace qtest
