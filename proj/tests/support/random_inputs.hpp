#pragma once

#include <random>
#include <vector>

#include "projdecomp/matcore.hpp"
#include "projdecomp/rational.hpp"

namespace projdecomp::testing {

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, bool complex = true) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = Complex(g(rng), complex ? g(rng) : 0.0);
  return m;
}

/// Random orthonormal columns via Gram–Schmidt.
inline Matrix random_isometry(std::mt19937_64& rng, std::size_t n, std::size_t r) {
  Matrix q = random_matrix(rng, n, r);
  for (std::size_t c = 0; c < r; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      Complex dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += std::conj(q(i, p)) * q(i, c);
      for (std::size_t i = 0; i < n; ++i) q(i, c) -= dot * q(i, p);
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) nrm += std::norm(q(i, c));
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < n; ++i) q(i, c) /= nrm;
  }
  return q;
}

/// PSD matrix of the given rank with trace exactly `trace` up to rounding.
inline HermitianMatrix random_psd(std::mt19937_64& rng, std::size_t n, std::size_t rank, double trace) {
  const Matrix g = random_matrix(rng, n, rank);
  Matrix a = g * g.adjoint();
  a *= Complex(trace / a.trace().real());
  return make_hermitian_unchecked(std::move(a));
}

inline Rational random_rational(std::mt19937_64& rng, long long num_lo, long long num_hi, long long den_hi) {
  std::uniform_int_distribution<long long> den(1, den_hi);
  const long long d = den(rng);
  std::uniform_int_distribution<long long> num(num_lo * d, num_hi * d);
  return Rational(num(rng), d);
}

}  // namespace projdecomp::testing
