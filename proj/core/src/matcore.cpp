#include "projdecomp/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "projdecomp/error.hpp"

namespace projdecomp {

namespace {

constexpr int kMaxSweeps = 100;
constexpr int kPolishSweeps = 2;

Matrix symmetrized(Matrix m) {
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = Complex(m(i, i).real(), 0.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      const Complex avg = 0.5 * (m(i, j) + std::conj(m(j, i)));
      m(i, j) = avg;
      m(j, i) = std::conj(avg);
    }
  }
  return m;
}

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

// One cyclic-by-row sweep of complex Jacobi rotations on (a, v).
void jacobi_sweep(Matrix& a, Matrix& v) {
  const std::size_t n = a.rows();
  for (std::size_t p = 0; p + 1 < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      const Complex apq = a(p, q);
      const double mag = std::abs(apq);
      if (mag < std::numeric_limits<double>::min()) continue;
      const Complex phase = apq / mag;
      const double app = a(p, p).real();
      const double aqq = a(q, q).real();
      const double theta = (aqq - app) / (2.0 * mag);
      double t;
      if (std::abs(theta) > 1e150) {
        t = 0.5 / theta;
      } else {
        t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
      }
      const double c = 1.0 / std::sqrt(t * t + 1.0);
      const double s = t * c;
      // U = diag(1, conj(phase)) · [[c, s], [-s, c]]
      const Complex u00 = c;
      const Complex u01 = s;
      const Complex u10 = -s * std::conj(phase);
      const Complex u11 = c * std::conj(phase);
      for (std::size_t k = 0; k < n; ++k) {
        const Complex akp = a(k, p);
        const Complex akq = a(k, q);
        a(k, p) = akp * u00 + akq * u10;
        a(k, q) = akp * u01 + akq * u11;
      }
      for (std::size_t k = 0; k < n; ++k) {
        const Complex apk = a(p, k);
        const Complex aqk = a(q, k);
        a(p, k) = std::conj(u00) * apk + std::conj(u10) * aqk;
        a(q, k) = std::conj(u01) * apk + std::conj(u11) * aqk;
      }
      a(p, q) = 0.0;
      a(q, p) = 0.0;
      a(p, p) = app - t * mag;
      a(q, q) = aqq + t * mag;
      for (std::size_t k = 0; k < n; ++k) {
        const Complex vkp = v(k, p);
        const Complex vkq = v(k, q);
        v(k, p) = vkp * u00 + vkq * u10;
        v(k, q) = vkp * u01 + vkq * u11;
      }
    }
  }
}

double snapped(double x, double endpoint, double tol) {
  if (std::isfinite(endpoint) && std::abs(x - endpoint) <= tol) return endpoint;
  return x;
}

bool in_interval(double x, double lo, double hi, bool lo_open, bool hi_open, double tol) {
  const double xl = snapped(x, lo, tol);
  const double xh = snapped(x, hi, tol);
  const bool above = lo_open ? xl > lo : xl >= lo;
  const bool below = hi_open ? xh < hi : xh <= hi;
  return above && below;
}

Matrix projection_from_columns(const Matrix& vecs, const std::vector<std::size_t>& cols) {
  const std::size_t n = vecs.rows();
  Matrix p(n, n);
  for (std::size_t c : cols) {
    for (std::size_t i = 0; i < n; ++i) {
      const Complex vi = vecs(i, c);
      if (vi == Complex(0.0)) continue;
      for (std::size_t j = 0; j < n; ++j) p(i, j) += vi * std::conj(vecs(j, c));
    }
  }
  return p;
}

}  // namespace

void TolerancePolicy::validate() const {
  for (double t : {sym_tol, proj_tol, eig_tol, rank_tol}) {
    if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "tolerances must be positive and finite");
  }
}

HermitianMatrix::HermitianMatrix(Matrix m, Trusted) : m_(symmetrized(std::move(m))) {}

HermitianMatrix::HermitianMatrix(const Matrix& m, const TolerancePolicy& tol) {
  if (!m.square()) throw Error(ErrorCode::DimensionMismatch, "Hermitian matrix must be square");
  const double asym = frobenius_distance(m, m.adjoint());
  if (!(asym <= tol.sym_tol * std::max(1.0, m.frobenius_norm()))) {
    throw Error(ErrorCode::NonHermitianInput,
                "matrix is not Hermitian: ‖A−A*‖_F = " + std::to_string(asym));
  }
  m_ = symmetrized(m);
}

HermitianMatrix make_hermitian_unchecked(Matrix m) { return HermitianMatrix(std::move(m), HermitianMatrix::Trusted{}); }

HermitianMatrix HermitianMatrix::diagonal(const std::vector<double>& d) { return make_hermitian_unchecked(Matrix::diagonal(d)); }
HermitianMatrix HermitianMatrix::zero(std::size_t n) { return make_hermitian_unchecked(Matrix(n, n)); }
HermitianMatrix HermitianMatrix::identity(std::size_t n) { return make_hermitian_unchecked(Matrix::identity(n)); }

HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) { return make_hermitian_unchecked(a.m_ + b.m_); }
HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) { return make_hermitian_unchecked(a.m_ - b.m_); }
HermitianMatrix operator*(double s, const HermitianMatrix& a) { return make_hermitian_unchecked(a.m_ * Complex(s)); }

ProjectionMatrix::ProjectionMatrix(const HermitianMatrix& p, const TolerancePolicy& tol) : p_(p) {
  const double res = idempotency_residual();
  if (!(res <= tol.proj_tol)) {
    throw Error(ErrorCode::NotAProjection, "matrix is not idempotent: ‖p²−p‖_F = " + std::to_string(res));
  }
  rank_ = static_cast<int>(std::llround(p_.trace()));
}

ProjectionMatrix ProjectionMatrix::onto_columns(const Matrix& cols, const TolerancePolicy& tol) {
  std::vector<std::size_t> idx(cols.cols());
  std::iota(idx.begin(), idx.end(), 0);
  return ProjectionMatrix(make_hermitian_unchecked(projection_from_columns(cols, idx)), tol);
}

ProjectionMatrix ProjectionMatrix::coordinates(std::size_t dim, const std::vector<std::size_t>& idx) {
  Matrix m(dim, dim);
  for (std::size_t i : idx) {
    if (i >= dim) throw Error(ErrorCode::IndexOutOfRange, "coordinate index out of range");
    m(i, i) = 1.0;
  }
  return ProjectionMatrix(make_hermitian_unchecked(m));
}

double ProjectionMatrix::idempotency_residual() const {
  return frobenius_distance(p_.matrix() * p_.matrix(), p_.matrix());
}

SpectralDecomposition eigh(const HermitianMatrix& a, const TolerancePolicy& tol) {
  const std::size_t n = a.dim();
  Matrix w = a.matrix();
  Matrix v = Matrix::identity(n);
  const double threshold = tol.eig_tol * a.frobenius_norm();
  int sweeps = 0;
  while (sweeps < kMaxSweeps && off_diagonal_norm(w) > threshold) {
    jacobi_sweep(w, v);
    ++sweeps;
  }
  for (int k = 0; k < kPolishSweeps; ++k) jacobi_sweep(w, v);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return w(i, i).real() < w(j, j).real(); });
  SpectralDecomposition sd;
  sd.eigenvalues.resize(n);
  sd.eigenvectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    sd.eigenvalues[c] = w(order[c], order[c]).real();
    for (std::size_t i = 0; i < n; ++i) sd.eigenvectors(i, c) = v(i, order[c]);
  }
  return sd;
}

HermitianMatrix apply_function(const SpectralDecomposition& sd, const std::function<double(double)>& f) {
  const std::size_t n = sd.eigenvectors.rows();
  const std::size_t m = sd.eigenvalues.size();
  Matrix out(n, n);
  for (std::size_t c = 0; c < m; ++c) {
    const double fc = f(sd.eigenvalues[c]);
    if (fc == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const Complex vi = sd.eigenvectors(i, c) * fc;
      if (vi == Complex(0.0)) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vi * std::conj(sd.eigenvectors(j, c));
    }
  }
  return make_hermitian_unchecked(out);
}

HermitianMatrix reconstruct(const SpectralDecomposition& sd) {
  return apply_function(sd, [](double x) { return x; });
}

ProjectionMatrix spectral_projection(const SpectralDecomposition& sd, double lo, double hi, bool lo_open,
                                     bool hi_open, const TolerancePolicy& tol) {
  if (lo > hi) throw Error(ErrorCode::InvalidArgument, "spectral interval with lo > hi");
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < sd.eigenvalues.size(); ++c) {
    if (in_interval(sd.eigenvalues[c], lo, hi, lo_open, hi_open, tol.rank_tol)) cols.push_back(c);
  }
  return ProjectionMatrix(make_hermitian_unchecked(projection_from_columns(sd.eigenvectors, cols)), tol);
}

ProjectionMatrix spectral_projection(const HermitianMatrix& a, double lo, double hi, bool lo_open, bool hi_open,
                                     const TolerancePolicy& tol) {
  return spectral_projection(eigh(a, tol), lo, hi, lo_open, hi_open, tol);
}

void require_psd(const SpectralDecomposition& sd, const TolerancePolicy& tol) {
  if (!sd.eigenvalues.empty() && sd.eigenvalues.front() < -tol.rank_tol) {
    throw Error(ErrorCode::NotPositive,
                "operator is not positive: smallest eigenvalue " + std::to_string(sd.eigenvalues.front()));
  }
}

ProjectionMatrix range_projection(const HermitianMatrix& a, const TolerancePolicy& tol) {
  const auto sd = eigh(a, tol);
  require_psd(sd, tol);
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < sd.eigenvalues.size(); ++c)
    if (sd.eigenvalues[c] > tol.rank_tol) cols.push_back(c);
  return ProjectionMatrix(make_hermitian_unchecked(projection_from_columns(sd.eigenvectors, cols)), tol);
}

int psd_rank(const HermitianMatrix& a, const TolerancePolicy& tol) {
  const auto sd = eigh(a, tol);
  require_psd(sd, tol);
  return static_cast<int>(std::count_if(sd.eigenvalues.begin(), sd.eigenvalues.end(),
                                        [&](double x) { return x > tol.rank_tol; }));
}

double operator_norm(const HermitianMatrix& a, const TolerancePolicy& tol) {
  if (a.dim() == 0) return 0.0;
  const auto sd = eigh(a, tol);
  return std::max(std::abs(sd.eigenvalues.front()), std::abs(sd.eigenvalues.back()));
}

HermitianMatrix psd_sqrt(const HermitianMatrix& a, const TolerancePolicy& tol) {
  const auto sd = eigh(a, tol);
  require_psd(sd, tol);
  return apply_function(sd, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

HermitianMatrix pinch(const HermitianMatrix& a, const std::vector<ProjectionMatrix>& partition,
                      const TolerancePolicy& tol) {
  const std::size_t n = a.dim();
  Matrix sum(n, n);
  for (std::size_t i = 0; i < partition.size(); ++i) {
    if (partition[i].dim() != n) throw Error(ErrorCode::BadPartition, "partition projection has wrong dimension");
    sum += partition[i].matrix();
    for (std::size_t j = i + 1; j < partition.size(); ++j) {
      const double cross = (partition[i].matrix() * partition[j].matrix()).frobenius_norm();
      if (cross > tol.proj_tol * std::sqrt(static_cast<double>(n))) {
        throw Error(ErrorCode::BadPartition, "partition projections " + std::to_string(i) + " and " +
                                                 std::to_string(j) + " are not orthogonal");
      }
    }
  }
  if (frobenius_distance(sum, Matrix::identity(n)) > tol.proj_tol * std::max<double>(1.0, partition.size())) {
    throw Error(ErrorCode::BadPartition, "partition does not sum to the identity");
  }
  Matrix out(n, n);
  for (const auto& q : partition) out += q.matrix() * a.matrix() * q.matrix();
  return make_hermitian_unchecked(out);
}

PolarDecomposition polar_isometry(const Matrix& b, const TolerancePolicy& tol) {
  const auto gram = make_hermitian_unchecked(b.adjoint() * b);
  const auto sd = eigh(gram, tol);
  double top = 0.0;
  for (double x : sd.eigenvalues) top = std::max(top, x);
  const double cut = std::max(tol.rank_tol * std::sqrt(top), std::numeric_limits<double>::min());
  auto modulus = apply_function(sd, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
  auto pinv = apply_function(sd, [cut](double x) {
    const double s = x > 0.0 ? std::sqrt(x) : 0.0;
    return s > cut ? 1.0 / s : 0.0;
  });
  return {b * pinv.matrix(), std::move(modulus)};
}

DefectExcessPair defect_excess(const HermitianMatrix& a, const TolerancePolicy& tol) {
  const auto sd = eigh(a, tol);
  require_psd(sd, tol);
  const double rt = tol.rank_tol;
  auto excess = apply_function(sd, [rt](double x) {
    const double y = snapped(x, 1.0, rt);
    return y > 1.0 ? y - 1.0 : 0.0;
  });
  auto defect = apply_function(sd, [rt](double x) {
    double y = snapped(x, 1.0, rt);
    y = snapped(y, 0.0, rt);
    return (y > 0.0 && y < 1.0) ? 1.0 - y : 0.0;
  });
  return {std::move(excess), std::move(defect)};
}

}  // namespace projdecomp
