#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "projdecomp/matrix.hpp"

namespace projdecomp {

struct TolerancePolicy {
  double sym_tol = 1e-10;
  double proj_tol = 1e-10;
  double eig_tol = 1e-10;
  double rank_tol = 1e-8;

  /// Throws InvalidArgument unless every tolerance is strictly positive.
  void validate() const;
};

/// Square matrix equal to its adjoint within sym_tol; stored exactly Hermitian.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const Matrix& m, const TolerancePolicy& tol = {});

  static HermitianMatrix diagonal(const std::vector<double>& d);
  static HermitianMatrix zero(std::size_t n);
  static HermitianMatrix identity(std::size_t n);

  std::size_t dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  const Complex& operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  double trace() const { return m_.trace().real(); }
  double frobenius_norm() const { return m_.frobenius_norm(); }

  friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b);
  friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b);
  friend HermitianMatrix operator*(double s, const HermitianMatrix& a);

 private:
  struct Trusted {};
  HermitianMatrix(Matrix m, Trusted);
  friend HermitianMatrix make_hermitian_unchecked(Matrix m);

  Matrix m_;
};

/// Symmetrize (m + m*)/2 without a tolerance check.
HermitianMatrix make_hermitian_unchecked(Matrix m);

class ProjectionMatrix {
 public:
  ProjectionMatrix() = default;
  /// Throws NotAProjection when ‖p²−p‖_F > proj_tol.
  explicit ProjectionMatrix(const HermitianMatrix& p, const TolerancePolicy& tol = {});

  /// Orthogonal projection onto the span of orthonormal columns.
  static ProjectionMatrix onto_columns(const Matrix& cols, const TolerancePolicy& tol = {});
  static ProjectionMatrix coordinates(std::size_t dim, const std::vector<std::size_t>& idx);

  const HermitianMatrix& underlying() const noexcept { return p_; }
  const Matrix& matrix() const noexcept { return p_.matrix(); }
  std::size_t dim() const noexcept { return p_.dim(); }
  int nominal_rank() const noexcept { return rank_; }
  double idempotency_residual() const;

 private:
  HermitianMatrix p_;
  int rank_ = 0;
};

struct SpectralDecomposition {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // columns
};

struct DefectExcessPair {
  HermitianMatrix excess;  // a₊
  HermitianMatrix defect;  // a₋
};

constexpr double kInf = std::numeric_limits<double>::infinity();

SpectralDecomposition eigh(const HermitianMatrix& a, const TolerancePolicy& tol = {});

/// V f(Λ) V* for a decomposition of some Hermitian matrix.
HermitianMatrix apply_function(const SpectralDecomposition& sd, const std::function<double(double)>& f);
HermitianMatrix reconstruct(const SpectralDecomposition& sd);

ProjectionMatrix spectral_projection(const HermitianMatrix& a, double lo, double hi, bool lo_open, bool hi_open,
                                     const TolerancePolicy& tol = {});
ProjectionMatrix spectral_projection(const SpectralDecomposition& sd, double lo, double hi, bool lo_open,
                                     bool hi_open, const TolerancePolicy& tol = {});

ProjectionMatrix range_projection(const HermitianMatrix& a, const TolerancePolicy& tol = {});

/// Number of eigenvalues > rank_tol; throws NotPositive when a is not PSD at tolerance.
int psd_rank(const HermitianMatrix& a, const TolerancePolicy& tol = {});
void require_psd(const SpectralDecomposition& sd, const TolerancePolicy& tol);
double operator_norm(const HermitianMatrix& a, const TolerancePolicy& tol = {});
HermitianMatrix psd_sqrt(const HermitianMatrix& a, const TolerancePolicy& tol = {});

HermitianMatrix pinch(const HermitianMatrix& a, const std::vector<ProjectionMatrix>& partition,
                      const TolerancePolicy& tol = {});

struct PolarDecomposition {
  Matrix v;
  HermitianMatrix modulus;
};

PolarDecomposition polar_isometry(const Matrix& b, const TolerancePolicy& tol = {});

DefectExcessPair defect_excess(const HermitianMatrix& a, const TolerancePolicy& tol = {});

}  // namespace projdecomp
