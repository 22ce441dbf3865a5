#include "projdecomp/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "projdecomp/error.hpp"

namespace projdecomp {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const std::vector<double>& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::from_real(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) throw Error(ErrorCode::DimensionMismatch, "ragged matrix rows");
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Matrix Matrix::adjoint() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = std::conj((*this)(i, j));
  return t;
}

Complex Matrix::trace() const {
  Complex s = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
  return s;
}

double Matrix::frobenius_norm() const {
  // Scaled accumulation keeps tiny residuals from underflowing.
  double scale = 0.0;
  for (const auto& z : data_) scale = std::max({scale, std::abs(z.real()), std::abs(z.imag())});
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (const auto& z : data_) s += std::norm(z / scale);
  return scale * std::sqrt(s);
}

double Matrix::max_imag() const {
  double m = 0.0;
  for (const auto& z : data_) m = std::max(m, std::abs(z.imag()));
  return m;
}

std::vector<Complex> Matrix::column(std::size_t j) const {
  std::vector<Complex> v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw Error(ErrorCode::DimensionMismatch, "matrix sum shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw Error(ErrorCode::DimensionMismatch, "matrix difference shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(Complex s) {
  for (auto& z : data_) z *= s;
  return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols_ != b.rows_) throw Error(ErrorCode::DimensionMismatch, "matrix product shape mismatch");
  Matrix c(a.rows_, b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i) {
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex(0.0)) continue;
      const Complex* brow = &b.data_[k * b.cols_];
      Complex* crow = &c.data_[i * c.cols_];
      for (std::size_t j = 0; j < b.cols_; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

double frobenius_distance(const Matrix& a, const Matrix& b) { return (a - b).frobenius_norm(); }

Matrix outer(const std::vector<Complex>& v, const std::vector<Complex>& w) {
  Matrix m(v.size(), w.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j) m(i, j) = v[i] * std::conj(w[j]);
  return m;
}

}  // namespace projdecomp
