#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace projdecomp {

using Complex = std::complex<double>;

/// Dense row-major complex matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static Matrix identity(std::size_t n);
  static Matrix zero(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
  static Matrix diagonal(const std::vector<double>& d);
  static Matrix from_real(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  Complex& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Matrix adjoint() const;
  Complex trace() const;
  double frobenius_norm() const;
  /// Largest modulus of an imaginary part.
  double max_imag() const;
  std::vector<Complex> column(std::size_t j) const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(Complex s);

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, Complex s) { return a *= s; }
  friend Matrix operator*(Complex s, Matrix a) { return a *= s; }
  friend Matrix operator*(const Matrix& a, const Matrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

double frobenius_distance(const Matrix& a, const Matrix& b);

/// Rank-one outer product v·w*.
Matrix outer(const std::vector<Complex>& v, const std::vector<Complex>& w);

}  // namespace projdecomp
