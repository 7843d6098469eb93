#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace cgzsl::nn {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void fill(double v);
  Matrix& operator+=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix hconcat(const Matrix& left, const Matrix& right);
Matrix vconcat(const Matrix& top, const Matrix& bottom);
Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows);

/// Rows with norm below kNormGuard are returned unchanged.
Matrix l2_normalize_rows(const Matrix& m);

/// Pairwise cosine similarity, clamped to [-1, 1]; zero-norm rows give 0.
Matrix cosine_matrix(const Matrix& x, const Matrix& p);

double frobenius_norm(const Matrix& m);
bool all_finite(const Matrix& m);

inline constexpr double kNormGuard = 1e-12;

}  // namespace cgzsl::nn
