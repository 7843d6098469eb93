#include "cgzsl/nn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cgzsl/errors.hpp"

namespace cgzsl::nn {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged initializer for Matrix");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix& Matrix::operator+=(const Matrix& other) {
  if (!same_shape(other)) {
    throw ShapeError("cannot add " + shape_str(other) + " to " + shape_str(*this));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " x " + shape_str(b));
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* b_row = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix hconcat(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) {
    throw ShapeError("hconcat: " + shape_str(left) + " | " + shape_str(right));
  }
  Matrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t i = 0; i < left.rows(); ++i) {
    auto dst = out.row(i);
    std::copy(left.row(i).begin(), left.row(i).end(), dst.begin());
    std::copy(right.row(i).begin(), right.row(i).end(), dst.begin() + left.cols());
  }
  return out;
}

Matrix vconcat(const Matrix& top, const Matrix& bottom) {
  if (top.empty() && top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  if (top.cols() != bottom.cols()) {
    throw ShapeError("vconcat: " + shape_str(top) + " / " + shape_str(bottom));
  }
  std::vector<double> data(top.values().begin(), top.values().end());
  data.insert(data.end(), bottom.values().begin(), bottom.values().end());
  return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows()) {
      throw IndexError("select_rows: row " + std::to_string(rows[i]) + " of " +
                       std::to_string(m.rows()));
    }
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

Matrix l2_normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    double sq = 0.0;
    for (double v : r) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm < kNormGuard) continue;
    for (double& v : r) v /= norm;
  }
  return out;
}

Matrix cosine_matrix(const Matrix& x, const Matrix& p) {
  if (x.cols() != p.cols()) {
    throw ShapeError("cosine_matrix: feature dims " + shape_str(x) + " vs " + shape_str(p));
  }
  Matrix sims = matmul(l2_normalize_rows(x), transpose(l2_normalize_rows(p)));
  for (double& v : sims.values()) v = std::clamp(v, -1.0, 1.0);
  return sims;
}

double frobenius_norm(const Matrix& m) {
  double sq = 0.0;
  for (double v : m.values()) sq += v * v;
  return std::sqrt(sq);
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.values().begin(), m.values().end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace cgzsl::nn
