#pragma once

#include <cstddef>
#include <vector>

namespace battlab {

/// Dense row-major matrix of doubles: just enough linear algebra for the
/// regressor. 64-bit floats throughout; the gradient-check tolerances
/// depend on it.
class Mat {
public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// out = a (m x k) * b (k x n)
inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      double* orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

/// out = a (m x k) * b(n x k)^T
inline Mat matmul_nt(const Mat& a, const Mat& b) {
  Mat out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* arow = a.row(i);
      const double* brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      out(i, j) = s;
    }
  }
  return out;
}

/// out = a (k x m)^T * b (k x n)
inline Mat matmul_tn(const Mat& a, const Mat& b) {
  Mat out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* arow = a.row(k);
    const double* brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

inline void add_inplace(Mat& a, const Mat& b) {
  for (std::size_t i = 0; i < a.raw().size(); ++i) a.raw()[i] += b.raw()[i];
}

} // namespace battlab
