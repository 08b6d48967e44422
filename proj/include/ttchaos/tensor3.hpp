#pragma once

// Dense 3-way and 4-way blocks stored contiguously in row-major order so that
// the two standard matricizations are plain reinterpretations of the buffer.

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ttchaos {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DynStride = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;

// Block of shape (left_rank, mode, right_rank), entry (s, a, t) at
// offset (s*mode + a)*right_rank + t.
class Tensor3 {
public:
  Tensor3() = default;
  Tensor3(int left, int mode, int right)
      : left_(left), mode_(mode), right_(right),
        data_(static_cast<std::size_t>(left) * mode * right, 0.0) {
    if (left <= 0 || mode <= 0 || right <= 0)
      throw std::invalid_argument("Tensor3: dimensions must be positive");
  }

  int left_rank() const { return left_; }
  int mode_size() const { return mode_; }
  int right_rank() const { return right_; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator()(int s, int a, int t) {
    return data_[offset(s, a, t)];
  }
  double operator()(int s, int a, int t) const {
    return data_[offset(s, a, t)];
  }

  // (left*mode) x right matricization, rows ordered with s slowest.
  Eigen::Map<const RowMat> left_unfold() const {
    return {data_.data(), static_cast<Eigen::Index>(left_) * mode_, right_};
  }
  Eigen::Map<RowMat> left_unfold() {
    return {data_.data(), static_cast<Eigen::Index>(left_) * mode_, right_};
  }

  // left x (mode*right) matricization, columns ordered with a slowest.
  Eigen::Map<const RowMat> right_unfold() const {
    return {data_.data(), left_, static_cast<Eigen::Index>(mode_) * right_};
  }
  Eigen::Map<RowMat> right_unfold() {
    return {data_.data(), left_, static_cast<Eigen::Index>(mode_) * right_};
  }

  // left x right slice at fixed mode index, without copying.
  Eigen::Map<const RowMat, Eigen::Unaligned, Eigen::OuterStride<>> slice(int a) const {
    return {data_.data() + static_cast<std::size_t>(a) * right_, left_, right_,
            Eigen::OuterStride<>(static_cast<Eigen::Index>(mode_) * right_)};
  }
  Eigen::Map<RowMat, Eigen::Unaligned, Eigen::OuterStride<>> slice(int a) {
    return {data_.data() + static_cast<std::size_t>(a) * right_, left_, right_,
            Eigen::OuterStride<>(static_cast<Eigen::Index>(mode_) * right_)};
  }

private:
  std::size_t offset(int s, int a, int t) const {
    return (static_cast<std::size_t>(s) * mode_ + a) * right_ + t;
  }

  int left_ = 0, mode_ = 0, right_ = 0;
  std::vector<double> data_;
};

// Operator block of shape (left_rank, row_mode, col_mode, right_rank), entry
// (s, i, j, t) at offset ((s*row_mode + i)*col_mode + j)*right_rank + t.
class Tensor4 {
public:
  Tensor4() = default;
  Tensor4(int left, int rows, int cols, int right)
      : left_(left), rows_(rows), cols_(cols), right_(right),
        data_(static_cast<std::size_t>(left) * rows * cols * right, 0.0) {
    if (left <= 0 || rows <= 0 || cols <= 0 || right <= 0)
      throw std::invalid_argument("Tensor4: dimensions must be positive");
  }

  int left_rank() const { return left_; }
  int row_size() const { return rows_; }
  int col_size() const { return cols_; }
  int right_rank() const { return right_; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator()(int s, int i, int j, int t) {
    return data_[offset(s, i, j, t)];
  }
  double operator()(int s, int i, int j, int t) const {
    return data_[offset(s, i, j, t)];
  }

  // rows x cols matrix at fixed (s, t); strided view into the buffer.
  Eigen::Map<const Eigen::MatrixXd, Eigen::Unaligned, DynStride> kernel(int s, int t) const {
    return {data_.data() + offset(s, 0, 0, t), rows_, cols_,
            DynStride(right_, static_cast<Eigen::Index>(cols_) * right_)};
  }

  // Reinterpret as a Tensor3 over the combined mode (i*cols + j); the
  // row-major layout makes this the identity on the buffer.
  Tensor3 as_tensor3() const {
    Tensor3 out(left_, rows_ * cols_, right_);
    std::copy(data_.begin(), data_.end(), out.data());
    return out;
  }

private:
  std::size_t offset(int s, int i, int j, int t) const {
    return ((static_cast<std::size_t>(s) * rows_ + i) * cols_ + j) * right_ + t;
  }

  int left_ = 0, rows_ = 0, cols_ = 0, right_ = 0;
  std::vector<double> data_;
};

}  // namespace ttchaos
