#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kga::gradkit {

/// Row-major array of doubles with an explicit shape.
///
/// Every extent is positive and the element count always equals the
/// product of the extents. The graph engine only works with rank-2 arrays;
/// higher ranks are allowed for storage.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(std::vector<std::size_t> shape, double fill = 0.0);
  DenseArray(std::vector<std::size_t> shape, std::vector<double> data);

  static DenseArray matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static DenseArray scalar(double value);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Rank-2 views. A rank-1 array reads as a single row.
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  double& operator()(std::size_t row, std::size_t col) noexcept { return data_[row * cols() + col]; }
  double operator()(std::size_t row, std::size_t col) const noexcept { return data_[row * cols() + col]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols(), cols()}; }

  bool same_shape(const DenseArray& other) const noexcept { return shape_ == other.shape_; }
  bool all_finite() const noexcept;
  void fill(double value) noexcept;

  friend bool operator==(const DenseArray&, const DenseArray&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace kga::gradkit
