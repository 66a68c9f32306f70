#include "kga/gradkit/dense_array.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace kga::gradkit {
namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  if (shape.empty()) {
    throw std::invalid_argument("DenseArray: shape must have at least one extent");
  }
  for (std::size_t extent : shape) {
    if (extent == 0) {
      throw std::invalid_argument("DenseArray: extents must be positive");
    }
  }
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

DenseArray::DenseArray(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  const std::size_t expected = element_count(shape_);
  if (expected != data_.size()) {
    throw std::invalid_argument("DenseArray: shape implies " + std::to_string(expected) +
                                " elements but data has " + std::to_string(data_.size()));
  }
}

DenseArray DenseArray::matrix(std::size_t rows, std::size_t cols, double fill) {
  return DenseArray({rows, cols}, fill);
}

DenseArray DenseArray::scalar(double value) { return DenseArray({1, 1}, value); }

std::size_t DenseArray::rows() const noexcept {
  if (shape_.size() < 2) {
    return shape_.empty() ? 0 : 1;
  }
  return shape_[0];
}

std::size_t DenseArray::cols() const noexcept {
  if (shape_.empty()) {
    return 0;
  }
  return shape_.size() < 2 ? shape_[0] : data_.size() / shape_[0];
}

bool DenseArray::all_finite() const noexcept {
  // NaN and infinity have every exponent bit set; adding one exponent unit then
  // carries into the sign bit. A plain integer OR-reduction vectorizes well.
  constexpr std::uint64_t kExponent = 0x7ff0000000000000ULL;
  constexpr std::uint64_t kUnit = 0x0010000000000000ULL;
  const double* p = data_.data();
  const std::size_t n = data_.size();
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc |= (std::bit_cast<std::uint64_t>(p[i]) & kExponent) + kUnit;
  return (acc >> 63) == 0;
}

void DenseArray::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

}  // namespace kga::gradkit
