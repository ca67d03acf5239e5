#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pixdiff/error.hpp"

namespace pixdiff {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

std::string shape_to_string(const Shape& shape);

/// Dense row-major tensor. Layouts used throughout the library are
/// C x H x W, N x C x H x W and N x C x T x H x W; kernels are
/// C_out x C_in x (k_t x) k_h x k_w.
///
/// A default-constructed tensor is empty (rank 0, no data). Every other
/// tensor has extents >= 1 and exactly product(shape) elements.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{}) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    detail::require(data_.size() == shape_size(shape_),
                    "tensor data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_to_string(shape_));
  }

  Tensor(Shape shape, std::initializer_list<T> values)
      : Tensor(std::move(shape), std::vector<T>(values)) {}

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* raw() noexcept { return data_.data(); }
  const T* raw() const noexcept { return data_.data(); }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t flat) noexcept { return data_[flat]; }
  const T& operator[](std::size_t flat) const noexcept { return data_[flat]; }

  /// Row-major flat offset of a full multi-index.
  std::size_t offset(std::initializer_list<std::size_t> index) const {
    detail::require(index.size() == shape_.size(), "index rank mismatch");
    std::size_t flat = 0;
    auto dim = shape_.begin();
    for (std::size_t i : index) {
      detail::require(i < *dim, "index out of range");
      flat = flat * (*dim) + i;
      ++dim;
    }
    return flat;
  }

  template <typename... I>
  T& at(I... index) {
    return data_[offset({static_cast<std::size_t>(index)...})];
  }
  template <typename... I>
  const T& at(I... index) const {
    return data_[offset({static_cast<std::size_t>(index)...})];
  }

  Tensor reshaped(Shape shape) const {
    return Tensor(std::move(shape), data_);
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void validate_shape() const {
    for (std::size_t e : shape_) {
      detail::require(e >= 1, "tensor extents must be >= 1, got " +
                                  shape_to_string(shape_));
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

enum class PadMode { zero, replicate };

/// Padding applied symmetrically to the trailing spatial axes. `amount`
/// lists one entry per padded axis, outermost first: {h, w} for planes,
/// {t, h, w} for videos.
struct PadSpec {
  PadMode mode = PadMode::zero;
  std::vector<std::size_t> amount;

  static PadSpec none(std::size_t axes) { return {PadMode::zero, std::vector<std::size_t>(axes, 0)}; }
  /// "Same" padding for an odd window k and stride 1.
  static PadSpec same(std::size_t axes, std::size_t k, PadMode mode = PadMode::zero) {
    return {mode, std::vector<std::size_t>(axes, k / 2)};
  }
};

/// Pads the trailing spec.amount.size() axes of x.
/// Throws InvalidArgument when replicate padding is asked for an amount that
/// is not smaller than the padded extent.
template <typename T>
Tensor<T> pad(const Tensor<T>& x, const PadSpec& spec);

/// Adjoint of pad: folds a gradient w.r.t. the padded tensor back onto the
/// unpadded shape (crop for zero padding, clamp-accumulate for replicate).
template <typename T>
Tensor<T> pad_adjoint(const Tensor<T>& padded_grad, const Shape& original, const PadSpec& spec);

/// floor((extent + 2 pad - window) / stride) + 1, validated.
std::size_t conv_out_extent(std::size_t extent, std::size_t pad, std::size_t window,
                            std::size_t stride);

}  // namespace pixdiff
