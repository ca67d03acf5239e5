#include "pixdiff/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <optional>
#include <sstream>

namespace pixdiff {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  return os.str();
}

std::size_t conv_out_extent(std::size_t extent, std::size_t pad, std::size_t window,
                            std::size_t stride) {
  detail::require(stride >= 1, "stride must be positive");
  detail::require(extent + 2 * pad >= window,
                  "window " + std::to_string(window) + " larger than padded extent " +
                      std::to_string(extent + 2 * pad));
  return (extent + 2 * pad - window) / stride + 1;
}

namespace {

// Maps an output coordinate on a padded axis to its source coordinate.
std::optional<std::size_t> source_coord(std::size_t out, std::size_t amount,
                                        std::size_t extent, PadMode mode) {
  const auto pos = static_cast<std::ptrdiff_t>(out) - static_cast<std::ptrdiff_t>(amount);
  if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(extent)) return static_cast<std::size_t>(pos);
  if (mode == PadMode::zero) return std::nullopt;
  return pos < 0 ? 0 : extent - 1;
}

struct PadGeometry {
  Shape out_shape;
  std::vector<std::size_t> amount;  // one per axis, zero for unpadded axes
};

PadGeometry pad_geometry(const Shape& in, const PadSpec& spec) {
  detail::require(spec.amount.size() <= in.size(),
                  "pad spec has more axes than the tensor rank");
  PadGeometry g{in, std::vector<std::size_t>(in.size(), 0)};
  const std::size_t first = in.size() - spec.amount.size();
  for (std::size_t i = 0; i < spec.amount.size(); ++i) {
    const std::size_t axis = first + i;
    const std::size_t a = spec.amount[i];
    if (spec.mode == PadMode::replicate && a > 0) {
      detail::require(a < in[axis], "replicate pad amount " + std::to_string(a) +
                                        " must be smaller than extent " +
                                        std::to_string(in[axis]));
    }
    g.amount[axis] = a;
    g.out_shape[axis] = in[axis] + 2 * a;
  }
  return g;
}

// Calls row_fn(out_row_offset, optional in_row_offset) for each row (last
// axis) of the padded output.
template <typename Fn>
void for_each_padded_row(const Shape& in, const PadGeometry& g, PadMode mode, Fn&& row_fn) {
  const std::size_t rank = in.size();
  if (rank == 0) return;
  const std::size_t rows = shape_size(g.out_shape) / g.out_shape.back();
  std::vector<std::size_t> idx(rank - 1, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    std::optional<std::size_t> src_row = 0;
    for (std::size_t axis = 0; axis + 1 < rank; ++axis) {
      const auto s = source_coord(idx[axis], g.amount[axis], in[axis], mode);
      if (!s) {
        src_row.reset();
        break;
      }
      *src_row = *src_row * in[axis] + *s;
    }
    row_fn(r * g.out_shape.back(), src_row ? std::optional<std::size_t>(*src_row * in.back())
                                           : std::nullopt);
    for (std::size_t axis = rank - 1; axis-- > 0;) {
      if (++idx[axis] < g.out_shape[axis]) break;
      idx[axis] = 0;
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> pad(const Tensor<T>& x, const PadSpec& spec) {
  detail::require(!x.empty(), "cannot pad an empty tensor");
  const PadGeometry g = pad_geometry(x.shape(), spec);
  if (g.out_shape == x.shape()) return x;
  Tensor<T> out(g.out_shape, T{});
  const std::size_t w_in = x.shape().back();
  const std::size_t a = g.amount.back();
  const T* src = x.raw();
  T* dst = out.raw();
  for_each_padded_row(x.shape(), g, spec.mode, [&](std::size_t o, std::optional<std::size_t> s) {
    if (!s) return;  // zero row
    const T* row = src + *s;
    std::memcpy(dst + o + a, row, w_in * sizeof(T));
    if (spec.mode == PadMode::replicate) {
      std::fill(dst + o, dst + o + a, row[0]);
      std::fill(dst + o + a + w_in, dst + o + 2 * a + w_in, row[w_in - 1]);
    }
  });
  return out;
}

template <typename T>
Tensor<T> pad_adjoint(const Tensor<T>& padded_grad, const Shape& original, const PadSpec& spec) {
  const PadGeometry g = pad_geometry(original, spec);
  detail::require(g.out_shape == padded_grad.shape(), "pad_adjoint: gradient shape mismatch");
  Tensor<T> out(original, T{});
  const std::size_t w_in = original.back();
  const std::size_t a = g.amount.back();
  const T* src = padded_grad.raw();
  T* dst = out.raw();
  for_each_padded_row(original, g, spec.mode, [&](std::size_t o, std::optional<std::size_t> s) {
    if (!s) return;
    T* row = dst + *s;
    for (std::size_t j = 0; j < w_in; ++j) row[j] += src[o + a + j];
    if (spec.mode == PadMode::replicate) {
      for (std::size_t j = 0; j < a; ++j) {
        row[0] += src[o + j];
        row[w_in - 1] += src[o + a + w_in + j];
      }
    }
  });
  return out;
}

template Tensor<float> pad(const Tensor<float>&, const PadSpec&);
template Tensor<double> pad(const Tensor<double>&, const PadSpec&);
template Tensor<float> pad_adjoint(const Tensor<float>&, const Shape&, const PadSpec&);
template Tensor<double> pad_adjoint(const Tensor<double>&, const Shape&, const PadSpec&);

}  // namespace pixdiff
