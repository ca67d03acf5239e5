#pragma once

// Spatio-temporal central difference convolutions on N x C x T x H x W
// (or C x T x H x W) input with 3 x 3 x 3 support.
//
// All three variants mix a gradient term with the vanilla 3D convolution:
//   y = theta * gradient + (1 - theta) * conv3d(x, w)
// and differ in which samples enter the gradient term and what they are
// compared against:
//   ST  all 26 non-center samples, reference = center of the current slice
//   T   the 18 samples of slices t-1 and t+1, reference = current center
//   TR  the same 18 samples, reference = mean of the three slice centers

#include <cstddef>
#include <optional>
#include <string_view>

#include "pixdiff/tensor.hpp"

namespace pixdiff {

enum class Cdc3dKind { st, t, tr };

std::string_view cdc3d_kind_name(Cdc3dKind kind) noexcept;

struct Conv3dOptions {
  std::optional<PadSpec> pad;  // default: zero "same" padding {1, 1, 1}
  std::size_t stride = 1;

  PadSpec pad_or_same() const { return pad ? *pad : PadSpec::same(3, 3); }
};

/// True when kernel offset (dt, u, v) of a 3x3x3 window enters the gradient
/// term of `kind`.
bool cdc3d_in_gradient_support(Cdc3dKind kind, std::size_t dt, std::size_t u, std::size_t v) noexcept;

/// kernel: C_out x C_in x 3 x 3 x 3, its center entry is w_c.
/// Throws InvalidArgument for theta outside [0, 1] or a T-variant input with
/// fewer than 3 frames.
template <typename T>
Tensor<T> cdc3d_forward(const Tensor<T>& x, const Tensor<T>& kernel, double theta, Cdc3dKind kind,
                        const Conv3dOptions& opts = {});

/// Dense kernel k' with conv3d(x, k') == cdc3d_forward(x, kernel, theta, kind).
/// Entries in the gradient support keep their weight, the remaining entries
/// are scaled by (1 - theta), and theta * (sum of supported weights) is
/// subtracted at the reference position (split in thirds over the three
/// slice centers for TR).
template <typename T>
Tensor<T> cdc3d_reparam(const Tensor<T>& kernel, double theta, Cdc3dKind kind);

}  // namespace pixdiff
