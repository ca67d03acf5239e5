#pragma once

#include <cstddef>

#include "pixdiff/tensor.hpp"

namespace pixdiff {

/// Dense 2D cross-correlation (the deep-learning "convolution"):
///   y[n, co, i, j] = sum_{ci, u, v} k[co, ci, u, v] * x_pad[n, ci, i*s + u, j*s + v]
/// x is C x H x W or N x C x H x W; the output has the same rank.
/// k is C_out x C_in x k_h x k_w with odd spatial extents.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& k, const PadSpec& pad, std::size_t stride = 1);

/// Dense 3D cross-correlation over T x H x W. x is C x T x H x W or
/// N x C x T x H x W; k is C_out x C_in x k_t x k_h x k_w with odd extents.
/// Padding has three entries {t, h, w}; stride applies to all three axes.
template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Tensor<T>& k, const PadSpec& pad, std::size_t stride = 1);

/// Median of every k x k window (k odd, so the median is the middle order
/// statistic of k^2 values). Works per plane on tensors of rank >= 2.
template <typename T>
Tensor<T> window_median(const Tensor<T>& x, std::size_t k, const PadSpec& pad,
                        std::size_t stride = 1);

}  // namespace pixdiff
