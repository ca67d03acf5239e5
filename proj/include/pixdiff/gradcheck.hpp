#pragma once

// Analytic backward passes of the difference operators and a central
// finite-difference oracle to check them against.
//
// Every backward takes the upstream gradient u of the forward output and
// returns the gradient of <forward(...), u> with respect to each input.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pixdiff/diff_conv.hpp"
#include "pixdiff/diff_conv_3d.hpp"
#include "pixdiff/pairset.hpp"
#include "pixdiff/tensor.hpp"

namespace pixdiff {

template <typename T>
struct GradBundle {
  Tensor<T> grad_input;
  std::vector<T> grad_weights;  // layout of the primal weights (or pooling / 3D kernel)
  std::vector<T> grad_center;   // empty unless the operator has a center weight
  std::optional<double> grad_theta;
  std::size_t median_ties = 0;  // mediconv: windows whose median value is not unique
};

template <typename T>
struct ConvGrads {
  Tensor<T> grad_input;
  Tensor<T> grad_kernel;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& k, const PadSpec& pad, std::size_t stride,
                             const Tensor<T>& upstream);

template <typename T>
ConvGrads<T> conv3d_backward(const Tensor<T>& x, const Tensor<T>& k, const PadSpec& pad, std::size_t stride,
                             const Tensor<T>& upstream);

/// grad_w_i = sum over positions of u * (x[a_i] - x[b_i]); grad_x scatters
/// +w_i u to each minuend and -w_i u to each subtrahend.
template <typename T>
GradBundle<T> pdc_backward(const Tensor<T>& x, const PairSet& ps, const KernelWeights<T>& w,
                           const Tensor<T>& upstream, const Conv2dOptions& opts = {});

/// Adjoint of mixed_forward (gcdc, ccdc): gradients for x, w, w_c and theta.
template <typename T>
GradBundle<T> mixed_backward(const Tensor<T>& x, const PairSet& ps, const KernelWeights<T>& w,
                             const Tensor<T>& upstream, const Conv2dOptions& opts = {});

/// The median is treated as a selection: its gradient goes to the window
/// element holding the median value, the lowest window index on ties. Tied
/// windows are counted in median_ties; there the result is a subgradient.
template <typename T>
GradBundle<T> mediconv_backward(const Tensor<T>& x, const KernelWeights<T>& w, const Tensor<T>& upstream,
                                std::size_t window = 3, const Conv2dOptions& opts = {});

/// grad_weights holds the pooling gradient (c_out x m). The binary kernels
/// are fixed and get none. ReLU uses derivative 0 at 0.
template <typename T>
GradBundle<T> lbc_backward(const Tensor<T>& x, const LbcKernels<T>& kernels, Nonlinearity f,
                           const Tensor<T>& pooling, const Tensor<T>& upstream, const Conv2dOptions& opts = {});

/// grad_weights has the layout of the 3D kernel; grad_theta is always set.
template <typename T>
GradBundle<T> cdc3d_backward(const Tensor<T>& x, const Tensor<T>& kernel, double theta, Cdc3dKind kind,
                             const Tensor<T>& upstream, const Conv3dOptions& opts = {});

/// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every i.
std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& p, double h);

/// |a - n| / max(1, |a|, |n|), maximized over the entries.
double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

struct GradCheckConfig {
  /// One of gradcheck_ops().
  std::string op = "apdc";
  std::size_t seeds = 20;
  double step = 1e-3;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  std::string op;
  std::string group;
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool pass = true;
  std::size_t instances = 0;
};

/// cpdc apdc rpdc cdc random gcdc ccdc-hv ccdc-dg mediconv lbc-sigmoid
/// lbc-relu cdc3d-st cdc3d-t cdc3d-tr
const std::vector<std::string>& gradcheck_ops();

/// Analytic against finite-difference gradients (double precision) on
/// `seeds` random instances; one result per parameter group.
std::vector<GradCheckResult> grad_check(const GradCheckConfig& cfg);

std::string gradcheck_to_json(const std::vector<GradCheckResult>& results);

}  // namespace pixdiff
