#pragma once

// Conversion of fixed pixel-difference operators into a single dense
// kernel, plus the harness that checks and times that conversion.
//
// Because every built-in pair set references pixels at fixed window
// offsets, sum_i w_i (x[a_i] - x[b_i]) is linear in the window and equals a
// dense correlation with
//   k[o] = sum_{i: a_i = o} w_i - sum_{i: b_i = o} w_i.
// Inference can therefore run at the cost of a plain convolution. MeDiConv
// compares against the window median, which depends on the data, and has no
// such kernel.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pixdiff/diff_conv.hpp"
#include "pixdiff/pairset.hpp"
#include "pixdiff/tensor.hpp"

namespace pixdiff {

enum class OpKind { cpdc, apdc, rpdc, cdc, gcdc, ccdc_hv, ccdc_dg, random_pdc, custom, dense, mediconv };

struct OpConfig {
  OpKind kind = OpKind::apdc;
  double theta = 1.0;             // gcdc, ccdc_*
  std::optional<PairSet> pairs;   // custom
  std::size_t random_window = 3;  // random_pdc
  std::size_t random_pairs = 8;
  std::uint64_t pair_seed = 0;

  /// Short label, e.g. "apdc" or "gcdc(theta=0.5)".
  std::string label() const;
};

std::string_view op_name(OpKind kind) noexcept;
/// Accepts cpdc, apdc, rpdc, cdc, gcdc, ccdc-hv, ccdc-dg, random, custom,
/// dense, mediconv.
OpKind parse_op(std::string_view name);

/// Pair set behind a configuration. Throws UnsupportedOperation for
/// mediconv and dense, which are not pair-set operators.
PairSet op_pairset(const OpConfig& cfg);
std::size_t op_window(const OpConfig& cfg);
/// Weights per (c_out, c_in) the operator needs.
std::size_t op_taps(const OpConfig& cfg);
bool op_has_center(const OpConfig& cfg) noexcept;
bool op_reparameterizable(const OpConfig& cfg) noexcept;

/// Signed scatter of pair weights onto the k x k support; linear in w.
template <typename T>
Tensor<T> pairs_to_kernel(const PairSet& ps, const KernelWeights<T>& w);

/// Dense kernel equivalent to the configured operator (including the theta
/// mix of gcdc/ccdc: neighbours keep w_i, the center becomes
/// (1 - theta) w_c - theta sum w_i). Throws UnsupportedOperation for
/// mediconv.
template <typename T>
Tensor<T> reparameterize(const OpConfig& cfg, const KernelWeights<T>& w);

/// Direct evaluation of the configured operator (the pair loop).
template <typename T>
Tensor<T> naive_forward(const OpConfig& cfg, const Tensor<T>& x, const KernelWeights<T>& w);

template <typename T>
KernelWeights<T> random_weights(const OpConfig& cfg, std::size_t c_out, std::size_t c_in, Rng& rng,
                                double scale = 1.0);

enum class Precision { single, double_ };

std::string_view precision_name(Precision p) noexcept;

struct ReparamReport {
  std::string op;
  std::string precision;
  Shape input_shape;
  std::size_t out_channels = 0;
  std::size_t trials = 0;
  double max_abs_error = 0.0;
  double tolerance = 0.0;
  double weight_scale = 1.0;
  bool pass = true;
  double naive_ns = 0.0;
  double reparam_ns = 0.0;
  double dense_ns = 0.0;
  std::string isa;
  std::size_t threads = 1;
};

struct VerifyOptions {
  std::size_t trials = 100;
  Shape shape{1, 16, 64, 64};
  std::size_t out_channels = 16;
  double tolerance = 1e-5;
  std::uint64_t seed = 0;
  /// Weights are uniform in [-scale, scale). Unset means 1 / sqrt(fan_in)
  /// with fan_in = c_in * taps, the usual bound for initializing a
  /// convolution layer.
  std::optional<double> weight_scale;
  Precision precision = Precision::single;
  std::size_t threads = 1;
};

/// 1 / sqrt(c_in * taps).
double default_weight_scale(const OpConfig& cfg, std::size_t in_channels);

/// Runs the pair loop and the reparameterized dense kernel on seeded random
/// inputs (uniform in [-1, 1)) and records the largest absolute deviation.
/// A deviation above the tolerance is reported through `pass`, not thrown.
ReparamReport verify_equivalence(const OpConfig& cfg, const VerifyOptions& opts);

struct BenchOptions {
  Shape shape{1, 16, 256, 256};
  std::size_t out_channels = 16;
  std::size_t repetitions = 50;
  std::size_t warmup = 3;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Median wall time (single precision) of the pair loop, the
/// reparameterized convolution (kernel built once, outside the timed
/// region) and a dense convolution with a random kernel of the same shape.
/// The three paths are timed interleaved, one repetition each per round.
ReparamReport bench_compare(const OpConfig& cfg, const BenchOptions& opts);

std::string report_to_json(const ReparamReport& r);
std::string reports_to_json(const std::vector<ReparamReport>& rs);
/// Three CSV rows per report: op,shape,path,median_ns,max_abs_error with
/// path in {naive, reparam, dense}.
std::string bench_csv_header();
std::string bench_csv_rows(const ReparamReport& r);

}  // namespace pixdiff
