#include "pixdiff/reparam.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "pixdiff/conv.hpp"
#include "pixdiff/parallel.hpp"
#include "pixdiff/simd/kernels.hpp"

namespace pixdiff {

std::string_view op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::cpdc: return "cpdc";
    case OpKind::apdc: return "apdc";
    case OpKind::rpdc: return "rpdc";
    case OpKind::cdc: return "cdc";
    case OpKind::gcdc: return "gcdc";
    case OpKind::ccdc_hv: return "ccdc-hv";
    case OpKind::ccdc_dg: return "ccdc-dg";
    case OpKind::random_pdc: return "random";
    case OpKind::custom: return "custom";
    case OpKind::dense: return "dense";
    case OpKind::mediconv: return "mediconv";
  }
  return "unknown";
}

OpKind parse_op(std::string_view name) {
  for (OpKind k : {OpKind::cpdc, OpKind::apdc, OpKind::rpdc, OpKind::cdc, OpKind::gcdc, OpKind::ccdc_hv,
                   OpKind::ccdc_dg, OpKind::random_pdc, OpKind::custom, OpKind::dense, OpKind::mediconv}) {
    if (op_name(k) == name) return k;
  }
  throw InvalidArgument("unknown operator '" + std::string(name) + "'");
}

std::string OpConfig::label() const {
  std::string s(op_name(kind));
  if (op_has_center(*this)) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "(theta=%g)", theta);
    s += buf;
  }
  return s;
}

PairSet op_pairset(const OpConfig& cfg) {
  switch (cfg.kind) {
    case OpKind::cpdc:
    case OpKind::cdc:
    case OpKind::gcdc:
      return make_pairset(PairSetKind::central);
    case OpKind::apdc: return make_pairset(PairSetKind::angular);
    case OpKind::rpdc: return make_pairset(PairSetKind::radial);
    case OpKind::ccdc_hv: return make_pairset(PairSetKind::cross_hv);
    case OpKind::ccdc_dg: return make_pairset(PairSetKind::cross_dg);
    case OpKind::random_pdc:
      return make_random_pairset(cfg.random_window, cfg.random_pairs, cfg.pair_seed);
    case OpKind::custom:
      if (!cfg.pairs) throw InvalidArgument("custom operator needs a pair set");
      return *cfg.pairs;
    case OpKind::dense:
    case OpKind::mediconv:
      break;
  }
  throw UnsupportedOperation(std::string(op_name(cfg.kind)) + " is not a pair-set operator");
}

std::size_t op_window(const OpConfig& cfg) {
  if (cfg.kind == OpKind::dense || cfg.kind == OpKind::mediconv) return 3;
  return op_pairset(cfg).window();
}

std::size_t op_taps(const OpConfig& cfg) {
  if (cfg.kind == OpKind::dense || cfg.kind == OpKind::mediconv) return 9;
  return op_pairset(cfg).size();
}

bool op_has_center(const OpConfig& cfg) noexcept {
  return cfg.kind == OpKind::gcdc || cfg.kind == OpKind::ccdc_hv || cfg.kind == OpKind::ccdc_dg;
}

bool op_reparameterizable(const OpConfig& cfg) noexcept { return cfg.kind != OpKind::mediconv; }

template <typename T>
Tensor<T> pairs_to_kernel(const PairSet& ps, const KernelWeights<T>& w) {
  detail::require(w.taps == ps.size(), "weight count does not match the pair set");
  const std::size_t k = ps.window();
  const int r = ps.half();
  auto cell = [&](const PixelOffset& o) {
    return static_cast<std::size_t>(r + o.du) * k + static_cast<std::size_t>(r + o.dv);
  };
  Tensor<T> kernel({w.out_channels, w.in_channels, k, k});
  for (std::size_t co = 0; co < w.out_channels; ++co) {
    for (std::size_t ci = 0; ci < w.in_channels; ++ci) {
      T* kk = kernel.raw() + (co * w.in_channels + ci) * k * k;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        kk[cell(ps[i].minuend)] += w.at(co, ci, i);
        kk[cell(ps[i].subtrahend)] -= w.at(co, ci, i);
      }
    }
  }
  return kernel;
}

template <typename T>
Tensor<T> reparameterize(const OpConfig& cfg, const KernelWeights<T>& w) {
  if (cfg.kind == OpKind::mediconv) {
    throw UnsupportedOperation("mediconv references the window median, which depends on the input; "
                               "it has no equivalent dense kernel");
  }
  if (cfg.kind == OpKind::dense) {
    detail::require(w.taps == 9, "dense 3x3 operator needs 9 weights per channel pair");
    return Tensor<T>({w.out_channels, w.in_channels, 3, 3}, w.w);
  }
  const PairSet ps = op_pairset(cfg);
  if (!op_has_center(cfg)) return pairs_to_kernel(ps, w);

  detail::require(cfg.theta >= 0.0 && cfg.theta <= 1.0, "theta must lie in [0, 1]");
  detail::require(w.taps == ps.size(), "weight count does not match the pair set");
  const std::size_t k = ps.window();
  const int r = ps.half();
  const T th = static_cast<T>(cfg.theta), rest = static_cast<T>(1.0 - cfg.theta);
  Tensor<T> kernel({w.out_channels, w.in_channels, k, k});
  for (std::size_t co = 0; co < w.out_channels; ++co) {
    for (std::size_t ci = 0; ci < w.in_channels; ++ci) {
      T* kk = kernel.raw() + (co * w.in_channels + ci) * k * k;
      T sum{};
      for (std::size_t i = 0; i < ps.size(); ++i) {
        const auto& o = ps[i].minuend;
        kk[static_cast<std::size_t>(r + o.du) * k + static_cast<std::size_t>(r + o.dv)] += w.at(co, ci, i);
        sum += w.at(co, ci, i);
      }
      kk[static_cast<std::size_t>(r) * k + static_cast<std::size_t>(r)] = rest * w.center_at(co, ci) - th * sum;
    }
  }
  return kernel;
}

template <typename T>
Tensor<T> naive_forward(const OpConfig& cfg, const Tensor<T>& x, const KernelWeights<T>& w) {
  switch (cfg.kind) {
    case OpKind::dense:
      return conv2d(x, reparameterize(cfg, w), PadSpec::same(2, 3));
    case OpKind::mediconv:
      return mediconv_forward(x, w, 3);
    case OpKind::gcdc:
    case OpKind::ccdc_hv:
    case OpKind::ccdc_dg: {
      KernelWeights<T> mixed = w;
      mixed.theta = cfg.theta;
      return mixed_forward(x, op_pairset(cfg), mixed);
    }
    default:
      return pdc_forward(x, op_pairset(cfg), w);
  }
}

template <typename T>
KernelWeights<T> random_weights(const OpConfig& cfg, std::size_t c_out, std::size_t c_in, Rng& rng,
                                double scale) {
  auto w = KernelWeights<T>::random(c_out, c_in, op_taps(cfg), op_has_center(cfg), rng, -scale, scale);
  w.theta = op_has_center(cfg) ? cfg.theta : 1.0;
  return w;
}

std::string_view precision_name(Precision p) noexcept {
  return p == Precision::single ? "single" : "double";
}

namespace {

template <typename T>
double run_verify(const OpConfig& cfg, const VerifyOptions& opts, double scale) {
  detail::require(opts.shape.size() == 4, "verify: shape must be N x C x H x W");
  double worst = 0.0;
  for (std::size_t trial = 0; trial < opts.trials; ++trial) {
    Rng rng(opts.seed * 1000003ULL + trial);
    const auto x = random_tensor<T>(opts.shape, rng);
    const auto w = random_weights<T>(cfg, opts.out_channels, opts.shape[1], rng, scale);
    const Tensor<T> naive = naive_forward(cfg, x, w);
    const Tensor<T> fused = conv2d(x, reparameterize(cfg, w), PadSpec::same(2, op_window(cfg)));
    detail::require(naive.shape() == fused.shape(), "verify: path shapes differ");
    for (std::size_t i = 0; i < naive.size(); ++i) {
      worst = std::max(worst, std::abs(static_cast<double>(naive[i]) - static_cast<double>(fused[i])));
    }
  }
  return worst;
}

template <typename F>
double time_ns(F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double default_weight_scale(const OpConfig& cfg, std::size_t in_channels) {
  detail::require(in_channels >= 1, "need at least one input channel");
  return 1.0 / std::sqrt(static_cast<double>(in_channels * op_taps(cfg)));
}

ReparamReport verify_equivalence(const OpConfig& cfg, const VerifyOptions& opts) {
  detail::require(opts.trials >= 1, "verify needs at least one trial");
  if (!op_reparameterizable(cfg)) {
    throw UnsupportedOperation(std::string(op_name(cfg.kind)) + " cannot be reparameterized");
  }
  parallel::ThreadLimit limit(opts.threads);
  ReparamReport r;
  r.op = cfg.label();
  r.precision = std::string(precision_name(opts.precision));
  r.input_shape = opts.shape;
  r.out_channels = opts.out_channels;
  r.trials = opts.trials;
  r.tolerance = opts.tolerance;
  r.isa = std::string(simd::isa_name(simd::active_isa()));
  r.threads = parallel::max_threads();
  r.weight_scale = opts.weight_scale.value_or(default_weight_scale(cfg, opts.shape.at(1)));
  r.max_abs_error = opts.precision == Precision::single ? run_verify<float>(cfg, opts, r.weight_scale)
                                                        : run_verify<double>(cfg, opts, r.weight_scale);
  r.pass = r.max_abs_error <= opts.tolerance;
  return r;
}

ReparamReport bench_compare(const OpConfig& cfg, const BenchOptions& opts) {
  detail::require(opts.shape.size() == 4, "bench: shape must be N x C x H x W");
  detail::require(opts.repetitions >= 1, "bench needs at least one repetition");
  parallel::ThreadLimit limit(opts.threads);

  Rng rng(opts.seed);
  const auto x = random_tensor<float>(opts.shape, rng);
  const auto w = random_weights<float>(cfg, opts.out_channels, opts.shape[1], rng,
                                       default_weight_scale(cfg, opts.shape[1]));
  const std::size_t k = op_window(cfg);
  const auto dense_kernel = random_tensor<float>({opts.out_channels, opts.shape[1], k, k}, rng);
  const auto fused_kernel = reparameterize(cfg, w);
  const PadSpec same = PadSpec::same(2, k);

  Tensor<float> naive_out, fused_out, dense_out;
  auto naive = [&] { naive_out = naive_forward(cfg, x, w); };
  auto fused = [&] { fused_out = conv2d(x, fused_kernel, same); };
  auto dense = [&] { dense_out = conv2d(x, dense_kernel, same); };
  for (std::size_t i = 0; i < opts.warmup; ++i) {
    naive();
    fused();
    dense();
  }
  std::vector<double> tn, tr, td;
  for (std::size_t i = 0; i < opts.repetitions; ++i) {
    tn.push_back(time_ns(naive));
    tr.push_back(time_ns(fused));
    td.push_back(time_ns(dense));
  }

  ReparamReport r;
  r.op = cfg.label();
  r.precision = "single";
  r.input_shape = opts.shape;
  r.out_channels = opts.out_channels;
  r.trials = opts.repetitions;
  r.naive_ns = median(tn);
  r.reparam_ns = median(tr);
  r.dense_ns = median(td);
  for (std::size_t i = 0; i < naive_out.size(); ++i) {
    r.max_abs_error = std::max(r.max_abs_error, static_cast<double>(std::abs(naive_out[i] - fused_out[i])));
  }
  r.tolerance = 1e-5;
  r.weight_scale = default_weight_scale(cfg, opts.shape[1]);
  r.pass = r.max_abs_error <= r.tolerance;
  r.isa = std::string(simd::isa_name(simd::active_isa()));
  r.threads = parallel::max_threads();
  return r;
}

namespace {

nlohmann::json report_json(const ReparamReport& r) {
  return {{"op", r.op},
          {"precision", r.precision},
          {"shape", r.input_shape},
          {"out_channels", r.out_channels},
          {"trials", r.trials},
          {"max_abs_error", r.max_abs_error},
          {"tolerance", r.tolerance},
          {"weight_scale", r.weight_scale},
          {"pass", r.pass},
          {"naive_ns", r.naive_ns},
          {"reparam_ns", r.reparam_ns},
          {"dense_ns", r.dense_ns},
          {"isa", r.isa},
          {"threads", r.threads}};
}

}  // namespace

std::string report_to_json(const ReparamReport& r) { return report_json(r).dump(2) + "\n"; }

std::string reports_to_json(const std::vector<ReparamReport>& rs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rs) arr.push_back(report_json(r));
  return arr.dump(2) + "\n";
}

std::string bench_csv_header() { return "op,shape,path,median_ns,max_abs_error\n"; }

std::string bench_csv_rows(const ReparamReport& r) {
  std::ostringstream os;
  const std::string shape = shape_to_string(r.input_shape);
  const std::pair<const char*, double> rows[] = {
      {"naive", r.naive_ns}, {"reparam", r.reparam_ns}, {"dense", r.dense_ns}};
  for (const auto& [path, ns] : rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "\"%s\",%s,%s,%.0f,%.9g\n", r.op.c_str(), shape.c_str(), path, ns,
                  r.max_abs_error);
    os << buf;
  }
  return os.str();
}

template Tensor<float> pairs_to_kernel(const PairSet&, const KernelWeights<float>&);
template Tensor<double> pairs_to_kernel(const PairSet&, const KernelWeights<double>&);
template Tensor<float> reparameterize(const OpConfig&, const KernelWeights<float>&);
template Tensor<double> reparameterize(const OpConfig&, const KernelWeights<double>&);
template Tensor<float> naive_forward(const OpConfig&, const Tensor<float>&, const KernelWeights<float>&);
template Tensor<double> naive_forward(const OpConfig&, const Tensor<double>&, const KernelWeights<double>&);
template KernelWeights<float> random_weights(const OpConfig&, std::size_t, std::size_t, Rng&, double);
template KernelWeights<double> random_weights(const OpConfig&, std::size_t, std::size_t, Rng&, double);

}  // namespace pixdiff
