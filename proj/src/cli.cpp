#include "pixdiff/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pixdiff/diff_conv.hpp"
#include "pixdiff/gradcheck.hpp"
#include "pixdiff/lbp.hpp"
#include "pixdiff/pgm.hpp"
#include "pixdiff/reparam.hpp"

namespace pixdiff::cli {

namespace {

struct Options {
  std::string input;
  std::string op;
  std::string pairs;
  double theta = 0.7;
  std::uint64_t seed = 0;
  std::string out;
  std::string format;
  std::string mapping = "riu2";
  double radius = 1.0;
  std::size_t points = 8;
  std::string interpolation = "nearest";
  std::string stats;
  std::size_t trials = 100;
  std::size_t size = 0;
  std::size_t channels = 16;
  std::string precision = "single";
  std::optional<double> tolerance;
  std::optional<double> weight_scale;
  std::size_t repetitions = 50;
  std::size_t seeds = 20;
};

void emit(const Options& o, const std::string& content, std::ostream& out) {
  if (o.out.empty()) {
    out << content;
  } else {
    pgm::write_file_atomic(o.out, content);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int cmd_lbp_hist(const Options& o, std::ostream& out) {
  const std::string format = o.format.empty() ? "csv" : o.format;
  if (format != "csv" && format != "json") throw InvalidArgument("lbp-hist: --format must be csv or json");
  const auto img = pgm::read(o.input);
  lbp::NeighborhoodSpec spec;
  spec.radius = o.radius;
  spec.points = o.points;
  if (o.interpolation == "bilinear") {
    spec.interpolation = lbp::Interpolation::bilinear;
  } else if (o.interpolation != "nearest") {
    throw InvalidArgument("--interpolation must be nearest or bilinear");
  }
  spec.validate();
  detail::require(o.points <= 16, "lbp-hist: at most 16 points are supported for histograms");
  const auto& mapping = lbp::build_mapping(lbp::parse_mapping(o.mapping), static_cast<unsigned>(o.points));
  const auto codes = lbp::lbp_image(pgm::to_plane(img), spec, mapping);
  const auto hist = lbp::histogram(codes, mapping);
  emit(o, format == "csv" ? lbp::histogram_to_csv(hist) : lbp::histogram_to_json(hist), out);
  return kSuccess;
}

TensorD run_operator(const Options& o, const TensorD& x) {
  Rng rng(o.seed);
  Conv2dOptions conv;
  // Replicate borders keep pure-difference responses at zero on flat regions.
  if (o.op == "lbc") {
    LbcSpec spec;
    spec.seed = o.seed;
    const auto kernels = lbc_make_kernels<double>(spec, 1);
    const auto pooling = random_tensor<double>({1, spec.maps}, rng);
    conv.pad = PadSpec::same(2, spec.window, PadMode::replicate);
    return lbc_forward(x, kernels, spec.nonlinearity, pooling, conv);
  }
  OpConfig cfg;
  cfg.kind = parse_op(o.op);
  detail::require(cfg.kind != OpKind::dense && cfg.kind != OpKind::random_pdc,
                  "pdc-run: unsupported operator '" + o.op + "'");
  cfg.theta = o.theta;
  if (cfg.kind == OpKind::custom) {
    detail::require(!o.pairs.empty(), "pdc-run: --op custom needs --pairs");
    cfg.pairs = pairset_from_json(read_text(o.pairs));
  }
  const auto w = random_weights<double>(cfg, 1, 1, rng);
  conv.pad = PadSpec::same(2, op_window(cfg), PadMode::replicate);
  switch (cfg.kind) {
    case OpKind::mediconv:
      return mediconv_forward(x, w, 3, conv);
    case OpKind::gcdc:
    case OpKind::ccdc_hv:
    case OpKind::ccdc_dg:
      return mixed_forward(x, op_pairset(cfg), w, conv);
    default:
      return pdc_forward(x, op_pairset(cfg), w, conv);
  }
}

int cmd_pdc_run(const Options& o, std::ostream& out) {
  if (o.op.empty()) throw InvalidArgument("pdc-run: --op is required");
  if (!o.format.empty() && o.format != "pgm") throw InvalidArgument("pdc-run: output format is pgm");
  const auto img = pgm::read(o.input);
  const TensorD x = pgm::to_plane(img).reshaped({1, img.height, img.width});
  const TensorD y = run_operator(o, x);

  double lo = y[0], hi = y[0], sum = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    lo = std::min(lo, y[i]);
    hi = std::max(hi, y[i]);
    sum += y[i];
    peak = std::max(peak, std::abs(y[i]));
  }
  pgm::GrayImage map;
  map.width = img.width;
  map.height = img.height;
  map.pixels.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    map.pixels[i] = peak == 0.0 ? 0 : static_cast<std::uint8_t>(std::lround(std::abs(y[i]) / peak * 255.0));
  }
  if (!o.out.empty()) pgm::write(o.out, map);

  nlohmann::json stats = {{"op", o.op},
                          {"seed", o.seed},
                          {"width", img.width},
                          {"height", img.height},
                          {"min", lo},
                          {"max", hi},
                          {"mean", sum / static_cast<double>(y.size())}};
  if (o.op == "gcdc" || o.op == "ccdc-hv" || o.op == "ccdc-dg") stats["theta"] = o.theta;
  const std::string text = stats.dump(2) + "\n";
  if (o.stats.empty()) {
    out << text;
  } else {
    pgm::write_file_atomic(o.stats, text);
  }
  return kSuccess;
}

std::vector<OpConfig> selected_ops(const Options& o, bool with_theta_sweep) {
  std::vector<OpConfig> ops;
  auto add = [&](OpKind k, double theta = 1.0) {
    OpConfig c;
    c.kind = k;
    c.theta = theta;
    c.pair_seed = o.seed;
    ops.push_back(c);
  };
  if (o.op.empty() || o.op == "all") {
    for (OpKind k : {OpKind::cpdc, OpKind::apdc, OpKind::rpdc, OpKind::ccdc_hv, OpKind::ccdc_dg}) add(k);
    if (with_theta_sweep) {
      for (double t : {0.0, 0.5, 1.0}) add(OpKind::gcdc, t);
    } else {
      add(OpKind::gcdc, o.theta);
    }
    return ops;
  }
  OpConfig c;
  c.kind = parse_op(o.op);
  c.theta = o.theta;
  c.pair_seed = o.seed;
  if (c.kind == OpKind::custom) {
    detail::require(!o.pairs.empty(), "--op custom needs --pairs");
    c.pairs = pairset_from_json(read_text(o.pairs));
  }
  if (!op_reparameterizable(c)) {
    throw InvalidArgument(o.op + " depends on the data through its reference pixel and cannot be reparameterized");
  }
  ops.push_back(c);
  return ops;
}

int cmd_verify(const Options& o, std::ostream& out) {
  VerifyOptions v;
  v.trials = o.trials;
  v.seed = o.seed;
  if (o.size) v.shape = {1, o.channels, o.size, o.size};
  else v.shape[1] = o.channels;
  v.out_channels = o.channels;
  if (o.precision == "double") {
    v.precision = Precision::double_;
    v.tolerance = 1e-12;
  } else if (o.precision != "single") {
    throw InvalidArgument("--precision must be single or double");
  }
  if (o.tolerance) v.tolerance = *o.tolerance;
  v.weight_scale = o.weight_scale;
  std::vector<ReparamReport> reports;
  bool ok = true;
  for (const auto& cfg : selected_ops(o, true)) {
    reports.push_back(verify_equivalence(cfg, v));
    ok = ok && reports.back().pass;
  }
  emit(o, reports_to_json(reports), out);
  return ok ? kSuccess : kCheckFailed;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const std::string format = o.format.empty() ? "csv" : o.format;
  if (format != "csv" && format != "json") throw InvalidArgument("bench: --format must be csv or json");
  BenchOptions b;
  b.repetitions = o.repetitions;
  b.seed = o.seed;
  b.out_channels = o.channels;
  b.shape = {1, o.channels, o.size ? o.size : 256, o.size ? o.size : 256};
  std::vector<ReparamReport> reports;
  bool ok = true;
  for (const auto& cfg : selected_ops(o, false)) {
    reports.push_back(bench_compare(cfg, b));
    ok = ok && reports.back().pass;
  }
  if (format == "json") {
    emit(o, reports_to_json(reports), out);
  } else {
    std::string csv = bench_csv_header();
    for (const auto& r : reports) csv += bench_csv_rows(r);
    emit(o, csv, out);
  }
  return ok ? kSuccess : kCheckFailed;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  std::vector<std::string> ops;
  if (o.op.empty() || o.op == "all") {
    ops = gradcheck_ops();
  } else {
    ops.push_back(o.op);
  }
  std::vector<GradCheckResult> results;
  for (const auto& op : ops) {
    GradCheckConfig cfg;
    cfg.op = op;
    cfg.seeds = o.seeds;
    cfg.seed = o.seed;
    cfg.tolerance = o.tolerance.value_or(1e-4);
    auto r = grad_check(cfg);
    results.insert(results.end(), r.begin(), r.end());
  }
  emit(o, gradcheck_to_json(results), out);
  const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
  return ok ? kSuccess : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pixel difference operators: LBP descriptors, difference convolutions, reparameterization"};
  app.name("pixdiff");
  app.require_subcommand(1);
  Options o;

  auto* lbp_hist = app.add_subcommand("lbp-hist", "LBP histogram of a PGM image");
  lbp_hist->add_option("--input", o.input, "P5 PGM image")->required();
  lbp_hist->add_option("--mapping", o.mapping, "raw, ri, u2 or riu2")->capture_default_str();
  lbp_hist->add_option("--radius", o.radius, "sampling radius")->capture_default_str();
  lbp_hist->add_option("--points", o.points, "samples on the ring")->capture_default_str();
  lbp_hist->add_option("--interpolation", o.interpolation, "nearest or bilinear")->capture_default_str();
  lbp_hist->add_option("--format", o.format, "csv or json");
  lbp_hist->add_option("--out", o.out, "output file (default: stdout)");

  auto* pdc_run = app.add_subcommand("pdc-run", "apply a difference operator to a PGM image");
  pdc_run->add_option("--input", o.input, "P5 PGM image")->required();
  pdc_run->add_option("--op", o.op, "cpdc apdc rpdc cdc gcdc ccdc-hv ccdc-dg mediconv lbc custom")->required();
  pdc_run->add_option("--pairs", o.pairs, "pair-set JSON for --op custom");
  pdc_run->add_option("--theta", o.theta, "intensity/gradient mix of gcdc and ccdc")->capture_default_str();
  pdc_run->add_option("--seed", o.seed, "weight seed")->capture_default_str();
  pdc_run->add_option("--out", o.out, "response map PGM");
  pdc_run->add_option("--stats", o.stats, "statistics JSON (default: stdout)");
  pdc_run->add_option("--format", o.format, "pgm");

  auto* verify = app.add_subcommand("verify", "check pair-loop against reparameterized kernels");
  verify->add_option("--op", o.op, "operator (default: all reparameterizable built-ins)");
  verify->add_option("--pairs", o.pairs, "pair-set JSON for --op custom");
  verify->add_option("--theta", o.theta, "theta for a single gcdc/ccdc run")->capture_default_str();
  verify->add_option("--seed", o.seed)->capture_default_str();
  verify->add_option("--trials", o.trials)->capture_default_str();
  verify->add_option("--size", o.size, "spatial size (default 64)");
  verify->add_option("--channels", o.channels)->capture_default_str();
  verify->add_option("--precision", o.precision, "single or double")->capture_default_str();
  verify->add_option("--tol", o.tolerance, "max abs deviation (default 1e-5 single, 1e-12 double)");
  verify->add_option("--weight-scale", o.weight_scale, "weights uniform in [-s, s) (default 1/sqrt(fan_in))");
  verify->add_option("--out", o.out, "JSON report (default: stdout)");
  verify->add_option("--format", o.format, "json");

  auto* bench = app.add_subcommand("bench", "time pair loop, reparameterized and dense convolution");
  bench->add_option("--op", o.op, "operator (default: all built-ins)");
  bench->add_option("--pairs", o.pairs, "pair-set JSON for --op custom");
  bench->add_option("--theta", o.theta)->capture_default_str();
  bench->add_option("--seed", o.seed)->capture_default_str();
  bench->add_option("--reps", o.repetitions, "timed repetitions")->capture_default_str();
  bench->add_option("--size", o.size, "spatial size (default 256)");
  bench->add_option("--channels", o.channels)->capture_default_str();
  bench->add_option("--format", o.format, "csv or json");
  bench->add_option("--out", o.out, "report file (default: stdout)");

  auto* gradcheck = app.add_subcommand("gradcheck", "analytic against finite-difference gradients");
  gradcheck->add_option("--op", o.op, "operator (default: all)");
  gradcheck->add_option("--seed", o.seed)->capture_default_str();
  gradcheck->add_option("--seeds", o.seeds, "random instances per operator")->capture_default_str();
  gradcheck->add_option("--tol", o.tolerance, "max relative error (default 1e-4)");
  gradcheck->add_option("--out", o.out, "JSON report (default: stdout)");
  gradcheck->add_option("--format", o.format, "json");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    for (auto* sub : {verify, gradcheck}) {
      if (sub->parsed() && !o.format.empty() && o.format != "json") {
        throw InvalidArgument(sub->get_name() + ": --format must be json");
      }
    }
    if (lbp_hist->parsed()) return cmd_lbp_hist(o, out);
    if (pdc_run->parsed()) return cmd_pdc_run(o, out);
    if (verify->parsed()) return cmd_verify(o, out);
    if (bench->parsed()) return cmd_bench(o, out);
    if (gradcheck->parsed()) return cmd_gradcheck(o, out);
  } catch (const InvalidArgument& e) {
    err << "pixdiff: " << e.what() << "\n";
    return kUsage;
  } catch (const UnsupportedOperation& e) {
    err << "pixdiff: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "pixdiff: internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace pixdiff::cli
