#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "pixdiff/conv.hpp"
#include "pixdiff/reparam.hpp"
#include "pixdiff/rng.hpp"

using namespace pixdiff;

namespace {

OpConfig config(OpKind kind, double theta = 1.0) {
  OpConfig cfg;
  cfg.kind = kind;
  cfg.theta = theta;
  return cfg;
}

std::vector<OpConfig> reparameterizable_ops() {
  std::vector<OpConfig> out;
  for (auto k : {OpKind::cpdc, OpKind::apdc, OpKind::rpdc, OpKind::cdc, OpKind::random_pdc}) out.push_back(config(k));
  for (auto k : {OpKind::gcdc, OpKind::ccdc_hv, OpKind::ccdc_dg})
    for (double theta : {0.0, 0.5, 1.0}) out.push_back(config(k, theta));
  OpConfig custom = config(OpKind::custom);
  custom.pairs = make_random_pairset(5, 17, 11);
  out.push_back(custom);
  return out;
}

VerifyOptions small_verify(Precision p) {
  VerifyOptions o;
  o.trials = 5;
  o.shape = {1, 4, 20, 18};
  o.out_channels = 3;
  o.precision = p;
  o.tolerance = p == Precision::single ? 1e-5 : 1e-12;
  return o;
}

}  // namespace

TEST(PairsToKernel, CentralSet) {
  Rng rng(1);
  const auto w = KernelWeights<double>::random(2, 3, 8, false, rng);
  const auto k = pairs_to_kernel(make_pairset(PairSetKind::central), w);
  ASSERT_EQ(k.shape(), (Shape{2, 3, 3, 3}));
  for (std::size_t co = 0; co < 2; ++co)
    for (std::size_t ci = 0; ci < 3; ++ci) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(k.at(co, ci, 1 + kRing8[i].du, 1 + kRing8[i].dv), w.at(co, ci, i));
        sum += w.at(co, ci, i);
      }
      EXPECT_NEAR(k.at(co, ci, 1, 1), -sum, 1e-15);
    }
}

TEST(PairsToKernel, AngularSet) {
  Rng rng(2);
  const auto w = KernelWeights<double>::random(1, 1, 8, false, rng);
  const auto k = pairs_to_kernel(make_pairset(PairSetKind::angular), w);
  for (std::size_t i = 0; i < 8; ++i)
    EXPECT_EQ(k.at(0, 0, 1 + kRing8[i].du, 1 + kRing8[i].dv), w.w[(i + 7) % 8] - w.w[i]);
  EXPECT_EQ(k.at(0, 0, 1, 1), 0.0);
}

TEST(PairsToKernel, LinearAndBoundedByTriangleInequality) {
  Rng rng(3);
  for (const auto& cfg : reparameterizable_ops()) {
    if (op_has_center(cfg)) continue;
    const auto ps = op_pairset(cfg);
    // Dyadic weights keep every sum exact, so linearity holds bit for bit.
    KernelWeights<double> w1(2, 2, ps.size()), w2(2, 2, ps.size()), mix(2, 2, ps.size());
    for (std::size_t i = 0; i < w1.w.size(); ++i) {
      w1.w[i] = static_cast<double>(static_cast<int>(rng.below(64)) - 32) / 8.0;
      w2.w[i] = static_cast<double>(static_cast<int>(rng.below(64)) - 32) / 16.0;
      mix.w[i] = 3.0 * w1.w[i] + w2.w[i];
    }
    const auto k1 = pairs_to_kernel(ps, w1), k2 = pairs_to_kernel(ps, w2), km = pairs_to_kernel(ps, mix);
    for (std::size_t i = 0; i < km.size(); ++i) EXPECT_EQ(km[i], 3.0 * k1[i] + k2[i]) << cfg.label();

    const std::size_t per = ps.window() * ps.window();
    for (std::size_t g = 0; g < 4; ++g) {
      double kabs = 0.0, wabs = 0.0;
      for (std::size_t i = 0; i < per; ++i) kabs += std::abs(k1[g * per + i]);
      for (std::size_t i = 0; i < ps.size(); ++i) wabs += std::abs(w1.w[g * ps.size() + i]);
      EXPECT_LE(kabs, 2.0 * wabs);
    }
  }
}

TEST(Reparameterize, GcdcCenterFormula) {
  Rng rng(4);
  for (double theta : {0.0, 0.25, 1.0}) {
    auto w = KernelWeights<double>::random(1, 2, 8, true, rng);
    const auto k = reparameterize(config(OpKind::gcdc, theta), w);
    for (std::size_t ci = 0; ci < 2; ++ci) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(k.at(0, ci, 1 + kRing8[i].du, 1 + kRing8[i].dv), w.at(0, ci, i));
        sum += w.at(0, ci, i);
      }
      EXPECT_NEAR(k.at(0, ci, 1, 1), (1 - theta) * w.center_at(0, ci) - theta * sum, 1e-14);
    }
  }
}

TEST(Reparameterize, ForwardEquivalenceDouble) {
  Rng rng(5);
  for (const auto& cfg : reparameterizable_ops()) {
    const auto x = random_tensor<double>({2, 3, 9, 10}, rng);
    const auto w = random_weights<double>(cfg, 2, 3, rng);
    const auto k = reparameterize(cfg, w);
    const auto a = naive_forward(cfg, x, w);
    const auto b = conv2d(x, k, PadSpec::same(2, op_window(cfg)));
    ASSERT_EQ(a.shape(), b.shape());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12) << cfg.label();
  }
}

TEST(Reparameterize, MediConvIsUnsupported) {
  const auto cfg = config(OpKind::mediconv);
  EXPECT_FALSE(op_reparameterizable(cfg));
  EXPECT_THROW(reparameterize(cfg, KernelWeights<double>(1, 1, 9)), UnsupportedOperation);
  EXPECT_THROW(op_pairset(cfg), UnsupportedOperation);
  EXPECT_TRUE(op_reparameterizable(config(OpKind::apdc)));
}

TEST(OpNames, RoundTrip) {
  for (auto k : {OpKind::cpdc, OpKind::apdc, OpKind::rpdc, OpKind::cdc, OpKind::gcdc, OpKind::ccdc_hv,
                 OpKind::ccdc_dg, OpKind::random_pdc, OpKind::custom, OpKind::dense, OpKind::mediconv})
    EXPECT_EQ(parse_op(op_name(k)), k);
  EXPECT_THROW(parse_op("sobel"), InvalidArgument);
  EXPECT_EQ(config(OpKind::gcdc, 0.5).label(), "gcdc(theta=0.5)");
  EXPECT_EQ(config(OpKind::apdc).label(), "apdc");
}

TEST(Verify, ReparameterizableOpsPassBothPrecisions) {
  for (const auto& cfg : reparameterizable_ops()) {
    for (auto p : {Precision::single, Precision::double_}) {
      const auto r = verify_equivalence(cfg, small_verify(p));
      EXPECT_TRUE(r.pass) << r.op << " " << r.precision << " err=" << r.max_abs_error;
      EXPECT_LE(r.max_abs_error, r.tolerance);
      EXPECT_EQ(r.trials, 5u);
    }
  }
}

TEST(Verify, ZeroWeightsAndDenseAreExact) {
  auto opts = small_verify(Precision::single);
  opts.weight_scale = 0.0;
  EXPECT_EQ(verify_equivalence(config(OpKind::apdc), opts).max_abs_error, 0.0);
  EXPECT_EQ(verify_equivalence(config(OpKind::dense), small_verify(Precision::single)).max_abs_error, 0.0);
}

TEST(Verify, FailureIsReportedNotThrown) {
  auto opts = small_verify(Precision::single);
  opts.tolerance = 0.0;
  const auto r = verify_equivalence(config(OpKind::apdc), opts);
  EXPECT_GT(r.max_abs_error, 0.0);
  EXPECT_FALSE(r.pass);
}

TEST(Verify, UnitWeightScaleErrorIsRoundoffRelativeToOutput) {
  // With weights in [-1, 1) the outputs reach tens; the pair loop and the
  // dense kernel then differ by single-precision roundoff of that magnitude.
  auto opts = small_verify(Precision::single);
  opts.shape = {1, 16, 32, 32};
  opts.trials = 1;
  opts.weight_scale = 1.0;
  const auto cfg = config(OpKind::apdc);
  const auto r = verify_equivalence(cfg, opts);
  Rng rng(opts.seed * 1000003);
  const auto x = random_tensor<float>(opts.shape, rng);
  const auto w = random_weights<float>(cfg, opts.out_channels, 16, rng, 1.0);
  double peak = 0.0;
  for (float v : naive_forward(cfg, x, w).data()) peak = std::max(peak, double(std::abs(v)));
  EXPECT_LE(r.max_abs_error, 64.0 * std::numeric_limits<float>::epsilon() * peak);
}

TEST(Verify, DefaultWeightScale) {
  EXPECT_DOUBLE_EQ(default_weight_scale(config(OpKind::apdc), 16), 1.0 / std::sqrt(128.0));
  EXPECT_DOUBLE_EQ(default_weight_scale(config(OpKind::dense), 4), 1.0 / 6.0);
}

TEST(Verify, JsonReport) {
  const auto r = verify_equivalence(config(OpKind::cpdc), small_verify(Precision::double_));
  const auto j = nlohmann::json::parse(report_to_json(r));
  EXPECT_EQ(j.at("op"), "cpdc");
  EXPECT_EQ(j.at("precision"), "double");
  EXPECT_EQ(j.at("trials"), 5);
  EXPECT_TRUE(j.at("pass").get<bool>());
  EXPECT_EQ(j.at("shape"), nlohmann::json::array({1, 4, 20, 18}));
  const auto arr = nlohmann::json::parse(reports_to_json({r, r}));
  EXPECT_EQ(arr.size(), 2u);
}

TEST(Bench, TimingsPositiveAndCsvHasThreeRows) {
  BenchOptions o;
  o.shape = {1, 4, 32, 32};
  o.out_channels = 4;
  o.repetitions = 5;
  o.warmup = 1;
  const auto r = bench_compare(config(OpKind::apdc), o);
  EXPECT_GT(r.naive_ns, 0.0);
  EXPECT_GT(r.reparam_ns, 0.0);
  EXPECT_GT(r.dense_ns, 0.0);
  EXPECT_LE(r.max_abs_error, 1e-5);
  EXPECT_EQ(bench_csv_header(), "op,shape,path,median_ns,max_abs_error\n");
  std::istringstream rows(bench_csv_rows(r));
  std::string line;
  std::vector<std::string> paths;
  while (std::getline(rows, line)) {
    ASSERT_FALSE(line.empty());
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    const auto third = line.find(',', second + 1);
    paths.push_back(line.substr(second + 1, third - second - 1));
    EXPECT_EQ(line.substr(0, first), "\"apdc\"");
  }
  EXPECT_EQ(paths, (std::vector<std::string>{"naive", "reparam", "dense"}));
}

TEST(Bench, MediConvRejected) {
  BenchOptions o;
  o.shape = {1, 1, 8, 8};
  o.repetitions = 1;
  EXPECT_THROW(bench_compare(config(OpKind::mediconv), o), UnsupportedOperation);
}
