#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <numbers>
#include <set>

#include "oracles.hpp"
#include "pixdiff/lbp.hpp"
#include "pixdiff/rng.hpp"

using namespace pixdiff;
using namespace pixdiff::lbp;

namespace {

TensorD random_integer_plane(std::size_t h, std::size_t w, Rng& rng) {
  TensorD t({h, w});
  for (auto& v : t.data()) v = static_cast<double>(rng.below(256));
  return t;
}

TensorD patch3(std::initializer_list<double> v) { return TensorD({3, 3}, std::vector<double>(v)); }

const PixelCoord kCenter{1, 1};

}  // namespace

TEST(NeighborhoodSpec, Validation) {
  NeighborhoodSpec s;
  EXPECT_NO_THROW(s.validate());
  s.points = 3;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.points = 8;
  s.radius = 0.5;
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(SampleRing, ConstantPlane) {
  TensorD plane({7, 7}, 4.25);
  for (auto interp : {Interpolation::nearest, Interpolation::bilinear}) {
    NeighborhoodSpec s{2.0, 12, interp, 0.3};
    EXPECT_EQ(sample_ring(plane, {3, 3}, s), std::vector<double>(12, 4.25));
  }
}

TEST(SampleRing, UnitRingIsIntegerNeighboursAnticlockwiseFromEast) {
  const auto plane = patch3({1, 2, 3, 4, 5, 6, 7, 8, 9});
  // E, NE, N, NW, W, SW, S, SE
  EXPECT_EQ(sample_ring(plane, kCenter, {}), (std::vector<double>{6, 3, 2, 1, 4, 7, 8, 9}));
}

TEST(SampleRing, BilinearReproducesLinearRamp) {
  TensorD plane({9, 9});
  for (std::size_t r = 0; r < 9; ++r)
    for (std::size_t c = 0; c < 9; ++c) plane.at(r, c) = static_cast<double>(c);
  for (double radius : {1.0, 1.5, 2.5}) {
    NeighborhoodSpec s{radius, 8, Interpolation::bilinear, 0.0};
    const auto v = sample_ring(plane, {4, 4}, s);
    for (std::size_t i = 0; i < 8; ++i) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / 8.0;
      EXPECT_NEAR(v[i], 4.0 + radius * std::cos(angle), 1e-12) << "radius " << radius << " sample " << i;
    }
  }
}

TEST(SampleRing, CenterOutOfRange) {
  TensorD plane({5, 5});
  EXPECT_THROW(sample_ring(plane, {5, 0}, {}), InvalidArgument);
  EXPECT_THROW(lbp_code_at(plane, {0, 7}, {}), InvalidArgument);
}

TEST(LbpCode, ConstantPatchSetsAllBits) {
  EXPECT_EQ(lbp_code(std::vector<double>(8, 3.0), 3.0), 255u);
}

TEST(LbpCode, WorkedPatch) {
  // E=3 NE=5 N=7 NW=9 W=6 SW=2 S=4 SE=8 against 5: bits 1,2,3,4,7 set.
  const auto plane = patch3({9, 7, 5, 6, 5, 3, 2, 4, 8});
  EXPECT_EQ(lbp_code_at(plane, kCenter, {}), 158u);
  EXPECT_EQ(lbp_code(sample_ring(plane, kCenter, {}), 5.0), 158u);
}

TEST(LbpCode, StrictMaximumAtCenterGivesZero) {
  const auto plane = patch3({1, 2, 3, 4, 10, 6, 7, 8, 9});
  EXPECT_EQ(lbp_code_at(plane, kCenter, {}), 0u);
}

TEST(Mapping, UniformCountsForEightPoints) {
  unsigned uniform = 0;
  for (std::uint32_t c = 0; c < 256; ++c) uniform += oracle::circular_transitions(c, 8) <= 2;
  EXPECT_EQ(uniform, 58u);
  EXPECT_EQ(build_mapping(MappingKind::u2, 8).bins, 59u);
  EXPECT_EQ(build_mapping(MappingKind::riu2, 8).bins, 10u);
  EXPECT_EQ(build_mapping(MappingKind::raw, 8).bins, 256u);
}

TEST(Mapping, RawIsIdentity) {
  const auto& m = build_mapping(MappingKind::raw, 6);
  for (std::uint32_t c = 0; c < 64; ++c) EXPECT_EQ(m(c), c);
}

TEST(Mapping, RotationInvariantMinimum) {
  const auto& ri = build_mapping(MappingKind::ri, 8);
  EXPECT_EQ(ri.canonical(0b00000110), 3u);
  EXPECT_EQ(ri.canonical(0), 0u);
  EXPECT_EQ(ri.canonical(255), 255u);
  std::set<std::uint32_t> minima;
  for (std::uint32_t c = 0; c < 256; ++c) {
    EXPECT_EQ(ri.canonical(c), oracle::min_over_rotations(c, 8));
    EXPECT_LT(ri(c), ri.bins);
    minima.insert(oracle::min_over_rotations(c, 8));
  }
  EXPECT_EQ(ri.bins, minima.size());
  EXPECT_EQ(ri.bins, 36u);
}

TEST(Mapping, RotationInvariantIsIdempotent) {
  for (unsigned p : {4u, 8u, 12u}) {
    const auto& ri = build_mapping(MappingKind::ri, p);
    for (std::uint32_t c = 0; c < (1u << p); ++c) EXPECT_EQ(ri(ri.canonical(c)), ri(c));
  }
}

TEST(Mapping, Riu2BinCountForEveryPointCount) {
  for (unsigned p = 4; p <= 16; ++p) {
    const auto& m = build_mapping(MappingKind::riu2, p);
    EXPECT_EQ(m.bins, p + 2) << "p=" << p;
    for (std::uint32_t c = 0; c < (1u << p); ++c) {
      const std::uint32_t expected =
          oracle::circular_transitions(c, p) <= 2 ? static_cast<std::uint32_t>(std::popcount(c)) : p + 1;
      ASSERT_EQ(m(c), expected) << "p=" << p << " code=" << c;
    }
  }
}

TEST(Mapping, U2GivesUniformCodesTheirOwnBins) {
  const auto& m = build_mapping(MappingKind::u2, 8);
  std::set<std::uint32_t> seen;
  for (std::uint32_t c = 0; c < 256; ++c) {
    if (oracle::circular_transitions(c, 8) <= 2) {
      EXPECT_TRUE(seen.insert(m(c)).second);
      EXPECT_LT(m(c), 58u);
    } else {
      EXPECT_EQ(m(c), 58u);
    }
  }
}

TEST(Mapping, ParseAndLimits) {
  EXPECT_EQ(parse_mapping("riu2"), MappingKind::riu2);
  EXPECT_THROW(parse_mapping("lbp"), InvalidArgument);
  EXPECT_THROW(build_mapping(MappingKind::raw, 17), InvalidArgument);
  EXPECT_EQ(&build_mapping(MappingKind::u2, 8), &build_mapping(MappingKind::u2, 8));
}

TEST(LbpImage, ConstantImage) {
  TensorD plane({6, 9}, 17.0);
  for (auto kind : {MappingKind::raw, MappingKind::ri, MappingKind::u2, MappingKind::riu2}) {
    const auto& m = build_mapping(kind, 8);
    const auto codes = lbp_image(plane, {}, m);
    for (auto c : codes.data()) EXPECT_EQ(c, m(255));
  }
}

TEST(LbpImage, MatchesPerPixelOracle) {
  Rng rng(16);
  const auto plane = random_integer_plane(16, 16, rng);
  const auto& raw = build_mapping(MappingKind::raw, 8);
  const auto codes = lbp_image(plane, {}, raw);
  for (long i = 0; i < 16; ++i)
    for (long j = 0; j < 16; ++j) EXPECT_EQ(codes.at(i, j), oracle::lbp8(plane, i, j)) << i << "," << j;
}

TEST(LbpImage, CropDropsFrame) {
  Rng rng(17);
  const auto plane = random_integer_plane(10, 12, rng);
  const auto& raw = build_mapping(MappingKind::raw, 8);
  const auto full = lbp_image(plane, {}, raw);
  const auto crop = lbp_image(plane, {}, raw, Border::crop);
  ASSERT_EQ(crop.shape(), (Shape{8, 10}));
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 10; ++j) EXPECT_EQ(crop.at(i, j), full.at(i + 1, j + 1));
}

TEST(LbpImage, AffineInvarianceAllInterpolations) {
  Rng rng(18);
  const NeighborhoodSpec specs[] = {{},
                                    {1.0, 8, Interpolation::bilinear, 0.0},
                                    {1.5, 12, Interpolation::bilinear, 0.0},
                                    {2.0, 16, Interpolation::bilinear, 0.1}};
  for (int img = 0; img < 10; ++img) {
    const auto x = random_integer_plane(20, 20, rng);
    for (const auto& spec : specs) {
      const auto& m = build_mapping(MappingKind::raw, static_cast<unsigned>(spec.points));
      const auto base = lbp_image(x, spec, m);
      for (double a : {0.5, 3.0})
        for (double b : {-7.0, 11.0}) {
          TensorD y(x.shape());
          for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
          EXPECT_EQ(lbp_image(y, spec, m), base) << "a=" << a << " b=" << b << " r=" << spec.radius;
        }
    }
  }
}

TEST(LbpImage, MonotoneTransformInvarianceNearest) {
  Rng rng(19);
  const auto& m = build_mapping(MappingKind::raw, 8);
  for (int img = 0; img < 5; ++img) {
    const auto x = random_integer_plane(15, 15, rng);
    TensorD y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::exp(x[i] / 40.0) + std::cbrt(x[i]);
    EXPECT_EQ(lbp_image(y, {}, m), lbp_image(x, {}, m));
  }
}

TEST(LbpImage, ShiftByTen) {
  Rng rng(20);
  const auto x = random_integer_plane(12, 12, rng);
  TensorD y = x;
  for (auto& v : y.data()) v += 10.0;
  const auto& m = build_mapping(MappingKind::riu2, 8);
  EXPECT_EQ(lbp_image(y, {}, m), lbp_image(x, {}, m));
}

TEST(ExtendedLbp, ConstantImageAllOnes) {
  TensorD plane({9, 9}, 2.0);
  NeighborhoodSpec inner{1.0, 8, Interpolation::bilinear, 0.0};
  NeighborhoodSpec outer{2.0, 8, Interpolation::bilinear, 0.0};
  EXPECT_EQ(elbp_angular_code(plane, {4, 4}, inner), 255u);
  EXPECT_EQ(elbp_radial_code(plane, {4, 4}, inner, outer), 255u);
}

TEST(ExtendedLbp, RadialOnDistanceField) {
  TensorD plane({11, 11});
  for (std::size_t r = 0; r < 11; ++r)
    for (std::size_t c = 0; c < 11; ++c) plane.at(r, c) = std::hypot(double(r) - 5.0, double(c) - 5.0);
  for (auto interp : {Interpolation::nearest, Interpolation::bilinear}) {
    NeighborhoodSpec inner{1.0, 8, interp, 0.0};
    NeighborhoodSpec outer{3.0, 8, interp, 0.0};
    EXPECT_EQ(elbp_radial_code(plane, {5, 5}, inner, outer), 255u);
  }
}

TEST(ExtendedLbp, MatchesPairwiseOracle) {
  Rng rng(21);
  const auto plane = random_integer_plane(9, 9, rng);
  NeighborhoodSpec inner{1.0, 8, Interpolation::nearest, 0.0};
  NeighborhoodSpec outer{2.0, 8, Interpolation::nearest, 0.0};
  for (std::size_t r = 2; r < 7; ++r)
    for (std::size_t c = 2; c < 7; ++c) {
      std::uint32_t ang = 0, rad = 0;
      for (std::size_t i = 0; i < 8; ++i) {
        const auto& a = oracle::kNeighbours[i];
        const auto& b = oracle::kNeighbours[(i + 1) % 8];
        // Nearest sampling of the radius-2 circle: the diagonals round to
        // (1, 1) offsets, the axes to (0, 2).
        const double angle = static_cast<double>(i) * std::numbers::pi / 4.0;
        const long orow = std::lround(-2.0 * std::sin(angle)), ocol = std::lround(2.0 * std::cos(angle));
        const double inner_v = plane.at(r + a[0], c + a[1]);
        if (plane.at(r + b[0], c + b[1]) >= inner_v) ang |= 1u << i;
        if (plane.at(r + orow, c + ocol) >= inner_v) rad |= 1u << i;
      }
      EXPECT_EQ(elbp_angular_code(plane, {r, c}, inner), ang);
      EXPECT_EQ(elbp_radial_code(plane, {r, c}, inner, outer), rad);
    }
}

TEST(ExtendedLbp, RadialNeedsOrderedRings) {
  TensorD plane({9, 9});
  NeighborhoodSpec a{2.0, 8, Interpolation::nearest, 0.0};
  NeighborhoodSpec b{1.0, 8, Interpolation::nearest, 0.0};
  EXPECT_THROW(elbp_radial_code(plane, {4, 4}, a, b), InvalidArgument);
  EXPECT_THROW(elbp_radial_code(plane, {4, 4}, a, a), InvalidArgument);
  NeighborhoodSpec c{3.0, 12, Interpolation::nearest, 0.0};
  EXPECT_THROW(elbp_radial_code(plane, {4, 4}, b, c), InvalidArgument);
}

TEST(CsLbp, ConstantPatch) {
  const std::vector<double> flat(8, 1.0);
  EXPECT_EQ(cslbp_code(flat), 15u);
  EXPECT_EQ(cslbp_code(flat, 0.1), 0u);
  EXPECT_THROW(cslbp_code(std::vector<double>(7, 1.0)), InvalidArgument);
  EXPECT_THROW(cslbp_code(flat, -1.0), InvalidArgument);
}

TEST(CsLbp, MatchesPairwiseOracle) {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(8);
    for (auto& v : s) v = rng.uniform(0.0, 1.0);
    const double t = trial % 2 ? 0.0 : 0.2;
    std::uint32_t expected = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (s[i] - s[i + 4] - t >= 0.0) expected |= 1u << i;
    }
    EXPECT_EQ(cslbp_code(s, t), expected);
  }
}

TEST(CsLbp, HalfTurnComplementsCode) {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(12);
    for (auto& v : s) v = rng.uniform(-1.0, 1.0);
    std::vector<double> turned(12);
    for (std::size_t i = 0; i < 12; ++i) turned[i] = s[(i + 6) % 12];
    EXPECT_EQ(cslbp_code(turned), ~cslbp_code(s) & 0x3Fu);
  }
}

TEST(Histogram, ConstantCodeImage) {
  const auto& m = build_mapping(MappingKind::riu2, 8);
  Tensor<std::uint32_t> codes({5, 5}, m(255));
  const auto h = histogram(codes, m);
  ASSERT_EQ(h.bins(), 10u);
  for (std::size_t b = 0; b < h.bins(); ++b) EXPECT_EQ(h.frequencies[b], b == m(255) ? 1.0 : 0.0);
}

TEST(Histogram, FrequenciesSumToOne) {
  Rng rng(24);
  for (auto kind : {MappingKind::raw, MappingKind::ri, MappingKind::u2, MappingKind::riu2}) {
    const auto& m = build_mapping(kind, 8);
    const auto h = histogram(lbp_image(random_integer_plane(23, 17, rng), {}, m), m);
    double sum = 0.0;
    for (double f : h.frequencies) sum += f;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Histogram, KnownMultiset) {
  const auto& m = build_mapping(MappingKind::riu2, 8);
  Tensor<std::uint32_t> codes({4, 4}, {0, 0, 1, 9, 9, 9, 2, 2, 2, 2, 8, 8, 0, 3, 3, 9});
  const auto h = histogram(codes, m);
  const std::vector<double> expected{3, 1, 4, 2, 0, 0, 0, 0, 2, 4};
  EXPECT_EQ(h.counts, expected);
  EXPECT_EQ(h.frequencies[2], 0.25);
}

TEST(Histogram, OutOfRangeCodeIsInternalError) {
  const auto& m = build_mapping(MappingKind::riu2, 8);
  Tensor<std::uint32_t> codes({2, 2}, {0, 1, 2, 10});
  EXPECT_THROW(histogram(codes, m), InternalError);
}

TEST(Histogram, Serialization) {
  const auto& m = build_mapping(MappingKind::riu2, 4);
  Tensor<std::uint32_t> codes({1, 4}, {0, 0, 5, 1});
  const auto h = histogram(codes, m);
  EXPECT_EQ(histogram_to_csv(h), "bin,count,frequency\n0,2,0.5\n1,1,0.25\n2,0,0\n3,0,0\n4,0,0\n5,1,0.25\n");
  const auto json = histogram_to_json(h);
  EXPECT_NE(json.find("\"mapping\": \"riu2\""), std::string::npos);
  EXPECT_NE(json.find("\"bins\": 6"), std::string::npos);
}
