#include "pixdiff/lbp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace pixdiff::lbp {

void NeighborhoodSpec::validate() const {
  detail::require(radius >= 1.0, "neighborhood radius must be >= 1");
  detail::require(points >= 4 && points <= 24, "neighborhood needs between 4 and 24 points");
}

std::string_view mapping_name(MappingKind kind) noexcept {
  switch (kind) {
    case MappingKind::raw: return "raw";
    case MappingKind::ri: return "ri";
    case MappingKind::u2: return "u2";
    case MappingKind::riu2: return "riu2";
  }
  return "raw";
}

MappingKind parse_mapping(std::string_view name) {
  if (name == "raw") return MappingKind::raw;
  if (name == "ri") return MappingKind::ri;
  if (name == "u2") return MappingKind::u2;
  if (name == "riu2") return MappingKind::riu2;
  throw InvalidArgument("unknown LBP mapping '" + std::string(name) + "'");
}

unsigned transitions(std::uint32_t code, unsigned points) noexcept {
  unsigned count = 0;
  for (unsigned i = 0; i < points; ++i) {
    const unsigned a = (code >> i) & 1u;
    const unsigned b = (code >> ((i + 1) % points)) & 1u;
    count += a ^ b;
  }
  return count;
}

std::uint32_t min_rotation(std::uint32_t code, unsigned points) noexcept {
  const std::uint32_t mask = points >= 32 ? ~0u : ((1u << points) - 1u);
  std::uint32_t best = code;
  std::uint32_t c = code;
  for (unsigned i = 1; i < points; ++i) {
    c = ((c >> 1) | (c << (points - 1))) & mask;
    best = std::min(best, c);
  }
  return best;
}

namespace {

LbpMapping make_mapping(MappingKind kind, unsigned p) {
  const std::uint32_t n = 1u << p;
  LbpMapping m;
  m.kind = kind;
  m.points = p;
  m.table.resize(n);
  switch (kind) {
    case MappingKind::raw:
      for (std::uint32_t c = 0; c < n; ++c) m.table[c] = c;
      m.representative = m.table;
      m.bins = n;
      break;
    case MappingKind::ri: {
      std::map<std::uint32_t, std::uint32_t> bin_of;  // ordered by canonical code
      for (std::uint32_t c = 0; c < n; ++c) bin_of.emplace(min_rotation(c, p), 0);
      for (auto& [canon, bin] : bin_of) {
        bin = static_cast<std::uint32_t>(m.representative.size());
        m.representative.push_back(canon);
      }
      for (std::uint32_t c = 0; c < n; ++c) m.table[c] = bin_of.at(min_rotation(c, p));
      m.bins = static_cast<std::uint32_t>(m.representative.size());
      break;
    }
    case MappingKind::u2: {
      std::uint32_t next = 0;
      std::uint32_t first_nonuniform = 0;
      bool have_nonuniform = false;
      for (std::uint32_t c = 0; c < n; ++c) {
        if (transitions(c, p) <= 2) {
          m.table[c] = next++;
          m.representative.push_back(c);
        } else if (!have_nonuniform) {
          first_nonuniform = c;
          have_nonuniform = true;
        }
      }
      for (std::uint32_t c = 0; c < n; ++c) {
        if (transitions(c, p) > 2) m.table[c] = next;
      }
      m.representative.push_back(first_nonuniform);
      m.bins = next + 1;
      break;
    }
    case MappingKind::riu2: {
      m.bins = p + 2;
      m.representative.assign(m.bins, 0);
      for (unsigned b = 0; b <= p; ++b) m.representative[b] = (1u << b) - 1u;
      bool have_nonuniform = false;
      for (std::uint32_t c = 0; c < n; ++c) {
        if (transitions(c, p) <= 2) {
          m.table[c] = static_cast<std::uint32_t>(std::popcount(c));
        } else {
          m.table[c] = p + 1;
          if (!have_nonuniform) {
            m.representative[p + 1] = c;
            have_nonuniform = true;
          }
        }
      }
      break;
    }
  }
  return m;
}

struct Offset {
  std::ptrdiff_t dr;
  std::ptrdiff_t dc;
  double weight;
};

// Integer corners (with weights) that make up one ring sample. Offsets
// within 1e-9 of an integer are snapped so that axis-aligned samples do
// not pick up cos(pi/2) ~ 6e-17 residue.
std::vector<Offset> sample_taps(double angle, const NeighborhoodSpec& spec) {
  auto snap = [](double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
  };
  const double dr = snap(-spec.radius * std::sin(angle));
  const double dc = snap(spec.radius * std::cos(angle));
  if (spec.interpolation == Interpolation::nearest) {
    return {{static_cast<std::ptrdiff_t>(std::lround(dr)), static_cast<std::ptrdiff_t>(std::lround(dc)), 1.0}};
  }
  const double r0 = std::floor(dr), c0 = std::floor(dc);
  const double fr = dr - r0, fc = dc - c0;
  std::vector<Offset> taps;
  const auto ir = static_cast<std::ptrdiff_t>(r0);
  const auto ic = static_cast<std::ptrdiff_t>(c0);
  const double w[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
  const std::ptrdiff_t rr[4] = {ir, ir, ir + 1, ir + 1};
  const std::ptrdiff_t cc[4] = {ic, ic + 1, ic, ic + 1};
  for (int k = 0; k < 4; ++k) {
    if (w[k] != 0.0) taps.push_back({rr[k], cc[k], w[k]});
  }
  return taps;
}

std::vector<std::vector<Offset>> ring_taps(const NeighborhoodSpec& spec) {
  std::vector<std::vector<Offset>> taps(spec.points);
  for (std::size_t i = 0; i < spec.points; ++i) {
    const double angle =
        spec.start_angle + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(spec.points);
    taps[i] = sample_taps(angle, spec);
  }
  return taps;
}

void check_plane(const TensorD& plane, PixelCoord center) {
  detail::require(plane.rank() == 2, "LBP operators expect an H x W plane");
  detail::require(center.row < plane.extent(0) && center.col < plane.extent(1),
                  "center pixel out of range");
}

double clamped(const TensorD& plane, std::ptrdiff_t r, std::ptrdiff_t c) {
  const auto h = static_cast<std::ptrdiff_t>(plane.extent(0));
  const auto w = static_cast<std::ptrdiff_t>(plane.extent(1));
  r = std::clamp<std::ptrdiff_t>(r, 0, h - 1);
  c = std::clamp<std::ptrdiff_t>(c, 0, w - 1);
  return plane[static_cast<std::size_t>(r * w + c)];
}

// Interpolated as an offset from the first tap so a flat neighborhood
// returns its value exactly even when the weights do not sum to exactly 1.
double tap_value(const TensorD& plane, PixelCoord center, const std::vector<Offset>& taps) {
  const auto at = [&](const Offset& t) {
    return clamped(plane, static_cast<std::ptrdiff_t>(center.row) + t.dr,
                   static_cast<std::ptrdiff_t>(center.col) + t.dc);
  };
  const double base = at(taps.front());
  double v = 0.0;
  for (std::size_t k = 1; k < taps.size(); ++k) v += taps[k].weight * (at(taps[k]) - base);
  return base + v;
}

// Differences are divided by their largest magnitude before weighting. For
// an exact positive rescaling of the plane the quotients are bit-identical,
// so the sign of the interpolated difference cannot change with the scale.
double tap_difference(const TensorD& plane, PixelCoord center, double xc,
                      const std::vector<Offset>& taps) {
  std::array<double, 4> delta{};
  double peak = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    delta[k] = clamped(plane, static_cast<std::ptrdiff_t>(center.row) + taps[k].dr,
                       static_cast<std::ptrdiff_t>(center.col) + taps[k].dc) -
               xc;
    peak = std::max(peak, std::abs(delta[k]));
  }
  if (peak == 0.0) return 0.0;
  double d = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) d += taps[k].weight * (delta[k] / peak);
  return d;
}

std::uint32_t code_from_taps(const TensorD& plane, PixelCoord center,
                             const std::vector<std::vector<Offset>>& taps) {
  const double xc = plane[center.row * plane.extent(1) + center.col];
  std::uint32_t code = 0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    if (tap_difference(plane, center, xc, taps[i]) >= 0.0) code |= 1u << i;
  }
  return code;
}

}  // namespace

const LbpMapping& build_mapping(MappingKind kind, unsigned points) {
  detail::require(points >= 1 && points <= 16, "mapping tables support 1 to 16 points");
  static std::mutex mu;
  static std::map<std::pair<MappingKind, unsigned>, std::unique_ptr<const LbpMapping>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{kind, points}];
  if (!slot) slot = std::make_unique<const LbpMapping>(make_mapping(kind, points));
  return *slot;
}

std::vector<double> sample_ring(const TensorD& plane, PixelCoord center, const NeighborhoodSpec& spec) {
  spec.validate();
  check_plane(plane, center);
  std::vector<double> out;
  out.reserve(spec.points);
  for (const auto& taps : ring_taps(spec)) out.push_back(tap_value(plane, center, taps));
  return out;
}

std::uint32_t lbp_code(const std::vector<double>& samples, double center_value) {
  detail::require(samples.size() <= 24, "lbp_code supports at most 24 samples");
  std::uint32_t code = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i] - center_value >= 0.0) code |= 1u << i;
  }
  return code;
}

std::uint32_t lbp_code_at(const TensorD& plane, PixelCoord center, const NeighborhoodSpec& spec) {
  spec.validate();
  check_plane(plane, center);
  return code_from_taps(plane, center, ring_taps(spec));
}

Tensor<std::uint32_t> lbp_image(const TensorD& plane, const NeighborhoodSpec& spec,
                                const LbpMapping& mapping, Border border) {
  spec.validate();
  detail::require(plane.rank() == 2, "lbp_image expects an H x W plane");
  detail::require(mapping.points == spec.points, "mapping point count differs from neighborhood");
  const auto margin = static_cast<std::size_t>(std::ceil(spec.radius));
  const std::size_t h = plane.extent(0), w = plane.extent(1);
  detail::require(h >= 2 * margin + 1 && w >= 2 * margin + 1,
                  "plane smaller than the sampling neighborhood");
  const auto taps = ring_taps(spec);
  const std::size_t skip = border == Border::crop ? margin : 0;
  Tensor<std::uint32_t> out({h - 2 * skip, w - 2 * skip});
  for (std::size_t r = skip; r < h - skip; ++r) {
    for (std::size_t c = skip; c < w - skip; ++c) {
      out[(r - skip) * (w - 2 * skip) + (c - skip)] = mapping(code_from_taps(plane, {r, c}, taps));
    }
  }
  return out;
}

std::uint32_t elbp_angular_code(const TensorD& plane, PixelCoord center, const NeighborhoodSpec& spec) {
  const auto x = sample_ring(plane, center, spec);
  std::uint32_t code = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[(i + 1) % x.size()] - x[i] >= 0.0) code |= 1u << i;
  }
  return code;
}

std::uint32_t elbp_radial_code(const TensorD& plane, PixelCoord center, const NeighborhoodSpec& inner,
                               const NeighborhoodSpec& outer) {
  detail::require(inner.points == outer.points, "radial LBP rings need equal point counts");
  detail::require(inner.start_angle == outer.start_angle, "radial LBP rings need equal start angles");
  detail::require(inner.radius < outer.radius, "radial LBP needs inner radius < outer radius");
  const auto xi = sample_ring(plane, center, inner);
  const auto xo = sample_ring(plane, center, outer);
  std::uint32_t code = 0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (xo[i] - xi[i] >= 0.0) code |= 1u << i;
  }
  return code;
}

std::uint32_t cslbp_code(const std::vector<double>& samples, double threshold) {
  detail::require(samples.size() % 2 == 0, "CS-LBP needs an even number of samples");
  detail::require(samples.size() <= 48, "CS-LBP supports at most 48 samples");
  detail::require(threshold >= 0.0, "CS-LBP threshold must be non-negative");
  const std::size_t half = samples.size() / 2;
  std::uint32_t code = 0;
  for (std::size_t i = 0; i < half; ++i) {
    if (samples[i] - samples[i + half] - threshold >= 0.0) code |= 1u << i;
  }
  return code;
}

Histogram histogram(const Tensor<std::uint32_t>& codes, const LbpMapping& mapping) {
  Histogram h;
  h.kind = mapping.kind;
  h.points = mapping.points;
  h.counts.assign(mapping.bins, 0.0);
  for (std::uint32_t c : codes.data()) {
    if (c >= mapping.bins) {
      throw InternalError("code " + std::to_string(c) + " outside the " + std::to_string(mapping.bins) +
                          " bins of the mapping");
    }
    h.counts[c] += 1.0;
  }
  const double total = static_cast<double>(codes.size());
  h.frequencies.resize(h.counts.size());
  for (std::size_t b = 0; b < h.counts.size(); ++b) h.frequencies[b] = total > 0 ? h.counts[b] / total : 0.0;
  return h;
}

std::string histogram_to_csv(const Histogram& h) {
  std::ostringstream os;
  os << "bin,count,frequency\n";
  char buf[64];
  for (std::size_t b = 0; b < h.bins(); ++b) {
    std::snprintf(buf, sizeof buf, "%zu,%.0f,%.17g\n", b, h.counts[b], h.frequencies[b]);
    os << buf;
  }
  return os.str();
}

std::string histogram_to_json(const Histogram& h) {
  nlohmann::json j;
  j["mapping"] = mapping_name(h.kind);
  j["points"] = h.points;
  j["bins"] = h.bins();
  j["counts"] = h.counts;
  j["frequencies"] = h.frequencies;
  return j.dump(2) + "\n";
}

}  // namespace pixdiff::lbp
