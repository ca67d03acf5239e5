#include "pixdiff/pairset.hpp"

#include <utility>

#include "json.hpp"
#include "pixdiff/error.hpp"
#include "pixdiff/rng.hpp"

namespace pixdiff {

std::string_view pairset_kind_name(PairSetKind kind) noexcept {
  switch (kind) {
    case PairSetKind::central: return "central";
    case PairSetKind::angular: return "angular";
    case PairSetKind::radial: return "radial";
    case PairSetKind::cross_hv: return "cross_hv";
    case PairSetKind::cross_dg: return "cross_dg";
    case PairSetKind::random: return "random";
  }
  return "unknown";
}

PairSet::PairSet(std::size_t window, std::vector<PixelPair> pairs)
    : window_(window), pairs_(std::move(pairs)) {
  detail::require(window_ % 2 == 1, "pair set window must be odd");
  detail::require(!pairs_.empty(), "pair set needs at least one pair");
  const int h = half();
  auto inside = [h](const PixelOffset& o) {
    return o.du >= -h && o.du <= h && o.dv >= -h && o.dv <= h;
  };
  for (const auto& p : pairs_) {
    detail::require(inside(p.minuend) && inside(p.subtrahend),
                    "pair offset outside the " + std::to_string(window_) + "x" +
                        std::to_string(window_) + " window");
  }
}

bool PairSet::center_referenced() const noexcept {
  for (const auto& p : pairs_) {
    if (p.subtrahend != PixelOffset{0, 0}) return false;
  }
  return true;
}

PairSet make_pairset(PairSetKind kind) {
  std::vector<PixelPair> pairs;
  constexpr PixelOffset center{0, 0};
  switch (kind) {
    case PairSetKind::central:
      for (const auto& o : kRing8) pairs.push_back({o, center});
      return PairSet(3, std::move(pairs));
    case PairSetKind::cross_hv:
      for (std::size_t i = 0; i < 8; i += 2) pairs.push_back({kRing8[i], center});
      return PairSet(3, std::move(pairs));
    case PairSetKind::cross_dg:
      for (std::size_t i = 1; i < 8; i += 2) pairs.push_back({kRing8[i], center});
      return PairSet(3, std::move(pairs));
    case PairSetKind::angular:
      for (std::size_t i = 0; i < 8; ++i) pairs.push_back({kRing8[(i + 1) % 8], kRing8[i]});
      return PairSet(3, std::move(pairs));
    case PairSetKind::radial:
      for (const auto& o : kRing8) pairs.push_back({{2 * o.du, 2 * o.dv}, o});
      return PairSet(5, std::move(pairs));
    case PairSetKind::random:
      break;
  }
  throw InvalidArgument("random pair sets need a window, a pair count and a seed");
}

PairSet make_random_pairset(std::size_t window, std::size_t m, std::uint64_t seed) {
  detail::require(window % 2 == 1, "pair set window must be odd");
  const int h = static_cast<int>(window / 2);
  std::vector<PixelOffset> cells;
  for (int du = -h; du <= h; ++du)
    for (int dv = -h; dv <= h; ++dv) cells.push_back({du, dv});
  std::vector<PixelPair> all;
  for (const auto& a : cells)
    for (const auto& b : cells)
      if (a != b) all.push_back({a, b});
  detail::require(m >= 1 && m <= all.size(),
                  "random pair set: m=" + std::to_string(m) + " exceeds the " +
                      std::to_string(all.size()) + " distinct ordered pairs of a " +
                      std::to_string(window) + "x" + std::to_string(window) + " window");
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(all.size() - i));
    std::swap(all[i], all[j]);
  }
  all.resize(m);
  return PairSet(window, std::move(all));
}

std::string pairset_to_json(const PairSet& ps) {
  nlohmann::json j;
  j["window"] = ps.window();
  auto& arr = j["pairs"] = nlohmann::json::array();
  for (const auto& p : ps.pairs()) {
    arr.push_back({p.minuend.du, p.minuend.dv, p.subtrahend.du, p.subtrahend.dv});
  }
  return j.dump() + "\n";
}

PairSet pairset_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("pair set JSON: ") + e.what());
  }
  detail::require(j.is_object() && j.contains("window") && j.contains("pairs"),
                  "pair set JSON needs 'window' and 'pairs'");
  detail::require(j["window"].is_number_integer() && j["window"].get<long long>() > 0,
                  "pair set JSON: 'window' must be a positive integer");
  detail::require(j["pairs"].is_array(), "pair set JSON: 'pairs' must be an array");
  std::vector<PixelPair> pairs;
  for (const auto& e : j["pairs"]) {
    detail::require(e.is_array() && e.size() == 4,
                    "pair set JSON: each pair is [du, dv, du', dv']");
    for (const auto& v : e) detail::require(v.is_number_integer(), "pair set JSON: offsets must be integers");
    pairs.push_back({{e[0].get<int>(), e[1].get<int>()}, {e[2].get<int>(), e[3].get<int>()}});
  }
  return PairSet(j["window"].get<std::size_t>(), std::move(pairs));
}

}  // namespace pixdiff
