#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pixdiff {

/// Offset from the window center: du rows (down positive), dv columns.
struct PixelOffset {
  int du = 0;
  int dv = 0;
  friend bool operator==(const PixelOffset&, const PixelOffset&) = default;
  friend auto operator<=>(const PixelOffset&, const PixelOffset&) = default;
};

/// One term w_i * (x[minuend] - x[subtrahend]) of a pixel-difference kernel.
struct PixelPair {
  PixelOffset minuend;
  PixelOffset subtrahend;
  friend bool operator==(const PixelPair&, const PixelPair&) = default;
  friend auto operator<=>(const PixelPair&, const PixelPair&) = default;
};

/// The 8 neighbours of a 3x3 window, anticlockwise from east:
/// E, NE, N, NW, W, SW, S, SE.
inline constexpr std::array<PixelOffset, 8> kRing8{{
    {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}}};

enum class PairSetKind { central, angular, radial, cross_hv, cross_dg, random };

std::string_view pairset_kind_name(PairSetKind kind) noexcept;

/// Ordered list of pixel pairs inside an odd k x k window. The position of a
/// pair in the list is the index of its weight.
class PairSet {
 public:
  /// Throws InvalidArgument for an even window, an empty list or offsets
  /// outside [-(k-1)/2, (k-1)/2].
  PairSet(std::size_t window, std::vector<PixelPair> pairs);

  std::size_t window() const noexcept { return window_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  int half() const noexcept { return static_cast<int>(window_ / 2); }
  const std::vector<PixelPair>& pairs() const noexcept { return pairs_; }
  const PixelPair& operator[](std::size_t i) const { return pairs_[i]; }

  /// True when every subtrahend is the window center.
  bool center_referenced() const noexcept;

  friend bool operator==(const PairSet&, const PairSet&) = default;

 private:
  std::size_t window_;
  std::vector<PixelPair> pairs_;
};

/// Built-in topologies:
///  central  (k=3, m=8): (ring_i, center), ring order E..SE
///  cross_hv (k=3, m=4): (E|N|W|S, center)
///  cross_dg (k=3, m=4): (NE|NW|SW|SE, center)
///  angular  (k=3, m=8): (ring_{i+1 mod 8}, ring_i)
///  radial   (k=5, m=8): (2 * ring_i, ring_i)
/// Throws InvalidArgument for PairSetKind::random; use make_random_pairset.
PairSet make_pairset(PairSetKind kind);

/// m distinct ordered pairs (minuend != subtrahend) drawn without
/// replacement from a k x k window with a partial Fisher-Yates shuffle of the
/// row-major list of all ordered pairs, driven by Rng(seed).
PairSet make_random_pairset(std::size_t window, std::size_t m, std::uint64_t seed);

/// {"window": k, "pairs": [[du, dv, du', dv'], ...]}
std::string pairset_to_json(const PairSet& ps);
PairSet pairset_from_json(std::string_view text);

}  // namespace pixdiff
