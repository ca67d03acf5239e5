#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pixdiff/tensor.hpp"

namespace pixdiff::lbp {

enum class Interpolation { nearest, bilinear };

/// Circular sampling geometry. Sample i lies at angle
/// start_angle + 2*pi*i/points, measured anticlockwise from east, at
/// distance radius from the center. Rows grow downward, so east is
/// (0, +r) and north is (-r, 0).
///
/// With nearest interpolation and (r=1, p=8, start 0) the samples are the 8
/// integer neighbours in the order E, NE, N, NW, W, SW, S, SE.
struct NeighborhoodSpec {
  double radius = 1.0;
  std::size_t points = 8;
  Interpolation interpolation = Interpolation::nearest;
  double start_angle = 0.0;

  void validate() const;
};

struct PixelCoord {
  std::size_t row;
  std::size_t col;
};

enum class MappingKind { raw, ri, u2, riu2 };

std::string_view mapping_name(MappingKind kind) noexcept;
MappingKind parse_mapping(std::string_view name);

/// Code -> bin lookup table.
///
/// `table[code]` is the histogram bin in [0, bins). `representative[bin]` is
/// a raw code of that bin: for ri it is the minimum over the code's circular
/// rotations, so canonical(code) is the rotation-invariant code itself.
/// Bins of ri and u2 are ordered by increasing representative; u2 and riu2
/// put every non-uniform code into the last bin.
struct LbpMapping {
  MappingKind kind = MappingKind::raw;
  unsigned points = 0;
  std::uint32_t bins = 0;
  std::vector<std::uint32_t> table;
  std::vector<std::uint32_t> representative;

  std::uint32_t operator()(std::uint32_t code) const { return table[code]; }
  std::uint32_t canonical(std::uint32_t code) const { return representative[table[code]]; }
};

/// Cached per (kind, points); the returned reference stays valid for the
/// lifetime of the process. points must be in [1, 16].
const LbpMapping& build_mapping(MappingKind kind, unsigned points);

/// Number of circular 0/1 transitions in a p-bit code.
unsigned transitions(std::uint32_t code, unsigned points) noexcept;
/// Minimum over the p circular rotations of a p-bit code.
std::uint32_t min_rotation(std::uint32_t code, unsigned points) noexcept;

/// Ring samples around `center` on an H x W plane. Coordinates falling
/// outside the plane are clamped (replicate border).
std::vector<double> sample_ring(const TensorD& plane, PixelCoord center, const NeighborhoodSpec& spec);

/// sum_i s(samples[i] - center_value) * 2^i with s(d) = 1 iff d >= 0.
std::uint32_t lbp_code(const std::vector<double>& samples, double center_value);

/// LBP code computed from interpolated differences sample - center, which
/// keeps the code exactly invariant under positive affine intensity maps
/// for integer-valued images, also with bilinear sampling.
std::uint32_t lbp_code_at(const TensorD& plane, PixelCoord center, const NeighborhoodSpec& spec);

enum class Border { replicate, crop };

/// Per-pixel mapped codes. With Border::replicate every pixel gets a code;
/// with Border::crop the ceil(radius) frame is dropped.
Tensor<std::uint32_t> lbp_image(const TensorD& plane, const NeighborhoodSpec& spec,
                                const LbpMapping& mapping, Border border = Border::replicate);

/// Angular extended LBP: bit i = s(x_{i+1 mod p} - x_i) along one ring.
std::uint32_t elbp_angular_code(const TensorD& plane, PixelCoord center, const NeighborhoodSpec& spec);

/// Radial extended LBP: bit i = s(x_outer,i - x_inner,i) at matched angles.
/// Both rings need the same point count and start angle and
/// inner.radius < outer.radius.
std::uint32_t elbp_radial_code(const TensorD& plane, PixelCoord center, const NeighborhoodSpec& inner,
                               const NeighborhoodSpec& outer);

/// Center-symmetric LBP: bit i = s(x_i - x_{i+p/2} - threshold), i < p/2.
std::uint32_t cslbp_code(const std::vector<double>& samples, double threshold = 0.0);

struct Histogram {
  MappingKind kind = MappingKind::raw;
  unsigned points = 0;
  std::vector<double> counts;
  std::vector<double> frequencies;  // counts / total

  std::size_t bins() const noexcept { return counts.size(); }
};

/// Counts mapped codes per bin. A code outside [0, bins) means the code
/// image was not produced with `mapping` and raises InternalError.
Histogram histogram(const Tensor<std::uint32_t>& codes, const LbpMapping& mapping);

std::string histogram_to_csv(const Histogram& h);
std::string histogram_to_json(const Histogram& h);

}  // namespace pixdiff::lbp
