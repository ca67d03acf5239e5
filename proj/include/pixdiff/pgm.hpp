#pragma once

// Binary PGM (P5) images with 8-bit samples.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pixdiff/tensor.hpp"

namespace pixdiff::pgm {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 255;
  std::vector<std::uint8_t> pixels;  // row-major, height * width

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Parses "P5", width, height and maxval (1..255) separated by whitespace,
/// with '#' comments allowed between header fields, then exactly one
/// whitespace byte and width * height samples. Trailing bytes are ignored.
/// Throws InvalidArgument on malformed input.
GrayImage decode(std::string_view bytes);
std::string encode(const GrayImage& img);

/// Throws InvalidArgument when the file cannot be read or is not a valid P5.
GrayImage read(const std::filesystem::path& path);
/// Written to a temporary file in the same directory and renamed into place.
void write(const std::filesystem::path& path, const GrayImage& img);

/// Writes `content` atomically (temporary file + rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// H x W plane of raw sample values.
TensorD to_plane(const GrayImage& img);

}  // namespace pixdiff::pgm
