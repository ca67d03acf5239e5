#include "pixdiff/pgm.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace pixdiff::pgm {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t number(const char* field) {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 30)) throw InvalidArgument(std::string("PGM: ") + field + " is too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw InvalidArgument(std::string("PGM: missing ") + field);
    return value;
  }

  // The single whitespace byte that ends the header.
  void end_of_header() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw InvalidArgument("PGM: header must end with a whitespace byte");
    }
    ++pos_;
  }

  std::size_t position() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

GrayImage decode(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw InvalidArgument("PGM: expected magic \"P5\"");
  }
  HeaderReader header(bytes);
  GrayImage img;
  img.width = header.number("width");
  img.height = header.number("height");
  const std::size_t maxval = header.number("maxval");
  if (img.width == 0 || img.height == 0) throw InvalidArgument("PGM: width and height must be positive");
  if (maxval == 0 || maxval > 255) {
    throw InvalidArgument("PGM: maxval must be in [1, 255], got " + std::to_string(maxval));
  }
  img.maxval = static_cast<unsigned>(maxval);
  header.end_of_header();
  const std::size_t count = img.width * img.height;
  const std::size_t start = header.position();
  if (bytes.size() - start < count) {
    throw InvalidArgument("PGM: expected " + std::to_string(count) + " samples, found " +
                          std::to_string(bytes.size() - start));
  }
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                    bytes.begin() + static_cast<std::ptrdiff_t>(start + count));
  for (std::uint8_t p : img.pixels) {
    if (p > img.maxval) throw InvalidArgument("PGM: sample exceeds maxval");
  }
  return img;
}

std::string encode(const GrayImage& img) {
  detail::require(img.width > 0 && img.height > 0, "PGM: width and height must be positive");
  detail::require(img.maxval >= 1 && img.maxval <= 255, "PGM: maxval must be in [1, 255]");
  detail::require(img.pixels.size() == img.width * img.height, "PGM: pixel count differs from width * height");
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n" +
                    std::to_string(img.maxval) + "\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

GrayImage read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw InvalidArgument("cannot read '" + path.string() + "'");
  try {
    return decode(bytes);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw InvalidArgument("cannot write '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InvalidArgument("cannot move output into place at '" + path.string() + "'");
  }
}

void write(const std::filesystem::path& path, const GrayImage& img) { write_file_atomic(path, encode(img)); }

TensorD to_plane(const GrayImage& img) {
  std::vector<double> v(img.pixels.begin(), img.pixels.end());
  return TensorD({img.height, img.width}, std::move(v));
}

}  // namespace pixdiff::pgm
