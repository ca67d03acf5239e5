#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "pixdiff/error.hpp"
#include "pixdiff/pgm.hpp"
#include "pixdiff/rng.hpp"

using namespace pixdiff;
namespace fs = std::filesystem;

namespace {

std::string with_pixels(std::string header, std::initializer_list<int> px) {
  for (int p : px) header.push_back(static_cast<char>(p));
  return header;
}

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / ("pixdiff_pgm_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Pgm, DecodeMinimal) {
  const auto img = pgm::decode(with_pixels("P5\n3 2\n255\n", {0, 1, 2, 253, 254, 255}));
  EXPECT_EQ(img.width, 3u);
  EXPECT_EQ(img.height, 2u);
  EXPECT_EQ(img.maxval, 255u);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 1, 2, 253, 254, 255}));
  const auto plane = pgm::to_plane(img);
  EXPECT_EQ(plane.shape(), (Shape{2, 3}));
  EXPECT_EQ(plane.at(1, 0), 253.0);
}

TEST(Pgm, CommentsAndWhitespace) {
  const auto img = pgm::decode(with_pixels("P5 # made by hand\n# size next\n 2\t1 # w h\n15\n", {7, 15}));
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.height, 1u);
  EXPECT_EQ(img.maxval, 15u);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{7, 15}));
}

TEST(Pgm, SampleBytesMayLookLikeWhitespaceOrComments) {
  // A single whitespace byte ends the header; '#', '\n' and ' ' after it are
  // pixel data.
  const auto img = pgm::decode(with_pixels("P5\n4 1\n255\n", {'#', '\n', ' ', '5'}));
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{'#', '\n', ' ', '5'}));
}

TEST(Pgm, RoundTripIsByteIdentical) {
  Rng rng(3);
  pgm::GrayImage img;
  img.width = 17;
  img.height = 9;
  for (std::size_t i = 0; i < 17 * 9; ++i) img.pixels.push_back(static_cast<std::uint8_t>(rng.below(256)));
  const std::string bytes = pgm::encode(img);
  EXPECT_EQ(bytes.substr(0, 12), "P5\n17 9\n255\n");
  EXPECT_EQ(bytes.size(), 12u + 17u * 9u);
  EXPECT_EQ(pgm::decode(bytes), img);
  EXPECT_EQ(pgm::encode(pgm::decode(bytes)), bytes);

  const auto path = temp_dir() / "round.pgm";
  pgm::write(path, img);
  EXPECT_EQ(slurp(path), bytes);
  EXPECT_EQ(pgm::read(path), img);
  fs::remove_all(path.parent_path());
}

TEST(Pgm, TrailingBytesAreIgnored) {
  const auto img = pgm::decode(with_pixels("P5\n1 1\n255\n", {9, 1, 2, 3}));
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{9}));
}

TEST(Pgm, MalformedInputsThrow) {
  const char* bad[] = {
      "",
      "P2\n1 1\n255\n\x01",
      "P5\n1 1\n",
      "P5\n0 1\n255\n",
      "P5\n1 1\n256\n\x01",
      "P5\n1 1\n0\n\x00",
      "P5\n2 2\n255\n\x01\x02\x03",
      "P5\n-1 1\n255\n\x01",
      "P5\nx 1\n255\n\x01",
      "P5\n1 1\n255",
  };
  for (const char* b : bad) EXPECT_THROW(pgm::decode(b), InvalidArgument) << b;
  EXPECT_THROW(pgm::decode(with_pixels("P5\n2 1\n100\n", {50, 101})), InvalidArgument);
  EXPECT_THROW(pgm::read("/nonexistent/dir/image.pgm"), InvalidArgument);
}

TEST(Pgm, AtomicWriteReplacesAndLeavesNoTemporaries) {
  const auto dir = temp_dir();
  const auto path = dir / "out.txt";
  pgm::write_file_atomic(path, "first");
  pgm::write_file_atomic(path, "second");
  EXPECT_EQ(slurp(path), "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
  fs::remove_all(dir);
}
