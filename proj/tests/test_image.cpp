#include "doctest.h"
#include "opstage/error.hpp"
#include "opstage/image.hpp"

using namespace opstage;

namespace {

RawRaster raster(int w, int h, std::vector<std::uint32_t> v, std::uint32_t max_value = 255) {
  return RawRaster{w, h, max_value, std::move(v)};
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an opstage::Error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("quantize_image uses floor(v * N / (max + 1))") {
  CHECK(quantize_image(raster(2, 1, {0, 0}), 255, 4).pixels()[0] == 0);
  CHECK(quantize_image(raster(1, 1, {255}), 255, 4).pixels()[0] == 3);
  CHECK(quantize_image(raster(1, 1, {128}), 255, 4).pixels()[0] == 2);
  CHECK(quantize_image(raster(1, 1, {127}), 255, 4).pixels()[0] == 1);
  CHECK(quantize_image(raster(1, 1, {65535}, 65535), 65535, 16).pixels()[0] == 15);

  // Every bin is hit exactly (max + 1) / N times.
  std::vector<std::uint32_t> all(256);
  for (std::uint32_t v = 0; v < 256; ++v) all[v] = v;
  const GrayImage q = quantize_image(raster(256, 1, all), 255, 16);
  std::vector<int> hist(16, 0);
  for (auto p : q.pixels()) ++hist[p];
  for (int c : hist) CHECK(c == 16);
}

TEST_CASE("quantize_image errors") {
  CHECK(kind_of([] { quantize_image(raster(1, 1, {300}), 255, 4); }) == ErrorKind::InvalidPixel);
  CHECK(kind_of([] { quantize_image(raster(0, 0, {}), 255, 4); }) == ErrorKind::EmptyImage);
  CHECK(kind_of([] { quantize_image(raster(1, 1, {1}), 255, 1); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("GrayImage rejects out-of-range pixels and bad shapes") {
  CHECK(kind_of([] { GrayImage(2, 1, 4, {0, 4}); }) == ErrorKind::InvalidPixel);
  CHECK(kind_of([] { GrayImage(2, 2, 4, {0, 1, 2}); }) == ErrorKind::ShapeError);
  CHECK(kind_of([] { GrayImage(0, 2, 4, {}); }) == ErrorKind::EmptyImage);
}

TEST_CASE("PGM decoding") {
  SUBCASE("P2 with comments") {
    const RawRaster r = decode_pgm("P2\n# a comment\n3 2\n# another\n15\n0 1 2\n3 4 15\n");
    CHECK(r.width == 3);
    CHECK(r.height == 2);
    CHECK(r.max_value == 15);
    CHECK(r.values == std::vector<std::uint32_t>{0, 1, 2, 3, 4, 15});
  }
  SUBCASE("P5 8-bit") {
    std::string bytes = "P5 2 2 255\n";
    bytes += std::string{'\x00', '\x7f', '\x80', '\xff'};
    CHECK(decode_pgm(bytes).values == std::vector<std::uint32_t>{0, 127, 128, 255});
  }
  SUBCASE("P5 16-bit big-endian") {
    std::string bytes = "P5\n2 1\n65535\n";
    bytes += std::string{'\x01', '\x02', '\xff', '\xfe'};
    CHECK(decode_pgm(bytes).values == std::vector<std::uint32_t>{0x0102, 0xfffe});
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(decode_pgm("P6\n1 1\n255\nabc"), Error);
    CHECK_THROWS_AS(decode_pgm("P3\n1 1\n255\n1 2 3\n"), Error);
    CHECK_THROWS_AS(decode_pgm("P5\n2 2\n255\n\x01"), Error);
    CHECK_THROWS_AS(decode_pgm("P2\n1 1\n10\n11\n"), Error);
    CHECK_THROWS_AS(decode_pgm("GIF89a"), Error);
  }
}

TEST_CASE("encode_pgm round-trips through decode and quantize at the same level count") {
  for (int levels : {4, 16, 300}) {
    std::vector<std::uint16_t> px;
    for (int i = 0; i < 35; ++i) px.push_back(static_cast<std::uint16_t>((i * 7) % levels));
    const GrayImage img(7, 5, levels, px);
    const RawRaster back = decode_pgm(encode_pgm(img));
    CHECK(back.max_value == static_cast<std::uint32_t>(levels - 1));
    CHECK(quantize_image(back, back.max_value, levels) == img);
  }
}
