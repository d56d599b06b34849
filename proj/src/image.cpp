#include "opstage/image.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "opstage/error.hpp"

namespace opstage {

GrayImage::GrayImage(int width, int height, int levels, std::vector<std::uint16_t> pixels)
    : width_(width), height_(height), levels_(levels), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::EmptyImage, "image dimensions must be positive");
  }
  if (levels <= 0 || levels > 65536) {
    throw Error(ErrorKind::InvalidArgument, "levels must be in [1, 65536]");
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorKind::ShapeError, "pixel count does not match width x height");
  }
  for (std::uint16_t p : pixels_) {
    if (p >= levels) {
      throw Error(ErrorKind::InvalidPixel,
                  "pixel value " + std::to_string(p) + " not below levels " + std::to_string(levels));
    }
  }
}

GrayImage quantize_image(const RawRaster& raster, std::uint32_t max_value, int levels) {
  if (raster.width <= 0 || raster.height <= 0 || raster.values.empty()) {
    throw Error(ErrorKind::EmptyImage, "raster is empty");
  }
  if (raster.values.size() != static_cast<std::size_t>(raster.width) * raster.height) {
    throw Error(ErrorKind::ShapeError, "raster value count does not match width x height");
  }
  if (levels < 2 || levels > 65536) {
    throw Error(ErrorKind::InvalidArgument, "levels must be in [2, 65536]");
  }
  if (max_value == 0) {
    throw Error(ErrorKind::InvalidArgument, "max_value must be positive");
  }
  std::vector<std::uint16_t> out;
  out.reserve(raster.values.size());
  const std::uint64_t bins = static_cast<std::uint64_t>(max_value) + 1;
  for (std::uint32_t v : raster.values) {
    if (v > max_value) {
      throw Error(ErrorKind::InvalidPixel,
                  "raster value " + std::to_string(v) + " exceeds max " + std::to_string(max_value));
    }
    out.push_back(static_cast<std::uint16_t>(static_cast<std::uint64_t>(v) * levels / bins));
  }
  return GrayImage(raster.width, raster.height, levels, std::move(out));
}

namespace {

class PgmReader {
 public:
  explicit PgmReader(std::string_view bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads a decimal token.
  std::uint32_t header_int(const char* what) {
    skip_space_and_comments();
    const char* begin = bytes_.data() + pos_;
    const char* end = bytes_.data() + bytes_.size();
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin) {
      throw Error(ErrorKind::ParseError, std::string("PGM: bad or missing ") + what);
    }
    pos_ += static_cast<std::size_t>(ptr - begin);
    return value;
  }

  // Exactly one whitespace byte separates the header from binary data.
  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw Error(ErrorKind::ParseError, "PGM: missing whitespace before raster");
    }
    ++pos_;
  }

  std::string_view rest() const { return bytes_.substr(pos_); }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

RawRaster decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw Error(ErrorKind::ParseError, "not a PNM file");
  }
  const char kind = bytes[1];
  if (kind == '3' || kind == '6') {
    throw Error(ErrorKind::ParseError, "color PPM images are not supported; expected grayscale PGM");
  }
  if (kind != '2' && kind != '5') {
    throw Error(ErrorKind::ParseError, std::string("unsupported PNM variant P") + kind);
  }
  PgmReader reader(bytes);
  RawRaster r;
  r.width = static_cast<int>(reader.header_int("width"));
  r.height = static_cast<int>(reader.header_int("height"));
  r.max_value = reader.header_int("maxval");
  if (r.width <= 0 || r.height <= 0) throw Error(ErrorKind::EmptyImage, "PGM has zero size");
  if (r.max_value == 0 || r.max_value > 65535) {
    throw Error(ErrorKind::ParseError, "PGM maxval must be in [1, 65535]");
  }
  const std::size_t n = static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height);
  r.values.resize(n);

  if (kind == '2') {
    for (std::size_t i = 0; i < n; ++i) r.values[i] = reader.header_int("pixel");
  } else {
    reader.single_whitespace();
    const std::string_view data = reader.rest();
    const std::size_t bpp = r.max_value < 256 ? 1 : 2;
    if (data.size() < n * bpp) throw Error(ErrorKind::ParseError, "PGM raster is truncated");
    for (std::size_t i = 0; i < n; ++i) {
      if (bpp == 1) {
        r.values[i] = static_cast<unsigned char>(data[i]);
      } else {
        r.values[i] = (static_cast<std::uint32_t>(static_cast<unsigned char>(data[2 * i])) << 8) |
                      static_cast<unsigned char>(data[2 * i + 1]);
      }
    }
  }
  for (std::uint32_t v : r.values) {
    if (v > r.max_value) throw Error(ErrorKind::InvalidPixel, "PGM pixel exceeds maxval");
  }
  return r;
}

RawRaster read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_pgm(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string encode_pgm(const GrayImage& img) {
  if (img.levels() < 2) throw Error(ErrorKind::InvalidArgument, "PGM needs at least 2 levels");
  const int maxval = img.levels() - 1;
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                    "\n" + std::to_string(maxval) + "\n";
  const bool wide = maxval >= 256;
  for (std::uint16_t p : img.pixels()) {
    if (wide) out.push_back(static_cast<char>(p >> 8));
    out.push_back(static_cast<char>(p & 0xff));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  const std::string bytes = encode_pgm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

}  // namespace opstage
