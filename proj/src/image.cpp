#include "pocr/image.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "pocr/error.hpp"

namespace pocr {

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
  if (w < 0 || h < 0) throw ShapeError("negative image dimensions");
}

GrayImage GrayImage::crop(int x, int y, int w, int h) const {
  if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > width || y + h > height) {
    throw ShapeError("crop rectangle outside image");
  }
  GrayImage out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) out.at(c, r) = at(x + c, y + r);
  }
  return out;
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("short write to " + path.string());
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(const std::string& buf, std::size_t& pos) {
  while (pos < buf.size()) {
    if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  return buf.substr(start, pos - start);
}

int header_int(const std::string& buf, std::size_t& pos, const std::filesystem::path& path) {
  const std::string tok = header_token(buf, pos);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 9) {
    throw DecodeError("bad PGM header field in " + path.string());
  }
  return std::stoi(tok);
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingAsset("missing image " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  if (header_token(buf, pos) != "P5") throw DecodeError("not a binary PGM: " + path.string());
  const int w = header_int(buf, pos, path);
  const int h = header_int(buf, pos, path);
  const int maxval = header_int(buf, pos, path);
  if (maxval != 255 || w <= 0 || h <= 0) throw DecodeError("unsupported PGM in " + path.string());
  // Exactly one whitespace byte separates the header from the payload.
  if (pos >= buf.size()) throw DecodeError("truncated PGM " + path.string());
  ++pos;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (buf.size() - pos < need) throw DecodeError("truncated PGM payload in " + path.string());
  GrayImage img(w, h);
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(pos),
            buf.begin() + static_cast<std::ptrdiff_t>(pos + need), img.pixels.begin());
  return img;
}

}  // namespace pocr
