#include "pocr/font.hpp"

#include <array>

#include "pocr/charset.hpp"

namespace pocr::font {
namespace {

using GlyphRows = std::array<std::uint16_t, kCellHeight>;

constexpr std::array<GlyphRows, Charset::kSize> kGlyphs = {{
#include "font_glyphs.inc"
}};

}  // namespace

bool ink(char c, int x, int y) noexcept {
  const auto idx = Charset::index_of(c);
  if (!idx || x < 0 || x >= kCellWidth || y < 0 || y >= kCellHeight) return false;
  return (kGlyphs[*idx][static_cast<std::size_t>(y)] >> (kCellWidth - 1 - x)) & 1U;
}

ColumnSpan ink_columns(char c) noexcept {
  ColumnSpan span{kCellWidth, -1};
  for (int x = 0; x < kCellWidth; ++x) {
    for (int y = 0; y < kCellHeight; ++y) {
      if (ink(c, x, y)) {
        span.first = span.first < x ? span.first : x;
        span.last = x;
        break;
      }
    }
  }
  if (span.last < 0) return {0, -1};
  return span;
}

}  // namespace pocr::font
