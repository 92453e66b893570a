#pragma once

#include <cstdint>

namespace pocr::font {

// Embedded 9x15 bitmap glyphs for the 94-character set, rasterized from a
// monospace typeface. Row 11 is the baseline; rows 12-14 hold descenders.
inline constexpr int kCellWidth = 9;
inline constexpr int kCellHeight = 15;

bool ink(char c, int x, int y) noexcept;

// Inclusive ink column range of c within its cell; {0, -1} for blank glyphs.
struct ColumnSpan {
  int first;
  int last;
};
ColumnSpan ink_columns(char c) noexcept;

}  // namespace pocr::font
