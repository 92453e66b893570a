#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pocr/image.hpp"

namespace pocr {

// A character region. Boxes span the character's ink columns over the full
// height of the (single-line) word image, so a crop keeps the glyph's size
// and baseline position. Confidence is the detector's score in [0, 1].
struct CharBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  double confidence = 0.0;
  std::optional<char> char_hint;

  int right() const noexcept { return x + w; }
  int bottom() const noexcept { return y + h; }
  bool inside(int width, int height) const noexcept {
    return w > 0 && h > 0 && x >= 0 && y >= 0 && x + w <= width && y + h <= height;
  }

  friend bool operator==(const CharBox&, const CharBox&) = default;
};

enum class Split { kTrain, kTestIv, kTestOov };
enum class PseudoOp { kRemove, kSwap, kTruncateHead, kTruncateTail };

std::string_view to_string(Split split) noexcept;
std::string_view to_string(PseudoOp op) noexcept;
std::optional<Split> parse_split(std::string_view s) noexcept;
std::optional<PseudoOp> parse_op(std::string_view s) noexcept;

struct Provenance {
  enum class Kind { kRendered, kPseudo };
  Kind kind = Kind::kRendered;
  std::string origin_id;  // pseudo only
  PseudoOp op = PseudoOp::kRemove;  // pseudo only

  static Provenance rendered() { return {}; }
  static Provenance pseudo(std::string origin, PseudoOp op) {
    return {Kind::kPseudo, std::move(origin), op};
  }
  bool is_pseudo() const noexcept { return kind == Kind::kPseudo; }

  friend bool operator==(const Provenance& a, const Provenance& b) {
    if (a.kind != b.kind) return false;
    return a.kind == Kind::kRendered || (a.origin_id == b.origin_id && a.op == b.op);
  }
};

// One word image with its label, left-to-right character boxes and quality
// a_i (mean box confidence).
struct TextSample {
  std::string id;
  GrayImage image;
  std::string label;
  std::vector<CharBox> boxes;
  double quality = 0.0;
  Provenance provenance;
  Split split = Split::kTrain;

  friend bool operator==(const TextSample&, const TextSample&) = default;
};

// Checks |boxes| == |label|, boxes inside the image and strictly ordered by x,
// confidences in [0, 1]. Returns an empty string when valid, else a reason.
std::string validate_sample(const TextSample& sample);

}  // namespace pocr
