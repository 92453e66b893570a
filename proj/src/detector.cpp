#include "pocr/detector.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "pocr/error.hpp"

namespace pocr {

void DetectorConfig::validate() const {
  if (min_box_area < 1) throw ConfigError("detector.min_box_area must be >= 1");
  if (merge_gap < 0) throw ConfigError("detector.merge_gap must be >= 0");
  if (fixed_threshold < 0 || fixed_threshold > 255) throw ConfigError("detector.fixed_threshold must be in [0,255]");
  if (w_fill < 0 || w_contrast < 0 || w_aspect < 0) throw ConfigError("detector weights must be non-negative");
  if (std::fabs(w_fill + w_contrast + w_aspect - 1.0) > 1e-9) throw ConfigError("detector weights must sum to 1");
  if (!(fill_reference > 0) || !(contrast_reference > 0) || !(aspect_free_ratio >= 1)) {
    throw ConfigError("detector score references must be positive");
  }
  if (!(split_ratio > 1.0)) throw ConfigError("detector.split_ratio must be > 1");
  if (!(empty_quality >= 0.0 && empty_quality <= 1.0)) throw ConfigError("detector.empty_quality must be in [0,1]");
}

int otsu_threshold(const GrayImage& image) {
  std::array<std::uint64_t, 256> hist{};
  for (auto p : image.pixels) ++hist[p];
  const double total = static_cast<double>(image.pixels.size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * static_cast<double>(hist[static_cast<std::size_t>(i)]);
  double w0 = 0.0;
  double sum0 = 0.0;
  double best = -1.0;
  int best_t = -1;
  for (int t = 0; t < 255; ++t) {
    w0 += static_cast<double>(hist[static_cast<std::size_t>(t)]);
    sum0 += t * static_cast<double>(hist[static_cast<std::size_t>(t)]);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

double box_iou(const CharBox& a, const CharBox& b) noexcept {
  const int ix = std::max(0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
  const int iy = std::max(0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
  const double inter = static_cast<double>(ix) * iy;
  const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

struct Span {
  int x0;
  int x1;  // inclusive
  long count;
};

class InkMask {
 public:
  InkMask(const GrayImage& img, int threshold) : w_(img.width), h_(img.height), bits_(img.pixels.size()) {
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] = img.pixels[i] <= threshold;
  }
  bool operator()(int x, int y) const { return bits_[static_cast<std::size_t>(y) * w_ + x] != 0; }
  int width() const { return w_; }
  int height() const { return h_; }

  long column_count(int x) const {
    long c = 0;
    for (int y = 0; y < h_; ++y) c += (*this)(x, y);
    return c;
  }

 private:
  int w_;
  int h_;
  std::vector<std::uint8_t> bits_;
};

// 8-connected components, reported as column spans with pixel counts.
std::vector<Span> components(const InkMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::pair<int, int>> stack;
  std::vector<Span> out;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!mask(x, y) || seen[i]) continue;
      Span span{x, x, 0};
      seen[i] = 1;
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        ++span.count;
        span.x0 = std::min(span.x0, cx);
        span.x1 = std::max(span.x1, cx);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h || !mask(nx, ny)) continue;
            const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
            if (!seen[ni]) {
              seen[ni] = 1;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      out.push_back(span);
    }
  }
  return out;
}

// Shrinks [x0, x1] to the columns that contain ink; returns false if none do.
bool trim(const InkMask& mask, Span& s) {
  while (s.x0 <= s.x1 && mask.column_count(s.x0) == 0) ++s.x0;
  while (s.x1 >= s.x0 && mask.column_count(s.x1) == 0) --s.x1;
  if (s.x0 > s.x1) return false;
  s.count = 0;
  for (int x = s.x0; x <= s.x1; ++x) s.count += mask.column_count(x);
  return true;
}

// Splits a span at the column of minimum ink (ties resolved towards the
// centre), recursing while pieces stay wider than the limit.
void split_wide(const InkMask& mask, Span s, double limit, int min_piece, int depth, std::vector<Span>& out) {
  const int width = s.x1 - s.x0 + 1;
  if (depth >= 8 || width <= limit || width < 2 * min_piece + 1) {
    out.push_back(s);
    return;
  }
  const double centre = 0.5 * (s.x0 + s.x1);
  int cut = -1;
  long best = 0;
  for (int x = s.x0 + min_piece; x <= s.x1 - min_piece; ++x) {
    const long c = mask.column_count(x);
    if (cut < 0 || c < best || (c == best && std::fabs(x - centre) < std::fabs(cut - centre))) {
      cut = x;
      best = c;
    }
  }
  Span left{s.x0, cut - 1, 0};
  Span right{cut, s.x1, 0};
  if (best == 0) right.x0 = cut + 1;
  if (trim(mask, left)) split_wide(mask, left, limit, min_piece, depth + 1, out);
  if (trim(mask, right)) split_wide(mask, right, limit, min_piece, depth + 1, out);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::vector<CharBox> detect_chars(const GrayImage& image, const DetectorConfig& cfg) {
  if (image.width < 4 || image.height < 4) throw ShapeError("detector needs images of at least 4x4");
  const int threshold = cfg.binarize == DetectorConfig::Binarize::kOtsu ? otsu_threshold(image) : cfg.fixed_threshold;
  if (threshold < 0) return {};
  const InkMask mask(image, threshold);

  std::vector<Span> comps = components(mask);
  // Speckles are dropped before merging so they cannot bridge a gap.
  std::erase_if(comps, [&](const Span& c) { return c.count < cfg.min_box_area; });
  std::sort(comps.begin(), comps.end(), [](const Span& a, const Span& b) { return a.x0 < b.x0; });
  std::vector<Span> groups;
  for (const Span& c : comps) {
    if (!groups.empty() && c.x0 - groups.back().x1 - 1 <= cfg.merge_gap) {
      groups.back().x1 = std::max(groups.back().x1, c.x1);
      groups.back().count += c.count;
    } else {
      groups.push_back(c);
    }
  }
  std::erase_if(groups, [&](const Span& g) { return g.count < cfg.min_box_area; });
  if (groups.empty()) return {};

  std::vector<int> widths;
  for (const Span& g : groups) widths.push_back(g.x1 - g.x0 + 1);
  std::nth_element(widths.begin(), widths.begin() + static_cast<std::ptrdiff_t>(widths.size() / 2), widths.end());
  const int median = widths[widths.size() / 2];
  std::vector<Span> pieces;
  for (const Span& g : groups) {
    split_wide(mask, g, cfg.split_ratio * median, std::max(1, median / 3), 0, pieces);
  }

  // Global background estimate for boxes whose neighbourhood is all ink.
  double bg_sum = 0.0;
  long bg_n = 0;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (!mask(x, y)) {
        bg_sum += image.at(x, y);
        ++bg_n;
      }
    }
  }
  const double global_bg = bg_n ? bg_sum / static_cast<double>(bg_n) : 255.0;

  std::vector<CharBox> boxes;
  for (const Span& p : pieces) {
    int y0 = image.height;
    int y1 = -1;
    for (int y = 0; y < image.height; ++y) {
      for (int x = p.x0; x <= p.x1; ++x) {
        if (mask(x, y)) {
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
          break;
        }
      }
    }
    if (y1 < 0) continue;
    const int w = p.x1 - p.x0 + 1;
    const int h = y1 - y0 + 1;
    long ink_n = 0;
    double ink_sum = 0.0;
    for (int y = y0; y <= y1; ++y) {
      for (int x = p.x0; x <= p.x1; ++x) {
        if (mask(x, y)) {
          ++ink_n;
          ink_sum += image.at(x, y);
        }
      }
    }
    double ring_sum = 0.0;
    long ring_n = 0;
    for (int y = std::max(0, y0 - 2); y <= std::min(image.height - 1, y1 + 2); ++y) {
      for (int x = std::max(0, p.x0 - 2); x <= std::min(image.width - 1, p.x1 + 2); ++x) {
        if (!mask(x, y)) {
          ring_sum += image.at(x, y);
          ++ring_n;
        }
      }
    }
    const double mean_ink = ink_sum / static_cast<double>(ink_n);
    const double mean_bg = ring_n ? ring_sum / static_cast<double>(ring_n) : global_bg;
    const double fill = clamp01(static_cast<double>(ink_n) / (static_cast<double>(w) * h) / cfg.fill_reference);
    const double contrast = clamp01((mean_bg - mean_ink) / cfg.contrast_reference);
    const double log_ratio = std::fabs(std::log(static_cast<double>(h) / w));
    const double aspect = clamp01(1.0 - std::max(0.0, log_ratio - std::log(cfg.aspect_free_ratio)) / std::log(4.0));
    const double conf = clamp01(cfg.w_fill * fill + cfg.w_contrast * contrast + cfg.w_aspect * aspect);
    boxes.push_back(CharBox{p.x0, 0, w, image.height, conf, std::nullopt});
  }
  std::sort(boxes.begin(), boxes.end(), [](const CharBox& a, const CharBox& b) { return a.x < b.x; });
  return boxes;
}

double word_quality(std::span<const CharBox> boxes, double empty_quality) {
  if (boxes.empty()) return empty_quality;
  double sum = 0.0;
  for (const auto& b : boxes) sum += b.confidence;
  return sum / static_cast<double>(boxes.size());
}

TextSample score_sample(TextSample sample, const DetectorConfig& cfg) {
  const std::vector<CharBox> detected = detect_chars(sample.image, cfg);
  if (sample.boxes.empty()) {
    sample.boxes = detected;
  } else if (detected.empty()) {
    for (auto& b : sample.boxes) b.confidence = cfg.empty_quality;
  } else {
    for (auto& b : sample.boxes) {
      double best_iou = 0.0;
      double conf = 0.0;
      for (const auto& d : detected) {
        const double iou = box_iou(b, d);
        if (iou > best_iou) {
          best_iou = iou;
          conf = d.confidence;
        }
      }
      b.confidence = conf;
    }
  }
  sample.quality = word_quality(sample.boxes, cfg.empty_quality);
  return sample;
}

}  // namespace pocr
