// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <tuple>

#include "pocr/augment.hpp"
#include "pocr/charset.hpp"
#include "pocr/config.hpp"
#include "pocr/experiment.hpp"
#include "pocr/inpaint.hpp"
#include "pocr/qloss.hpp"
#include "pocr/semcheck.hpp"
#include "pocr/simd/kernels.hpp"

namespace {

using namespace pocr;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const char* name, double budget_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_seconds) {
    out.pass = false;
    out.detail += " [over time budget " + std::to_string(budget_seconds) + "s]";
  }
  if (!out.pass) ++failures;
  std::printf("[%s] %2d %-34s %s (%.2fs)\n", out.pass ? "PASS" : "FAIL", id, name, out.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1
Outcome margin_endpoints() {
  const MarginConfig cfg;  // l_a 0.5, u_a 1, l_m 0, u_m 6 degrees
  const double top = 6.0 * std::numbers::pi / 180.0;
  const double e0 = std::abs(margin_of(0.5, cfg) - 0.0);
  const double e1 = std::abs(margin_of(1.0, cfg) - top);
  const double e2 = std::abs(margin_of(0.75, cfg) - top / 2);
  const double e3 = std::abs(margin_of(1.0, cfg) - 0.104719755);
  return {std::max({e0, e1, e2}) <= 1e-12 && e3 < 1e-9,
          fmt("m(0.5)=%.3g m(1)=%.12f m(0.75)=%.12f max err %.2g", margin_of(0.5, cfg), margin_of(1.0, cfg),
              margin_of(0.75, cfg), std::max({e0, e1, e2}))};
}

// 2
Outcome zero_margin_reduction() {
  const MarginConfig cfg;
  Rng rng(2024);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 4 + rng.uniform_int(29), n = 1 + rng.uniform_int(16);
    auto inst = make_gradcheck_instance(d, n, Charset::kSize, false, rng.next_u64());
    std::fill(inst.batch.qualities.begin(), inst.batch.qualities.end(), cfg.l_a);
    const double loss = forward(inst.batch, inst.classifier, cfg).loss;
    // Direct softmax cross-entropy over s * cosines.
    double ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = inst.batch.x(i);
      const double xn = std::sqrt(std::inner_product(x, x + d, x, 0.0));
      std::vector<double> z(Charset::kSize);
      for (std::size_t j = 0; j < z.size(); ++j) {
        const double* w = inst.classifier.row(j);
        z[j] = cfg.s * std::inner_product(x, x + d, w, 0.0) / (xn * std::sqrt(std::inner_product(w, w + d, w, 0.0)));
      }
      const double mx = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - mx);
      ref += mx + std::log(sum) - z[inst.batch.labels[i]];
    }
    worst = std::max(worst, std::abs(loss - ref / static_cast<double>(n)));
  }
  return {worst < 1e-10, fmt("100 batches, max |loss - softmax CE| = %.3g", worst)};
}

// 3
Outcome gradient_check() {
  const MarginConfig cfg;
  Rng rng(7);
  double worst = 0.0;
  std::size_t fallback_samples = 0, regular_samples = 0, instances = 0;
  for (int t = 0; t < 120; ++t) {
    const bool fb = t % 2 == 1;
    const std::size_t d = 2 + rng.uniform_int(15), n = 2 + rng.uniform_int(7);
    const auto inst = make_gradcheck_instance(d, n, Charset::kSize, fb, rng.next_u64());
    const auto cache = forward(inst.batch, inst.classifier, cfg);
    const auto fired = static_cast<std::size_t>(std::count(cache.fallback.begin(), cache.fallback.end(), 1));
    fallback_samples += fired;
    regular_samples += n - fired;
    worst = std::max(worst, finite_diff_check(inst.batch, inst.classifier, cfg, 1e-5));
    ++instances;
  }
  return {worst < 1e-4 && fallback_samples > 0 && regular_samples > 0,
          fmt("%zu instances, max rel err %.3g, samples on fallback/regular branch %zu/%zu", instances, worst,
              fallback_samples, regular_samples)};
}

// 4
Outcome quality_mean() {
  const RunConfig run_cfg;
  Rng rng(4);
  std::size_t mismatches = 0;
  for (int t = 0; t < 10000; ++t) {
    std::vector<CharBox> boxes(1 + rng.uniform_int(24));
    std::vector<double> conf;
    for (auto& b : boxes) {
      b.confidence = rng.uniform();
      conf.push_back(b.confidence);
    }
    const double mean = std::accumulate(conf.begin(), conf.end(), 0.0) / static_cast<double>(conf.size());
    mismatches += word_quality(boxes, run_cfg.detector.empty_quality) != mean;
  }
  const double empty = word_quality({}, run_cfg.detector.empty_quality);
  const bool ok = mismatches == 0 && empty == run_cfg.train.margin.l_a;
  return {ok, fmt("10000 vectors, %zu mismatches; N=0 -> %.3g (l_a %.3g)", mismatches, empty, run_cfg.train.margin.l_a)};
}

// 5
CheckVerdict brute_force(const std::string& q, const Lexicon& lex, const CheckPolicy& policy) {
  const std::string fq = fold_case(q);
  for (const auto& e : lex.entries())
    if (fold_case(e.word) == fq) return Accept{q};
  const LexiconEntry* best = nullptr;
  std::size_t best_d = 0;
  for (const auto& e : lex.entries()) {
    const std::string fw = fold_case(e.word);
    std::vector<std::size_t> prev(fw.size() + 1), cur(fw.size() + 1);
    std::iota(prev.begin(), prev.end(), 0);
    for (std::size_t i = 1; i <= fq.size(); ++i) {
      cur[0] = i;
      for (std::size_t j = 1; j <= fw.size(); ++j)
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (fq[i - 1] != fw[j - 1])});
      std::swap(prev, cur);
    }
    const std::size_t d = prev[fw.size()];
    const auto key = [](std::size_t dist, const LexiconEntry& x) { return std::make_tuple(dist, -static_cast<double>(x.frequency), x.word); };
    if (!best || key(d, e) < key(best_d, *best)) {
      best = &e;
      best_d = d;
    }
  }
  if (best && best_d <= policy.max_correct_distance) return Corrected{q, best->word, best_d};
  return Reject{RejectReason::kTooFar};
}

Outcome semcheck_oracle() {
  Rng rng(5);
  const std::string alpha = "abcdeABCDE";
  auto word = [&](std::size_t lo, std::size_t hi) {
    std::string w;
    const auto len = lo + rng.uniform_int(hi - lo + 1);
    for (std::uint64_t k = 0; k < len; ++k) w += alpha[rng.uniform_int(alpha.size())];
    return w;
  };
  Lexicon lex;
  while (lex.size() < 500) {
    const auto w = word(3, 6);
    if (!lex.contains(w)) lex.add(w, 1 + rng.uniform_int(3));
  }
  std::size_t agree = 0, total = 0, accepts = 0, corrections = 0, rejects = 0;
  for (std::size_t bound : {1u, 2u}) {
    CheckPolicy policy;
    policy.max_correct_distance = bound;
    for (int q = 0; q < 1000; ++q) {
      std::string query;
      const auto kind = q % 3;
      if (kind == 2) {
        query = word(2, 7);
      } else {
        query = lex.entries()[rng.uniform_int(lex.size())].word;
        if (kind == 1) query[rng.uniform_int(query.size())] = alpha[rng.uniform_int(alpha.size())];
        if (rng.uniform() < 0.3) query = fold_case(query);
      }
      const auto got = check(query, lex, policy);
      const bool same = got == brute_force(query, lex, policy);
      agree += same;
      ++total;
      accepts += std::holds_alternative<Accept>(got);
      corrections += std::holds_alternative<Corrected>(got);
      rejects += std::holds_alternative<Reject>(got);
      if (!same && total - agree <= 3) std::printf("    mismatch on '%s': %s\n", query.c_str(), verdict_json(got).c_str());
    }
  }
  return {agree == total && accepts && corrections && rejects,
          fmt("%zu/%zu agree over bounds 1 and 2 (accept %zu, corrected %zu, reject %zu)", agree, total, accepts,
              corrections, rejects)};
}

// 6
Outcome augmentation_integrity() {
  const RunConfig cfg;
  const Lexicon lex = load_lexicon(cfg.corpus.lexicon);
  const Lexicon check_lex = checking_lexicon(cfg);
  const auto corpus = build_corpus(lex, cfg.corpus.options(derive_seed(cfg.seed, "corpus")), cfg.detector);
  AugmentConfig aug = cfg.augment;
  aug.budget = 10000;
  const auto result = generate_pseudo(corpus, check_lex, train_vocabulary(corpus), aug, cfg.detector, 6);

  std::set<std::string> train_ids;
  for (const auto& s : corpus.samples)
    if (s.split == Split::kTrain) train_ids.insert(s.id);
  std::size_t box_label = 0, containment = 0, lineage = 0, rejected = 0;
  for (std::size_t k = 0; k < result.manifest.samples.size(); ++k) {
    const auto& s = result.manifest.samples[k];
    box_label += s.boxes.size() != s.label.size();
    for (const auto& b : s.boxes) containment += !b.inside(s.image.width, s.image.height);
    lineage += !s.provenance.is_pseudo() || !train_ids.count(s.provenance.origin_id) ||
               s.id.rfind(s.provenance.origin_id + "_" + std::string(to_string(s.provenance.op)) + "_", 0) != 0;
    const auto& v = result.records[k].verdict;
    const std::string kept = std::holds_alternative<Accept>(v)      ? std::get<Accept>(v).word
                             : std::holds_alternative<Corrected>(v) ? std::get<Corrected>(v).corrected
                                                                    : std::string();
    rejected += std::holds_alternative<Reject>(v) || kept != s.label || !check_lex.contains(s.label);
  }

  TextSample paris = score_sample(render_word("PARIS", RenderStyle{}, 1), cfg.detector);
  paris.id = "paris";
  const auto removed = remove_char_at(paris, 3, cfg.augment);
  const auto swapped = swap_chars_at(paris, 2, 4, cfg.augment);
  const bool pair = removed && removed->label == "PARS" && swapped && swapped->label == "PASIR";

  const std::size_t n = result.manifest.samples.size();
  return {n == 10000 && box_label + containment + lineage + rejected == 0 && pair,
          fmt("%zu samples from %zu attempts; violations box/label %zu, containment %zu, lineage %zu, rejected %zu; "
              "PARIS -> %s / %s",
              n, result.stats.attempts, box_label, containment, lineage, rejected,
              removed ? removed->label.c_str() : "-", swapped ? swapped->label.c_str() : "-")};
}

// 7
Outcome inpaint_bounds() {
  InpaintConfig cfg;
  double uniform_err = 0.0;
  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    const int w = 16 + static_cast<int>(rng.uniform_int(48)), h = 12 + static_cast<int>(rng.uniform_int(20));
    GrayImage img(w, h, kBackgroundLevel);
    const int bw = 1 + static_cast<int>(rng.uniform_int(w / 2)), bh = 1 + static_cast<int>(rng.uniform_int(h / 2));
    const CharBox box{1 + static_cast<int>(rng.uniform_int(w - bw - 1)), 1 + static_cast<int>(rng.uniform_int(h - bh - 1)), bw, bh, 1.0, {}};
    for (int y = box.y; y < box.bottom(); ++y)
      for (int x = box.x; x < box.right(); ++x) img.at(x, y) = static_cast<std::uint8_t>(rng.uniform_int(256));
    const auto out = inpaint(img, mask_from_box(box, w, h, 0), cfg);
    for (auto p : out.pixels) uniform_err = std::max(uniform_err, std::abs(static_cast<double>(p) - kBackgroundLevel));
  }

  std::size_t violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const int w = 8 + static_cast<int>(rng.uniform_int(40)), h = 8 + static_cast<int>(rng.uniform_int(24));
    GrayImage img(w, h);
    const double gx = rng.normal() * 3, gy = rng.normal() * 3, base = 128 + rng.normal() * 30;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img.at(x, y) = static_cast<std::uint8_t>(std::clamp(base + gx * x + gy * y + rng.normal() * 20, 0.0, 255.0));
    Mask mask(w, h);
    for (std::size_t k = 0; k < mask.bits.size(); ++k) mask.bits[k] = rng.uniform() < 0.15;
    cfg.dilation = static_cast<int>(rng.uniform_int(2));
    const Mask full = dilate(mask, cfg.dilation);
    if (full.count() == full.bits.size()) continue;
    InpaintTrace trace;
    const auto out = inpaint_traced(img, mask, cfg, trace);
    // Bounds come from the known pixels that touch the fill region.
    double lo = 255, hi = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (full.at(x, y)) continue;
        const bool touches = (x > 0 && full.at(x - 1, y)) || (x + 1 < w && full.at(x + 1, y)) ||
                             (y > 0 && full.at(x, y - 1)) || (y + 1 < h && full.at(x, y + 1));
        if (!touches) continue;
        lo = std::min(lo, static_cast<double>(img.at(x, y)));
        hi = std::max(hi, static_cast<double>(img.at(x, y)));
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double f = trace.field[static_cast<std::size_t>(y) * w + x];
        if (full.at(x, y)) {
          violations += f < lo - 1e-9 || f > hi + 1e-9 || out.at(x, y) < lo || out.at(x, y) > hi;
        } else {
          violations += out.at(x, y) != img.at(x, y);
        }
      }
    }
  }
  return {uniform_err <= 1.0 && violations == 0,
          fmt("uniform fill max |err| %.0f; 1000 random masks, %zu maximum-principle violations", uniform_err, violations)};
}

// 8, 9, 10
struct Ablation {
  ExperimentReport report;
  RunConfig cfg;
};

Ablation& desk_ablation() {
  static Ablation a = [] {
    Ablation out;
    out.cfg.experiment.arms = {"baseline", "pseudo", "pseudo_nocheck", "softmax", "fixed_margin", "quality_box"};
    out.report = ablate(out.cfg);
    return out;
  }();
  return a;
}

Outcome pseudo_direction() {
  const auto& r = desk_ablation().report;
  const double base = r.arm("baseline")->mean_crw_oov;
  const double on = r.arm("pseudo")->mean_crw_oov;
  const double off = r.arm("pseudo_nocheck")->mean_crw_oov;
  return {on - base >= 2.0 && on > off,
          fmt("mean OOV CRW: pseudo+check %.2f, baseline %.2f (gain %+.2f, need >= +2), no check %.2f", on, base,
              on - base, off)};
}

Outcome loss_direction() {
  const auto& r = desk_ablation().report;
  const double qb = r.arm("quality_box")->mean_crw_oov;
  const double fm = r.arm("fixed_margin")->mean_crw_oov;
  const double fm_all = r.arm("fixed_margin")->mean_crw_all;
  const double sm_all = r.arm("softmax")->mean_crw_all;
  const double tie = 0.2;
  return {qb >= fm - tie && fm_all >= sm_all - tie,
          fmt("OOV quality_box %.2f vs fixed_margin %.2f; all fixed_margin %.2f vs softmax %.2f (tie 0.2)", qb, fm,
              fm_all, sm_all)};
}

Outcome determinism() {
  const auto& first = desk_ablation().report;
  RunConfig replay;
  replay.apply_text(first.config_snapshot);
  const auto second = ablate(replay);
  const bool same = second.to_json(false) == first.to_json(false);
  return {same, fmt("rerun from embedded snapshot: %s", same ? "bit-identical report" : "reports differ")};
}

}  // namespace

int main() {
  std::printf("acceptance suite (%s kernels)\n", std::string(simd::isa_name(simd::active_isa())).c_str());
  run(1, "margin endpoints and linearity", 1, margin_endpoints);
  run(2, "zero-margin softmax reduction", 5, zero_margin_reduction);
  run(3, "gradient vs finite differences", 30, gradient_check);
  run(4, "word quality mean and N=0 rule", 1, quality_mean);
  run(5, "semantic check vs brute force", 10, semcheck_oracle);
  run(6, "augmentation integrity", 120, augmentation_integrity);
  run(7, "inpainting bounds", 30, inpaint_bounds);
  run(8, "ablation: pseudo data direction", 600, pseudo_direction);
  run(9, "ablation: loss direction", 600, loss_direction);
  run(10, "determinism from config snapshot", 600, determinism);
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
