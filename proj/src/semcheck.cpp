#include "pocr/semcheck.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <vector>

#include "json.hpp"

#include "pocr/charset.hpp"
#include "pocr/error.hpp"

namespace pocr {

std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::kTooFar:
      return "too_far";
    case RejectReason::kEmpty:
      return "empty";
    case RejectReason::kBadCharset:
      return "bad_charset";
  }
  return "too_far";
}

std::string_view to_string(VocabClass c) noexcept { return c == VocabClass::kIv ? "IV" : "OOV"; }

std::string verdict_json(const CheckVerdict& v) {
  nlohmann::ordered_json j;
  if (const auto* a = std::get_if<Accept>(&v)) {
    j["verdict"] = "accept";
    j["word"] = a->word;
  } else if (const auto* c = std::get_if<Corrected>(&v)) {
    j["verdict"] = "corrected";
    j["original"] = c->original;
    j["corrected"] = c->corrected;
    j["distance"] = c->distance;
  } else {
    j["verdict"] = "reject";
    j["reason"] = to_string(std::get<Reject>(v).reason);
  }
  return j.dump();
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t edit_distance_bounded(std::string_view a, std::string_view b, std::size_t bound) {
  const std::size_t over = bound + 1;
  const std::size_t la = a.size();
  const std::size_t lb = b.size();
  if ((la > lb ? la - lb : lb - la) > bound) return over;
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 2;
  std::vector<std::size_t> prev(lb + 1, kInf);
  std::vector<std::size_t> cur(lb + 1, kInf);
  for (std::size_t j = 0; j <= std::min(lb, bound); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= la; ++i) {
    const std::size_t lo = i > bound ? i - bound : 0;
    const std::size_t hi = std::min(lb, i + bound);
    std::fill(cur.begin(), cur.end(), kInf);
    if (lo == 0) cur[0] = i;
    std::size_t row_min = lo == 0 ? cur[0] : kInf;
    for (std::size_t j = std::max<std::size_t>(lo, 1); j <= hi; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
      row_min = std::min(row_min, cur[j]);
    }
    if (row_min > bound) return over;
    std::swap(prev, cur);
  }
  return std::min(prev[lb], over);
}

CheckVerdict check(std::string_view label, const Lexicon& lexicon, const CheckPolicy& policy) {
  if (label.empty()) return Reject{RejectReason::kEmpty};
  if (!Charset::contains_all(label)) return Reject{RejectReason::kBadCharset};

  const std::string query = policy.case_fold_matching ? fold_case(label) : std::string(label);
  if (policy.case_fold_matching) {
    if (lexicon.contains(label)) return Accept{std::string(label)};
  } else {
    if (const auto* e = lexicon.find(label); e && e->word == label) return Accept{std::string(label)};
  }

  const std::size_t bound = policy.max_correct_distance;
  if (bound == 0) return Reject{RejectReason::kTooFar};
  const LexiconEntry* best = nullptr;
  std::size_t best_d = bound + 1;
  const std::size_t len_lo = label.size() > bound ? label.size() - bound : 0;
  const std::size_t len_hi = label.size() + bound;
  for (std::size_t len = len_lo; len <= len_hi && len <= lexicon.max_length(); ++len) {
    for (std::size_t idx : lexicon.bucket(len)) {
      const LexiconEntry& e = lexicon.entries()[idx];
      const std::string cand = policy.case_fold_matching ? fold_case(e.word) : e.word;
      const std::size_t d = edit_distance_bounded(query, cand, std::min(bound, best_d));
      if (d > bound) continue;
      const bool better = d < best_d ||
                          (d == best_d && (e.frequency > best->frequency ||
                                           (e.frequency == best->frequency && e.word < best->word)));
      if (better) {
        best = &e;
        best_d = d;
      }
    }
  }
  // A distance-0 hit here can only be a case variant when folding is off.
  if (best) return Corrected{std::string(label), best->word, best_d};
  return Reject{RejectReason::kTooFar};
}

VocabClass classify_vocab(std::string_view word, const Lexicon& train_vocab) {
  if (word.empty()) return VocabClass::kOov;
  return train_vocab.contains(word) ? VocabClass::kIv : VocabClass::kOov;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read lexicon " + path.string());
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view word = line;
    std::uint64_t freq = 1;
    if (const auto tab = line.find('\t'); tab != std::string::npos) {
      word = std::string_view(line).substr(0, tab);
      std::string_view f = std::string_view(line).substr(tab + 1);
      while (!f.empty() && f.front() == ' ') f.remove_prefix(1);
      while (!f.empty() && f.back() == ' ') f.remove_suffix(1);
      if (!f.empty()) {
        auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), freq);
        if (ec != std::errc() || ptr != f.data() + f.size() || freq == 0) {
          throw ParseError(lineno, "bad frequency '" + std::string(f) + "'");
        }
      }
    }
    if (word.empty() || !Charset::contains_all(word)) continue;
    lex.add(word, freq);
  }
  if (lex.empty()) throw EmptyLexicon("no usable entries in " + path.string());
  return lex;
}

}  // namespace pocr
