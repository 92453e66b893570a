#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "pocr/lexicon.hpp"

namespace pocr {

struct CheckPolicy {
  std::size_t max_correct_distance = 1;
  bool case_fold_matching = true;
  // Ties between equally distant words: higher frequency first, then
  // byte-wise lexicographic order of the lexicon spelling.
};

struct Accept {
  std::string word;
  friend bool operator==(const Accept&, const Accept&) = default;
};
struct Corrected {
  std::string original;
  std::string corrected;
  std::size_t distance = 0;
  friend bool operator==(const Corrected&, const Corrected&) = default;
};
enum class RejectReason { kTooFar, kEmpty, kBadCharset };
struct Reject {
  RejectReason reason = RejectReason::kTooFar;
  friend bool operator==(const Reject&, const Reject&) = default;
};

using CheckVerdict = std::variant<Accept, Corrected, Reject>;

std::string_view to_string(RejectReason r) noexcept;
// JSON object text for one verdict, e.g. {"verdict":"corrected",...}.
std::string verdict_json(const CheckVerdict& v);

// Unit-cost Levenshtein distance.
std::size_t edit_distance(std::string_view a, std::string_view b);
// Distance if it is <= bound, otherwise bound + 1 (banded DP with early exit).
std::size_t edit_distance_bounded(std::string_view a, std::string_view b, std::size_t bound);

// Accept exact (optionally case-folded) lexicon members; correct labels whose
// nearest lexicon word is within max_correct_distance (keeping the lexicon's
// casing); reject everything else.
CheckVerdict check(std::string_view label, const Lexicon& lexicon, const CheckPolicy& policy);

enum class VocabClass { kIv, kOov };
std::string_view to_string(VocabClass c) noexcept;
// IV iff the case-folded word is in the training vocabulary.
VocabClass classify_vocab(std::string_view word, const Lexicon& train_vocab);

// Reads `word[\tfrequency]` lines. Words with characters outside the charset
// are skipped; a missing frequency counts as 1; duplicates (after case
// folding) are merged by summing. Throws IoError, ParseError (bad frequency)
// or EmptyLexicon.
Lexicon load_lexicon(const std::filesystem::path& path);

}  // namespace pocr
