#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pocr {

struct LexiconEntry {
  std::string word;
  std::uint64_t frequency = 1;

  friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

// Word list with frequencies. Words are unique after ASCII case folding; the
// first-seen casing is kept and duplicate frequencies are summed. Entries are
// bucketed by length for bounded nearest-word scans.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::vector<LexiconEntry>& entries);

  // Throws UnsupportedCharacter for characters outside the charset and
  // ConfigError for empty words or zero frequency.
  void add(std::string_view word, std::uint64_t frequency = 1);

  const std::vector<LexiconEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  // Case-folded lookup.
  const LexiconEntry* find(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word) != nullptr; }

  // Entry indices whose word has exactly `length` characters.
  const std::vector<std::size_t>& bucket(std::size_t length) const;
  std::size_t max_length() const noexcept { return by_length_.empty() ? 0 : by_length_.size() - 1; }

  std::vector<std::string> words() const;

 private:
  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> by_length_;
};

// Union preserving the order of `a` then the new words of `b`.
Lexicon merge_lexicons(const Lexicon& a, const Lexicon& b);

}  // namespace pocr
