#include "pocr/lexicon.hpp"

#include "pocr/charset.hpp"
#include "pocr/error.hpp"

namespace pocr {

Lexicon::Lexicon(const std::vector<LexiconEntry>& entries) {
  for (const auto& e : entries) add(e.word, e.frequency);
}

void Lexicon::add(std::string_view word, std::uint64_t frequency) {
  if (word.empty()) throw ConfigError("empty lexicon word");
  if (frequency == 0) throw ConfigError("zero frequency for lexicon word '" + std::string(word) + "'");
  if (!Charset::contains_all(word)) {
    throw UnsupportedCharacter("lexicon word '" + std::string(word) + "' has characters outside the charset");
  }
  std::string key = fold_case(word);
  if (auto it = index_.find(key); it != index_.end()) {
    entries_[it->second].frequency += frequency;
    return;
  }
  const std::size_t idx = entries_.size();
  entries_.push_back({std::string(word), frequency});
  index_.emplace(std::move(key), idx);
  if (by_length_.size() <= word.size()) by_length_.resize(word.size() + 1);
  by_length_[word.size()].push_back(idx);
}

const LexiconEntry* Lexicon::find(std::string_view word) const {
  auto it = index_.find(fold_case(word));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const std::vector<std::size_t>& Lexicon::bucket(std::size_t length) const {
  static const std::vector<std::size_t> kEmpty;
  return length < by_length_.size() ? by_length_[length] : kEmpty;
}

std::vector<std::string> Lexicon::words() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.word);
  return out;
}

Lexicon merge_lexicons(const Lexicon& a, const Lexicon& b) {
  Lexicon out = a;
  for (const auto& e : b.entries()) {
    if (!out.contains(e.word)) out.add(e.word, e.frequency);
  }
  return out;
}

}  // namespace pocr
