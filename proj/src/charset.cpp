#include "pocr/charset.hpp"

#include <algorithm>

namespace pocr {

bool Charset::contains_all(std::string_view s) noexcept {
  return std::all_of(s.begin(), s.end(), [](char c) { return contains(c); });
}

std::array<char, Charset::kSize> Charset::symbols() noexcept {
  std::array<char, kSize> out{};
  for (std::size_t k = 0; k < kSize; ++k) out[k] = symbol(k);
  return out;
}

std::string fold_case(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace pocr
