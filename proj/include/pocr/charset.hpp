#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace pocr {

// The 94 printable, non-space ASCII characters ('!' .. '~'): mixed-case
// letters, digits and punctuation. Class index k is symbol '!' + k.
class Charset {
 public:
  static constexpr std::size_t kSize = 94;
  static constexpr char kFirst = '!';
  static constexpr char kLast = '~';

  static constexpr bool contains(char c) noexcept { return c >= kFirst && c <= kLast; }
  static bool contains_all(std::string_view s) noexcept;

  // Class index of c, or nullopt when c is not in the set.
  static constexpr std::optional<std::size_t> index_of(char c) noexcept {
    if (!contains(c)) return std::nullopt;
    return static_cast<std::size_t>(c - kFirst);
  }
  static constexpr char symbol(std::size_t index) noexcept {
    return static_cast<char>(kFirst + static_cast<int>(index));
  }
  static std::array<char, kSize> symbols() noexcept;
};

// ASCII case folding used for lexicon matching.
std::string fold_case(std::string_view s);

}  // namespace pocr
