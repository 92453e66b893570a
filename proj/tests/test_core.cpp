#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "pocr/charset.hpp"
#include "pocr/error.hpp"
#include "pocr/font.hpp"
#include "pocr/image.hpp"
#include "pocr/lexicon.hpp"
#include "pocr/rng.hpp"
#include "test_util.hpp"

namespace pocr {
namespace {

TEST(Charset, HasNinetyFourDistinctSymbolsWithConsistentIndex) {
  const auto syms = Charset::symbols();
  std::set<char> unique(syms.begin(), syms.end());
  EXPECT_EQ(syms.size(), 94u);
  EXPECT_EQ(unique.size(), 94u);
  for (std::size_t k = 0; k < syms.size(); ++k) EXPECT_EQ(Charset::index_of(syms[k]), k);
  EXPECT_FALSE(Charset::contains(' '));
  EXPECT_FALSE(Charset::index_of('\n').has_value());
  EXPECT_TRUE(Charset::contains_all("PARIS-42!"));
  EXPECT_FALSE(Charset::contains_all("two words"));
}

TEST(Charset, FoldCaseLowersAsciiOnly) { EXPECT_EQ(fold_case("PaRiS-9"), "paris-9"); }

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(Rng(42).next_u64(), Rng(43).next_u64());
}

TEST(Rng, UniformIntStaysInRangeAndCoversIt) {
  Rng r(7);
  std::vector<int> hist(10, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto v = r.uniform_int(10);
    ASSERT_LT(v, 10u);
    ++hist[v];
  }
  for (int h : hist) EXPECT_GT(h, 850);
}

TEST(Rng, NormalHasUnitMoments) {
  Rng r(3);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, DeriveSeedSeparatesStreams) {
  EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
  EXPECT_NE(derive_seed(1, "corpus"), derive_seed(1, "pseudo"));
  EXPECT_EQ(derive_seed(9, "train"), derive_seed(9, "train"));
}

TEST(Rng, ShuffleIsAPermutation) {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  Rng r(11);
  r.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 50u);
}

TEST(Image, PgmRoundTripIsExact) {
  testing::TempDir dir("pgm");
  GrayImage img(7, 5);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 37);
  write_pgm(img, dir.path() / "a.pgm");
  EXPECT_EQ(read_pgm(dir.path() / "a.pgm"), img);
}

TEST(Image, ReadPgmReportsMissingAndCorruptFiles) {
  testing::TempDir dir("pgm-bad");
  EXPECT_THROW(read_pgm(dir.path() / "none.pgm"), MissingAsset);
  {
    std::ofstream(dir.path() / "short.pgm", std::ios::binary) << "P5\n4 4\n255\nabc";
  }
  EXPECT_THROW(read_pgm(dir.path() / "short.pgm"), DecodeError);
  {
    std::ofstream(dir.path() / "magic.pgm", std::ios::binary) << "P2\n1 1\n255\n0";
  }
  EXPECT_THROW(read_pgm(dir.path() / "magic.pgm"), DecodeError);
}

TEST(Image, PgmHeaderCommentsAreSkipped) {
  testing::TempDir dir("pgm-comment");
  {
    std::ofstream out(dir.path() / "c.pgm", std::ios::binary);
    out << "P5\n# made by hand\n2 1\n255\n";
    out.put(static_cast<char>(10));
    out.put(static_cast<char>(200));
  }
  const GrayImage img = read_pgm(dir.path() / "c.pgm");
  ASSERT_EQ(img.width, 2);
  EXPECT_EQ(img.at(1, 0), 200);
}

TEST(Font, EveryGlyphHasInk) {
  for (char c : Charset::symbols()) {
    const auto span = font::ink_columns(c);
    EXPECT_LE(span.first, span.last) << c;
    EXPECT_GE(span.first, 0);
    EXPECT_LT(span.last, font::kCellWidth);
  }
}

TEST(Font, GlyphsAreDistinct) {
  std::set<std::vector<bool>> shapes;
  for (char c : Charset::symbols()) {
    std::vector<bool> bits;
    for (int y = 0; y < font::kCellHeight; ++y) {
      for (int x = 0; x < font::kCellWidth; ++x) bits.push_back(font::ink(c, x, y));
    }
    shapes.insert(bits);
  }
  EXPECT_EQ(shapes.size(), 94u);
}

TEST(Lexicon, MergesCaseFoldedDuplicates) {
  Lexicon lex;
  lex.add("Paris", 2);
  lex.add("PARIS", 3);
  lex.add("cat");
  ASSERT_EQ(lex.size(), 2u);
  EXPECT_EQ(lex.find("paris")->frequency, 5u);
  EXPECT_EQ(lex.find("paris")->word, "Paris");
  EXPECT_TRUE(lex.contains("CAT"));
  EXPECT_EQ(lex.bucket(3).size(), 1u);
  EXPECT_THROW(lex.add("two words"), UnsupportedCharacter);
  EXPECT_THROW(lex.add(""), ConfigError);
}

TEST(Lexicon, MergeKeepsFirstOrder) {
  Lexicon a({{"one", 1}, {"two", 1}});
  Lexicon b({{"TWO", 4}, {"three", 1}});
  const Lexicon m = merge_lexicons(a, b);
  EXPECT_EQ(m.words(), (std::vector<std::string>{"one", "two", "three"}));
}

}  // namespace
}  // namespace pocr
