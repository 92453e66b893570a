#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "pocr/charset.hpp"
#include "pocr/config.hpp"
#include "pocr/error.hpp"
#include "pocr/experiment.hpp"
#include "pocr/font.hpp"
#include "pocr/trainer.hpp"
#include "test_util.hpp"

namespace pocr {
namespace {

// Random words over the full character set so every class is trained.
Lexicon full_charset_lexicon(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Lexicon lex;
  std::size_t k = 0;
  while (lex.size() < n) {
    std::string w;
    const auto len = 4 + rng.uniform_int(4);
    for (std::uint64_t j = 0; j < len; ++j) w += Charset::symbol((k++ * 37 + rng.uniform_int(3)) % Charset::kSize);
    if (!lex.contains(w)) lex.add(w);
  }
  return lex;
}

const CorpusManifest& clean_corpus() {
  static const CorpusManifest m = [] {
    CorpusOptions opt;
    opt.seed = 4;
    opt.per_word = 2;
    return build_corpus(full_charset_lexicon(200, 8), opt, DetectorConfig{});
  }();
  return m;
}

TrainConfig quick(int epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.lr_decay_epochs = {epochs / 2 + 1};
  cfg.seed = 12;
  return cfg;
}

// Bilinear sampling with edge replication, pixel-centre aligned.
double oracle_resample(const GrayImage& img, const CharBox& box, int u, int v) {
  const double fx = (u + 0.5) * box.w / 16.0 - 0.5;
  const double fy = (v + 0.5) * box.h / 16.0 - 0.5;
  auto px = [&](int x, int y) {
    x = std::clamp(x, 0, box.w - 1);
    y = std::clamp(y, 0, box.h - 1);
    return static_cast<double>(img.at(box.x + x, box.y + y));
  };
  const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
  const double tx = fx - x0, ty = fy - y0;
  return (1 - ty) * ((1 - tx) * px(x0, y0) + tx * px(x0 + 1, y0)) + ty * ((1 - tx) * px(x0, y0 + 1) + tx * px(x0 + 1, y0 + 1));
}

TEST(Crop, IdentityAndConstant) {
  GrayImage img(20, 20);
  for (std::size_t k = 0; k < img.pixels.size(); ++k) img.pixels[k] = static_cast<std::uint8_t>(k * 7);
  const CharBox box{2, 3, 16, 16, 1.0, {}};
  const auto crop = extract_crop(img, box);
  for (int v = 0; v < 16; ++v)
    for (int u = 0; u < 16; ++u) EXPECT_EQ(crop[static_cast<std::size_t>(v) * 16 + u] * 255.0, img.at(2 + u, 3 + v));
  const auto flat = extract_crop(GrayImage(40, 40, 99), CharBox{4, 4, 32, 32, 1.0, {}});
  for (double p : flat) EXPECT_DOUBLE_EQ(p, 99.0 / 255.0);
  EXPECT_THROW(extract_crop(img, CharBox{10, 10, 16, 16, 1.0, {}}), ShapeError);
  EXPECT_THROW(extract_crop(img, CharBox{1, 1, 0, 4, 1.0, {}}), ShapeError);
}

TEST(Crop, GlyphPatchMatchesBilinearOracle) {
  GrayImage img(12, 30, kBackgroundLevel);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 8; ++x)
      if (font::ink('R', x * font::kCellWidth / 8, y * font::kCellHeight / 24)) img.at(2 + x, 3 + y) = kInkLevel;
  const CharBox box{2, 3, 8, 24, 1.0, {}};
  const auto crop = extract_crop(img, box);
  for (int v = 0; v < 16; ++v)
    for (int u = 0; u < 16; ++u)
      EXPECT_LE(std::abs(crop[static_cast<std::size_t>(v) * 16 + u] * 255.0 - oracle_resample(img, box, u, v)), 1.0);
}

TEST(Embed, UnitNormScaleInvarianceAndZeroPatch) {
  ModelParams p;
  p.dim = 8;
  p.zero_mean = false;
  Rng rng(1);
  p.embedding.resize(p.dim * p.inputs);
  for (double& e : p.embedding) e = rng.normal();
  std::vector<double> patch(kCropPixels);
  for (double& x : patch) x = rng.uniform();
  const auto f = embed(p, patch);
  double n = 0.0;
  for (double v : f) n += v * v;
  EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
  auto scaled = patch;
  for (double& x : scaled) x *= 3.5;
  const auto g = embed(p, scaled);
  for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(f[k], g[k], 1e-12);
  const auto z = embed(p, std::vector<double>(kCropPixels, 0.0));
  EXPECT_EQ(z[0], 1.0);
  for (std::size_t k = 1; k < z.size(); ++k) EXPECT_EQ(z[k], 0.0);
}

TEST(Train, DeterministicForSeed) {
  CorpusManifest small;
  for (const auto& s : clean_corpus().samples) {
    if (s.split == Split::kTrain) small.samples.push_back(s);
    if (small.samples.size() == 10) break;
  }
  const auto a = train(small, nullptr, quick(1));
  const auto b = train(small, nullptr, quick(1));
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(a.history.size(), 1u);
  EXPECT_EQ(a.history[0].loss, b.history[0].loss);
}

TEST(Train, SoftmaxMatchesQualityMarginAtLowerBound) {
  CorpusManifest m = clean_corpus();
  for (auto& s : m.samples) s.quality = 0.5;
  auto cfg = quick(2);
  cfg.loss_variant = LossVariant::kSoftmax;
  const auto soft = train(m, nullptr, cfg);
  cfg.loss_variant = LossVariant::kQualityBox;
  EXPECT_EQ(train(m, nullptr, cfg).params, soft.params);
}

TEST(Train, LearnsCleanGlyphsAndRecognizesWords) {
  auto cfg = quick(20);
  cfg.loss_variant = LossVariant::kSoftmax;
  const auto result = train(clean_corpus(), nullptr, cfg);
  const auto& params = result.params;
  ASSERT_EQ(result.history.size(), 20u);
  for (std::size_t k = 0; k < params.classifier.classes; ++k) {
    double n = 0.0;
    for (std::size_t j = 0; j < params.dim; ++j) n += params.classifier.row(k)[j] * params.classifier.row(k)[j];
    EXPECT_NEAR(n, 1.0, 1e-9);
  }
  std::size_t total = 0, correct = 0;
  for (const auto& s : clean_corpus().samples) {
    if (s.split != Split::kTrain) continue;
    for (std::size_t k = 0; k < s.boxes.size(); ++k) {
      ++total;
      correct += Charset::symbol(classify(params, extract_crop(s.image, s.boxes[k]))) == s.label[k];
    }
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.99);

  const DetectorConfig det;
  EXPECT_EQ(recognize_word(GrayImage(40, 30, kBackgroundLevel), params, det), "");
  const auto& words = clean_corpus().samples;
  const auto oov = std::find_if(words.begin(), words.end(), [](const auto& s) { return s.split == Split::kTestOov; });
  ASSERT_NE(oov, words.end());
  EXPECT_EQ(recognize_word(render_word(oov->label, RenderStyle{}, 77).image, params, det), oov->label);

  // Two IV words, one with a corrupted label.
  const Lexicon vocab = train_vocabulary(clean_corpus());
  CorpusManifest two;
  for (const auto& s : words)
    if (s.split == Split::kTestIv && two.samples.size() < 2 && recognize_word(s.image, params, det) == s.label)
      two.samples.push_back(s);
  ASSERT_EQ(two.samples.size(), 2u);
  auto perfect = evaluate(two, params, vocab, det);
  EXPECT_EQ(perfect.crw_iv, 100.0);
  EXPECT_EQ(perfect.crw_all, 100.0);
  two.samples[1].label[0] = two.samples[1].label[0] == '~' ? '!' : static_cast<char>(two.samples[1].label[0] + 1);
  two.samples[1].split = Split::kTestOov;
  const auto half = evaluate(two, params, vocab, det);
  EXPECT_EQ(half.n_all(), 2u);
  EXPECT_EQ(half.crw_all, 50.0);
  EXPECT_DOUBLE_EQ(half.crw_all, (half.crw_iv * half.n_iv + half.crw_oov * half.n_oov) / half.n_all());

  testing::TempDir dir("ckpt");
  save_checkpoint(params, dir.path() / "m.bin");
  EXPECT_EQ(load_checkpoint(dir.path() / "m.bin"), params);
  std::ofstream(dir.path() / "bad.bin") << "NOTACKPT";
  EXPECT_THROW(load_checkpoint(dir.path() / "bad.bin"), DecodeError);
}

TEST(Train, ConfigAndSchedule) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.learning_rate_at(0), 0.1);
  EXPECT_DOUBLE_EQ(cfg.learning_rate_at(10), 0.1 * 0.1);
  EXPECT_DOUBLE_EQ(cfg.learning_rate_at(25), 0.1 * 0.1 * 0.1 * 0.1);
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(parse_loss_variant("quality_image_norm"), LossVariant::kQualityImageNorm);
  EXPECT_FALSE(parse_loss_variant("bogus"));
  EXPECT_THROW(train(CorpusManifest{}, nullptr, quick(1)), UsageError);
}

// --- config and experiment ---

TEST(Config, ParsesSectionsAndRejectsUnknownKeys) {
  RunConfig cfg;
  cfg.apply_text("seed = 9\n# comment\n[train]\nepochs = 3\nloss_variant = softmax\n[loss]\nu_m = 4.5\n");
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.train.epochs, 3);
  EXPECT_EQ(cfg.train.loss_variant, LossVariant::kSoftmax);
  EXPECT_EQ(cfg.train.margin.u_m, 4.5);
  EXPECT_THROW(cfg.apply_text("[train]\nepocs = 3\n"), UsageError);
  EXPECT_THROW(cfg.apply_text("[nope]\n"), UsageError);
  EXPECT_THROW(cfg.set("train.epochs", "many"), ConfigError);
  cfg.set("augment.op_swap", "0.25");
  EXPECT_EQ(cfg.augment.op_mix[1], 0.25);
}

TEST(Config, SnapshotRoundTrips) {
  RunConfig cfg;
  cfg.set("loss.s", "0.1");
  cfg.set("experiment.arms", "baseline,softmax");
  cfg.set("train.lr_decay_epochs", "5,7");
  RunConfig again;
  again.apply_text(cfg.to_text());
  EXPECT_EQ(again.to_text(), cfg.to_text());
  EXPECT_EQ(again.train.margin.s, 0.1);
  EXPECT_EQ(again.train.lr_decay_epochs, (std::vector<int>{5, 7}));
}

TEST(Experiment, ArmGrammar) {
  const auto a = parse_arm("pseudo:softmax", LossVariant::kQualityBox);
  EXPECT_EQ(a.data, DataVariant::kPseudo);
  EXPECT_EQ(a.loss, LossVariant::kSoftmax);
  const auto b = parse_arm("fixed_margin", LossVariant::kQualityBox);
  EXPECT_EQ(b.data, DataVariant::kBaseline);
  EXPECT_EQ(b.loss, LossVariant::kFixedMargin);
  EXPECT_THROW(parse_arm("pseudo:bogus", LossVariant::kQualityBox), UsageError);
  EXPECT_FALSE(augment_for(DataVariant::kBaseline, AugmentConfig{}));
  const auto no_swap = augment_for(DataVariant::kNoSwap, AugmentConfig{});
  ASSERT_TRUE(no_swap);
  EXPECT_EQ(no_swap->op_mix[1], 0.0);
  EXPECT_DOUBLE_EQ(no_swap->op_mix[0] + no_swap->op_mix[2] + no_swap->op_mix[3], 1.0);
  EXPECT_FALSE(augment_for(DataVariant::kPseudoNoCheck, AugmentConfig{})->semantic_check);
}

TEST(Experiment, SmallAblationIsReproducible) {
  testing::TempDir dir("abl");
  {
    std::ofstream out(dir.path() / "lex.tsv");
    const Lexicon lex = full_charset_lexicon(30, 2);
    for (const auto& e : lex.entries()) out << e.word << "\t" << e.frequency << "\n";
    out << "river\t4\nstone\t3\n";
  }
  RunConfig cfg;
  cfg.corpus.lexicon = dir.path() / "lex.tsv";
  cfg.semcheck.extra_lexicons.clear();
  cfg.train.epochs = 2;
  cfg.augment.budget = 10;
  cfg.experiment.seeds = {1};
  cfg.experiment.arms = {"baseline", "pseudo"};
  const auto a = ablate(cfg);
  ASSERT_EQ(a.arms.size(), 2u);
  EXPECT_EQ(a.arms[0].runs.size(), 1u);
  ASSERT_NE(a.arm("pseudo"), nullptr);
  EXPECT_TRUE(a.arm("pseudo")->runs[0].generation.has_value());
  RunConfig replay;
  replay.apply_text(a.config_snapshot);
  EXPECT_EQ(ablate(replay).to_json(false), a.to_json(false));
}

}  // namespace
}  // namespace pocr
