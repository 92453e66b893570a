#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pocr/corpus.hpp"
#include "pocr/detector.hpp"
#include "pocr/lexicon.hpp"
#include "pocr/qloss.hpp"

namespace pocr {

inline constexpr int kCropSide = 16;
inline constexpr std::size_t kCropPixels = kCropSide * kCropSide;

enum class LossVariant { kQualityBox, kQualityImageNorm, kFixedMargin, kSoftmax };
std::string_view to_string(LossVariant v) noexcept;
std::optional<LossVariant> parse_loss_variant(std::string_view s) noexcept;

struct TrainConfig {
  int epochs = 40;
  std::size_t batch_size = 64;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<int> lr_decay_epochs{10, 20, 25};  // lr *= lr_decay_factor at the start of these epochs
  double lr_decay_factor = 0.1;
  std::size_t dim = 64;
  bool zero_mean = true;  // subtract each patch's mean before embedding
  // kDetected crops the detector's boxes when their count matches the label
  // (as recognize_word does at inference) and falls back to the stored boxes.
  enum class CropSource { kGroundTruth, kDetected };
  CropSource crop_source = CropSource::kDetected;
  LossVariant loss_variant = LossVariant::kQualityBox;
  MarginConfig margin;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
  double learning_rate_at(int epoch) const noexcept;
};

struct ModelParams {
  std::size_t dim = 0;
  std::size_t inputs = kCropPixels;
  bool zero_mean = true;
  std::vector<double> embedding;  // dim x inputs, row-major
  CosineClassifier classifier;

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.dim == b.dim && a.inputs == b.inputs && a.zero_mean == b.zero_mean && a.embedding == b.embedding &&
           a.classifier.classes == b.classifier.classes && a.classifier.dim == b.classifier.dim &&
           a.classifier.weights == b.classifier.weights;
  }
};

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  double loss = 0.0;
  double train_char_accuracy = 0.0;  // on the epoch's batches, before each update
  std::optional<double> validation_char_accuracy;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

// Bilinear resample of the box region to 16x16 using pixel-centre alignment,
// scaled to [0, 1]. Throws ShapeError for an empty box or one outside the image.
std::vector<double> extract_crop(const GrayImage& image, const CharBox& box);

// Raw feature E * p (p zero-meaned when params.zero_mean).
std::vector<double> embed_raw(const ModelParams& params, const std::vector<double>& patch);
// Unit-norm feature; the all-zero feature maps to e_1.
std::vector<double> embed(const ModelParams& params, const std::vector<double>& patch);

// Trains on the character crops of every train-split sample of `train` plus
// every sample of `pseudo`. Each character inherits its word's quality.
// Throws TrainingDiverged on a non-finite loss and UsageError when there is
// nothing to train on.
TrainResult train(const CorpusManifest& train, const CorpusManifest* pseudo, const TrainConfig& cfg,
                  const DetectorConfig& detector = {}, const CorpusManifest* validation = nullptr);

// Class index with the largest cosine.
std::size_t classify(const ModelParams& params, const std::vector<double>& patch);
std::string recognize_word(const GrayImage& image, const ModelParams& params, const DetectorConfig& detector);

struct Confusion {
  char truth = '?';
  char predicted = '?';
  std::size_t count = 0;
};

struct EvalReport {
  std::size_t n_iv = 0;
  std::size_t n_oov = 0;
  std::size_t correct_iv = 0;
  std::size_t correct_oov = 0;
  double crw_iv = 0.0;
  double crw_oov = 0.0;
  double crw_all = 0.0;
  std::size_t chars_total = 0;
  std::size_t chars_correct = 0;
  double per_char_accuracy = 0.0;  // classifier on ground-truth boxes
  std::vector<Confusion> top_confusions;

  std::size_t n_all() const noexcept { return n_iv + n_oov; }
  std::string to_json() const;
  std::string to_text() const;
};

// Word predictions come from recognize_word; a word counts only on an exact,
// case-sensitive match. IV/OOV follows classify_vocab against train_vocab.
// Only test-split samples are scored. Throws UsageError when there are none.
EvalReport evaluate(const CorpusManifest& test, const ModelParams& params, const Lexicon& train_vocab,
                    const DetectorConfig& detector);

// Checkpoint layout, little-endian:
//   8 bytes  "POCRCKPT"
//   u32      version (1)
//   u32      dim, u32 inputs, u32 classes
//   u8       zero_mean, 3 bytes padding
//   f64[dim*inputs]   embedding, row-major
//   f64[classes*dim]  prototypes, row-major
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
// Throws IoError, DecodeError (bad magic/version/size).
ModelParams load_checkpoint(const std::filesystem::path& path);

std::string history_json(const std::vector<EpochRecord>& history);
std::string history_text(const std::vector<EpochRecord>& history);

}  // namespace pocr
