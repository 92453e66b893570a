// Command-line entry point. Exit codes: 0 success, 1 validation or tolerance
// failure, 2 usage error.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pocr/augment.hpp"
#include "pocr/charset.hpp"
#include "pocr/config.hpp"
#include "pocr/dataset_io.hpp"
#include "pocr/error.hpp"
#include "pocr/experiment.hpp"
#include "pocr/inpaint.hpp"
#include "pocr/qloss.hpp"
#include "pocr/rng.hpp"
#include "pocr/semcheck.hpp"
#include "pocr/simd/kernels.hpp"
#include "pocr/trainer.hpp"

namespace fs = std::filesystem;
using namespace pocr;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg;
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  }
  if (!path.empty()) cfg = load_config(path);
  if (g.seed) cfg.seed = *g.seed;
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects section.key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

// Explicit --out wins; otherwise a fresh stamped directory under out_dir.
fs::path output_dir(const Globals& g, const RunConfig& cfg, const std::string& what) {
  if (!g.out.empty()) return g.out;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::localtime(&now));
  fs::path dir = cfg.out_dir / (std::string(stamp) + "-" + what);
  for (int k = 2; fs::exists(dir); ++k) dir = cfg.out_dir / (std::string(stamp) + "-" + what + "-" + std::to_string(k));
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void log(std::string_view msg) { std::cerr << msg << '\n'; }

int cmd_corpus_build(const Globals& g) {
  const RunConfig cfg = resolve_config(g);
  const Lexicon lex = load_lexicon(cfg.corpus.lexicon);
  const CorpusManifest m = build_corpus(lex, cfg.corpus.options(derive_seed(cfg.seed, "corpus")), cfg.detector);
  const fs::path dir = output_dir(g, cfg, "corpus");
  save_dataset(m, dir);
  write_file(dir / "config.snapshot", cfg.to_text());
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& s : m.samples) ++counts[static_cast<int>(s.split)];
  std::cout << "wrote " << m.samples.size() << " samples (train " << counts[0] << ", test_iv " << counts[1]
            << ", test_oov " << counts[2] << ") to " << dir.string() << '\n';
  return 0;
}

int cmd_pseudo_generate(const Globals& g, const std::string& corpus_dir, bool no_check) {
  RunConfig cfg = resolve_config(g);
  if (no_check) cfg.augment.semantic_check = false;
  const CorpusManifest corpus = load_dataset(corpus_dir);
  const Lexicon check = checking_lexicon(cfg);
  const PseudoResult r =
      generate_pseudo(corpus, check, train_vocabulary(corpus), cfg.augment, cfg.detector, derive_seed(cfg.seed, "pseudo"));
  const fs::path dir = output_dir(g, cfg, "pseudo");
  save_dataset(r.manifest, dir);
  write_file(dir / "stats.json", r.stats.to_json() + "\n");
  std::ostringstream verdicts;
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    verdicts << "{\"id\":" << nlohmann::json(r.manifest.samples[i].id).dump()
             << ",\"vocab\":\"" << to_string(r.records[i].vocab) << "\",\"check\":" << verdict_json(r.records[i].verdict)
             << "}\n";
  }
  write_file(dir / "verdicts.jsonl", verdicts.str());
  write_file(dir / "config.snapshot", cfg.to_text());
  std::cout << r.stats.to_json() << '\n';
  if (!r.stats.warning.empty()) log("warning: " + r.stats.warning);
  return 0;
}

int cmd_semcheck_run(const Globals& g, const std::vector<std::string>& lexicons) {
  const RunConfig cfg = resolve_config(g);
  Lexicon lex;
  if (lexicons.empty()) {
    lex = checking_lexicon(cfg);
  } else {
    for (const auto& p : lexicons) lex = merge_lexicons(lex, load_lexicon(p));
  }
  std::string line;
  while (std::getline(std::cin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::cout << verdict_json(check(line, lex, cfg.semcheck.policy)) << '\n';
  }
  return 0;
}

int cmd_train(const Globals& g, const std::string& corpus_dir, const std::string& pseudo_dir) {
  const RunConfig cfg = resolve_config(g);
  const CorpusManifest corpus = load_dataset(corpus_dir);
  std::optional<CorpusManifest> pseudo;
  if (!pseudo_dir.empty()) pseudo = load_dataset(pseudo_dir);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, "train");
  const TrainResult r = train(corpus, pseudo ? &*pseudo : nullptr, tc, cfg.detector, &corpus);
  const fs::path dir = output_dir(g, cfg, "train");
  fs::create_directories(dir);
  save_checkpoint(r.params, dir / "model.ckpt");
  write_file(dir / "history.json", history_json(r.history) + "\n");
  write_file(dir / "history.txt", history_text(r.history));
  write_file(dir / "config.snapshot", cfg.to_text());
  std::cout << history_text(r.history) << "model written to " << (dir / "model.ckpt").string() << '\n';
  return 0;
}

int cmd_eval(const Globals& g, const std::string& corpus_dir, const std::string& model, bool json) {
  const RunConfig cfg = resolve_config(g);
  const CorpusManifest corpus = load_dataset(corpus_dir);
  const ModelParams params = load_checkpoint(model);
  const EvalReport r = evaluate(corpus, params, train_vocabulary(corpus), cfg.detector);
  if (!g.out.empty()) {
    fs::create_directories(g.out);
    write_file(fs::path(g.out) / "eval.json", r.to_json() + "\n");
  }
  std::cout << (json ? r.to_json() + "\n" : r.to_text());
  return 0;
}

int cmd_gradcheck(const Globals& g, int trials, std::size_t dim, std::size_t batch, double eps, double tol) {
  const RunConfig cfg = resolve_config(g);
  if (trials < 1 || dim < 1 || batch < 1) throw UsageError("trials, dim and batch must be positive");
  double worst = 0.0;
  std::size_t fallback_samples = 0;
  for (int t = 0; t < trials; ++t) {
    const auto inst = make_gradcheck_instance(dim, batch, Charset::kSize, t % 2 == 1,
                                              derive_seed(derive_seed(cfg.seed, "gradcheck"), static_cast<std::uint64_t>(t)));
    const LossCache c = forward(inst.batch, inst.classifier, cfg.train.margin);
    for (auto f : c.fallback) fallback_samples += f;
    worst = std::max(worst, finite_diff_check(inst.batch, inst.classifier, cfg.train.margin, eps));
  }
  std::printf("trials %d  dim %zu  batch %zu  eps %g  fallback samples %zu\nmax relative error %.3e (tolerance %.1e)\n",
              trials, dim, batch, eps, fallback_samples, worst, tol);
  return worst < tol ? 0 : 1;
}

int cmd_ablate(const Globals& g, const std::string& arms, const std::string& seeds, bool save_manifests) {
  RunConfig cfg = resolve_config(g);
  if (!arms.empty()) cfg.set("experiment.arms", arms);
  if (!seeds.empty()) cfg.set("experiment.seeds", seeds);
  const fs::path dir = output_dir(g, cfg, "ablate");
  fs::create_directories(dir);
  const ExperimentReport r = ablate(cfg, save_manifests ? std::optional<fs::path>(dir / "manifests") : std::nullopt, log);
  write_file(dir / "report.json", r.to_json() + "\n");
  write_file(dir / "report.txt", r.to_text());
  write_file(dir / "report.csv", r.to_csv());
  write_file(dir / "config.snapshot", r.config_snapshot);
  std::cout << r.to_text() << "report written to " << dir.string() << '\n';
  return 0;
}

int cmd_report(const std::string& input, const std::string& format, bool verify) {
  const auto j = nlohmann::ordered_json::parse(read_file(input));
  if (verify) {
    RunConfig cfg;
    cfg.apply_text(j.at("config_snapshot").get<std::string>());
    const ExperimentReport again = ablate(cfg, std::nullopt, log);
    auto stored = j;
    stored.erase("wall_seconds");
    for (auto& arm : stored.at("arms")) {
      for (auto& run : arm.at("runs")) run.erase("train_seconds");
    }
    const bool same = nlohmann::ordered_json::parse(again.to_json(false)) == stored;
    std::cout << (same ? "reproduced: every reported number matches\n" : "MISMATCH: rerun differs from report\n");
    return same ? 0 : 1;
  }
  if (format == "json") {
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  char buf[200];
  if (format == "csv") {
    std::cout << "arm,data,loss,mean_crw_iv,mean_crw_oov,mean_crw_all,mean_per_char_accuracy\n";
  } else {
    std::snprintf(buf, sizeof buf, "%-22s %-15s %-18s %9s %9s %9s %9s\n", "arm", "data", "loss", "CRW-IV", "CRW-OOV",
                  "CRW-all", "char%");
    std::cout << buf;
  }
  for (const auto& a : j.at("arms")) {
    const auto name = a.at("name").get<std::string>();
    const auto data = a.at("data").get<std::string>();
    const auto loss = a.at("loss").get<std::string>();
    const double iv = a.at("mean_crw_iv"), oov = a.at("mean_crw_oov"), all = a.at("mean_crw_all"),
                 ch = a.at("mean_per_char_accuracy");
    if (format == "csv") {
      std::snprintf(buf, sizeof buf, "%s,%s,%s,%.17g,%.17g,%.17g,%.17g\n", name.c_str(), data.c_str(), loss.c_str(), iv,
                    oov, all, ch);
    } else {
      std::snprintf(buf, sizeof buf, "%-22s %-15s %-18s %9.2f %9.2f %9.2f %9.2f\n", name.c_str(), data.c_str(),
                    loss.c_str(), iv, oov, all, ch);
    }
    std::cout << buf;
  }
  return 0;
}

int cmd_detect(const Globals& g, const std::string& image) {
  const RunConfig cfg = resolve_config(g);
  const GrayImage img = read_pgm(image);
  auto arr = nlohmann::ordered_json::array();
  const auto boxes = detect_chars(img, cfg.detector);
  for (const auto& b : boxes) arr.push_back({b.x, b.y, b.w, b.h, b.confidence});
  nlohmann::ordered_json j;
  j["boxes"] = arr;
  j["quality"] = word_quality(boxes, cfg.detector.empty_quality);
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_inpaint(const Globals& g, const std::string& image, const std::vector<int>& box, const std::string& output) {
  const RunConfig cfg = resolve_config(g);
  if (box.size() != 4) throw UsageError("--box expects x,y,w,h");
  const GrayImage img = read_pgm(image);
  const Mask mask = mask_from_box(CharBox{box[0], box[1], box[2], box[3], 1.0, std::nullopt}, img.width, img.height, 0);
  InpaintTrace trace;
  write_pgm(inpaint_traced(img, mask, cfg.augment.inpaint, trace), output);
  std::cout << "iterations " << trace.iterations << ", last change " << trace.last_change << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pocr: pseudo-label OCR toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pocr 1.0");
  Globals g;
  app.add_option("--config", g.config_path, "Config file (default: $POCR_CONFIG)");
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.sets, "Override, section.key=value (repeatable)");
  app.add_flag_callback("--simd-scalar", [] { simd::select_isa(simd::Isa::kScalar); }, "Force scalar kernels");

  std::function<int()> action;

  auto* corpus = app.add_subcommand("corpus", "Synthetic corpus")->require_subcommand(1);
  corpus->add_subcommand("build", "Render and score a corpus")->callback([&] { action = [&] { return cmd_corpus_build(g); }; });

  auto* pseudo = app.add_subcommand("pseudo", "Pseudo-label generation")->require_subcommand(1);
  auto* pgen = pseudo->add_subcommand("generate", "Generate pseudo samples from a corpus");
  std::string corpus_dir;
  bool no_check = false;
  pgen->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  pgen->add_flag("--no-check", no_check, "Skip semantic checking");
  pgen->callback([&] { action = [&] { return cmd_pseudo_generate(g, corpus_dir, no_check); }; });

  auto* sem = app.add_subcommand("semcheck", "Semantic checking")->require_subcommand(1);
  auto* srun = sem->add_subcommand("run", "Check labels read from standard input");
  std::vector<std::string> lexicons;
  srun->add_option("--lexicon", lexicons, "Checking lexicon file(s); default from config");
  srun->callback([&] { action = [&] { return cmd_semcheck_run(g, lexicons); }; });

  auto* tr = app.add_subcommand("train", "Train the character classifier");
  std::string pseudo_dir;
  tr->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  tr->add_option("--pseudo", pseudo_dir, "Pseudo manifest directory");
  tr->callback([&] { action = [&] { return cmd_train(g, corpus_dir, pseudo_dir); }; });

  auto* ev = app.add_subcommand("eval", "Evaluate CRW on the test splits");
  std::string model;
  bool json = false;
  ev->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  ev->add_option("--model", model, "Checkpoint")->required();
  ev->add_flag("--json", json, "Print JSON");
  ev->callback([&] { action = [&] { return cmd_eval(g, corpus_dir, model, json); }; });

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the loss gradients");
  int trials = 100;
  std::size_t dim = 16;
  std::size_t batch = 8;
  double eps = 1e-5;
  double tol = 1e-4;
  gc->add_option("--trials", trials, "Random instances")->capture_default_str();
  gc->add_option("--dim", dim, "Feature dimension")->capture_default_str();
  gc->add_option("--batch", batch, "Samples per instance")->capture_default_str();
  gc->add_option("--eps", eps, "Central-difference step")->capture_default_str();
  gc->add_option("--tol", tol, "Maximum relative error")->capture_default_str();
  gc->callback([&] { action = [&] { return cmd_gradcheck(g, trials, dim, batch, eps, tol); }; });

  auto* ab = app.add_subcommand("ablate", "Run the ablation arms");
  std::string arms;
  std::string seeds;
  bool save_manifests = false;
  ab->add_option("--arms", arms, "Comma-separated arms");
  ab->add_option("--seeds", seeds, "Comma-separated repetition seeds");
  ab->add_flag("--save-manifests", save_manifests, "Persist the corpus and pseudo manifests");
  ab->callback([&] { action = [&] { return cmd_ablate(g, arms, seeds, save_manifests); }; });

  auto* rp = app.add_subcommand("report", "Render or verify an ablation report");
  std::string input;
  std::string format = "text";
  bool verify = false;
  rp->add_option("--input", input, "report.json")->required();
  rp->add_option("--format", format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));
  rp->add_flag("--verify", verify, "Rerun from the embedded snapshot and compare");
  rp->callback([&] { action = [&] { return cmd_report(input, format, verify); }; });

  auto* dt = app.add_subcommand("detect", "Detect characters in a PGM image");
  std::string image;
  dt->add_option("--image", image, "PGM file")->required();
  dt->callback([&] { action = [&] { return cmd_detect(g, image); }; });

  auto* ip = app.add_subcommand("inpaint", "Fill a box of a PGM image");
  std::vector<int> box;
  std::string output;
  ip->add_option("--image", image, "PGM file")->required();
  ip->add_option("--box", box, "x,y,w,h")->delimiter(',')->expected(4);
  ip->add_option("--output", output, "Output PGM")->required();
  ip->callback([&] { action = [&] { return cmd_inpaint(g, image, box, output); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return action ? action() : 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
