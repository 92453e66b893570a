#include "pocr/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"
#include "pocr/dataset_io.hpp"
#include "pocr/error.hpp"
#include "pocr/rng.hpp"

namespace pocr {

std::string_view to_string(DataVariant v) noexcept {
  switch (v) {
    case DataVariant::kBaseline:
      return "baseline";
    case DataVariant::kPseudo:
      return "pseudo";
    case DataVariant::kPseudoNoCheck:
      return "pseudo_nocheck";
    case DataVariant::kNoRemove:
      return "no_remove";
    case DataVariant::kNoSwap:
      return "no_swap";
  }
  return "baseline";
}

ArmSpec parse_arm(std::string_view name, LossVariant default_loss) {
  ArmSpec spec;
  spec.name = std::string(name);
  spec.loss = default_loss;
  std::string_view data = name;
  if (const auto colon = name.find(':'); colon != std::string_view::npos) {
    data = name.substr(0, colon);
    const auto loss = parse_loss_variant(name.substr(colon + 1));
    if (!loss) throw UsageError("unknown loss variant in arm '" + std::string(name) + "'");
    spec.loss = *loss;
  } else if (const auto loss = parse_loss_variant(name)) {
    spec.loss = *loss;
    return spec;
  }
  static constexpr DataVariant kAll[] = {DataVariant::kBaseline, DataVariant::kPseudo, DataVariant::kPseudoNoCheck,
                                         DataVariant::kNoRemove, DataVariant::kNoSwap};
  for (DataVariant v : kAll) {
    if (to_string(v) == data) {
      spec.data = v;
      return spec;
    }
  }
  throw UsageError("unknown arm '" + std::string(name) + "'");
}

std::vector<std::string> default_arms() {
  return {"baseline", "pseudo", "pseudo_nocheck", "no_remove", "no_swap",
          "softmax",  "fixed_margin", "quality_box", "quality_image_norm"};
}

std::optional<AugmentConfig> augment_for(DataVariant v, const AugmentConfig& base) {
  AugmentConfig a = base;
  auto drop = [&](std::size_t op) {
    const double rest = 1.0 - a.op_mix[op];
    if (rest <= 0.0) throw ConfigError("op_mix has no mass left after removing an op");
    a.op_mix[op] = 0.0;
    for (double& p : a.op_mix) p /= rest;
  };
  switch (v) {
    case DataVariant::kBaseline:
      return std::nullopt;
    case DataVariant::kPseudo:
      a.semantic_check = true;
      break;
    case DataVariant::kPseudoNoCheck:
      a.semantic_check = false;
      break;
    case DataVariant::kNoRemove:
      a.semantic_check = true;
      drop(0);
      break;
    case DataVariant::kNoSwap:
      a.semantic_check = true;
      drop(1);
      break;
  }
  return a;
}

Lexicon checking_lexicon(const RunConfig& cfg) {
  Lexicon lex = load_lexicon(cfg.corpus.lexicon);
  for (const auto& p : cfg.semcheck.extra_lexicons) lex = merge_lexicons(lex, load_lexicon(p));
  return lex;
}

const ArmResult* ExperimentReport::arm(std::string_view name) const {
  for (const auto& a : arms) {
    if (a.spec.name == name) return &a;
  }
  return nullptr;
}

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t) {
  return std::chrono::duration<double>(clock_type::now() - t).count();
}

}  // namespace

ExperimentReport ablate(const RunConfig& cfg, const std::optional<std::filesystem::path>& manifest_dir,
                        const ProgressFn& progress) {
  cfg.validate();
  const auto start = clock_type::now();
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };

  std::vector<ArmSpec> specs;
  for (const auto& name : cfg.experiment.arms.empty() ? default_arms() : cfg.experiment.arms) {
    specs.push_back(parse_arm(name, cfg.train.loss_variant));
  }
  if (specs.empty()) throw UsageError("no arms to run");

  const Lexicon lexicon = load_lexicon(cfg.corpus.lexicon);
  Lexicon check = lexicon;
  for (const auto& p : cfg.semcheck.extra_lexicons) check = merge_lexicons(check, load_lexicon(p));

  ExperimentReport report;
  report.config_snapshot = cfg.to_text();
  report.arms.resize(specs.size());
  for (std::size_t a = 0; a < specs.size(); ++a) report.arms[a].spec = specs[a];

  for (std::uint64_t rep : cfg.experiment.seeds) {
    const std::uint64_t base = derive_seed(cfg.seed, rep);
    const std::string tag = "seed" + std::to_string(rep);
    say("[" + tag + "] building corpus");
    const CorpusManifest corpus =
        build_corpus(lexicon, cfg.corpus.options(derive_seed(base, "corpus")), cfg.detector);
    const Lexicon vocab = train_vocabulary(corpus);
    std::string corpus_ref = "corpus/" + tag;
    if (manifest_dir) {
      const auto dir = *manifest_dir / tag / "corpus";
      save_dataset(corpus, dir);
      corpus_ref = dir.string();
    }

    std::map<DataVariant, PseudoResult> pseudo;
    std::map<DataVariant, std::string> pseudo_ref;
    std::map<std::pair<DataVariant, LossVariant>, SeedRun> done;
    for (std::size_t a = 0; a < specs.size(); ++a) {
      const ArmSpec& spec = specs[a];
      const auto key = std::make_pair(spec.data, spec.loss);
      if (auto it = done.find(key); it != done.end()) {
        report.arms[a].runs.push_back(it->second);
        continue;
      }
      SeedRun run;
      run.seed = rep;
      run.manifests.push_back(corpus_ref);
      const CorpusManifest* extra = nullptr;
      if (const auto aug = augment_for(spec.data, cfg.augment)) {
        if (!pseudo.count(spec.data)) {
          say("[" + tag + "] generating pseudo data (" + std::string(to_string(spec.data)) + ")");
          pseudo[spec.data] = generate_pseudo(corpus, check, vocab, *aug, cfg.detector, derive_seed(base, "pseudo"));
          std::string ref = "pseudo/" + std::string(to_string(spec.data)) + "/" + tag;
          if (manifest_dir) {
            const auto dir = *manifest_dir / tag / ("pseudo_" + std::string(to_string(spec.data)));
            save_dataset(pseudo[spec.data].manifest, dir);
            ref = dir.string();
          }
          pseudo_ref[spec.data] = ref;
        }
        extra = &pseudo[spec.data].manifest;
        run.generation = pseudo[spec.data].stats;
        run.manifests.push_back(pseudo_ref[spec.data]);
      }
      TrainConfig tc = cfg.train;
      tc.loss_variant = spec.loss;
      tc.seed = derive_seed(base, "train");
      say("[" + tag + "] training " + spec.name);
      const auto t0 = clock_type::now();
      const TrainResult tr = train(corpus, extra, tc, cfg.detector);
      run.train_seconds = seconds_since(t0);
      run.final_loss = tr.history.back().loss;
      run.eval = evaluate(corpus, tr.params, vocab, cfg.detector);
      char buf[160];
      std::snprintf(buf, sizeof buf, "[%s] %s: OOV %.2f IV %.2f all %.2f (%.1fs)", tag.c_str(), spec.name.c_str(),
                    run.eval.crw_oov, run.eval.crw_iv, run.eval.crw_all, run.train_seconds);
      say(buf);
      done[key] = run;
      report.arms[a].runs.push_back(std::move(run));
    }
  }

  for (auto& arm : report.arms) {
    const double n = static_cast<double>(arm.runs.size());
    for (const auto& r : arm.runs) {
      arm.mean_crw_iv += r.eval.crw_iv / n;
      arm.mean_crw_oov += r.eval.crw_oov / n;
      arm.mean_crw_all += r.eval.crw_all / n;
      arm.mean_per_char += r.eval.per_char_accuracy / n;
    }
  }
  report.wall_seconds = seconds_since(start);
  return report;
}

std::string ExperimentReport::to_json(bool with_timings) const {
  nlohmann::ordered_json j;
  j["config_snapshot"] = config_snapshot;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& a : arms) {
    nlohmann::ordered_json ja;
    ja["name"] = a.spec.name;
    ja["data"] = to_string(a.spec.data);
    ja["loss"] = to_string(a.spec.loss);
    ja["mean_crw_iv"] = a.mean_crw_iv;
    ja["mean_crw_oov"] = a.mean_crw_oov;
    ja["mean_crw_all"] = a.mean_crw_all;
    ja["mean_per_char_accuracy"] = a.mean_per_char;
    auto runs = nlohmann::ordered_json::array();
    for (const auto& r : a.runs) {
      nlohmann::ordered_json jr;
      jr["seed"] = r.seed;
      jr["manifests"] = r.manifests;
      jr["final_loss"] = r.final_loss;
      jr["eval"] = nlohmann::ordered_json::parse(r.eval.to_json());
      jr["generation"] = r.generation ? nlohmann::ordered_json::parse(r.generation->to_json())
                                      : nlohmann::ordered_json(nullptr);
      if (with_timings) jr["train_seconds"] = r.train_seconds;
      runs.push_back(std::move(jr));
    }
    ja["runs"] = std::move(runs);
    arr.push_back(std::move(ja));
  }
  j["arms"] = std::move(arr);
  if (with_timings) j["wall_seconds"] = wall_seconds;
  return j.dump(2);
}

std::string ExperimentReport::to_text() const {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-22s %-15s %-18s %5s %9s %9s %9s %9s\n", "arm", "data", "loss", "seeds", "CRW-IV",
                "CRW-OOV", "CRW-all", "char%");
  os << buf;
  for (const auto& a : arms) {
    std::snprintf(buf, sizeof buf, "%-22s %-15s %-18s %5zu %9.2f %9.2f %9.2f %9.2f\n", a.spec.name.c_str(),
                  std::string(to_string(a.spec.data)).c_str(), std::string(to_string(a.spec.loss)).c_str(),
                  a.runs.size(), a.mean_crw_iv, a.mean_crw_oov, a.mean_crw_all, a.mean_per_char);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "wall time %.1fs\n", wall_seconds);
  os << buf;
  return os.str();
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  os << "arm,data,loss,seed,crw_iv,crw_oov,crw_all,per_char_accuracy,n_iv,n_oov\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& a : arms) {
    const std::string prefix =
        a.spec.name + "," + std::string(to_string(a.spec.data)) + "," + std::string(to_string(a.spec.loss)) + ",";
    for (const auto& r : a.runs) {
      os << prefix << r.seed << ',' << num(r.eval.crw_iv) << ',' << num(r.eval.crw_oov) << ',' << num(r.eval.crw_all)
         << ',' << num(r.eval.per_char_accuracy) << ',' << r.eval.n_iv << ',' << r.eval.n_oov << '\n';
    }
    os << prefix << "mean," << num(a.mean_crw_iv) << ',' << num(a.mean_crw_oov) << ',' << num(a.mean_crw_all) << ','
       << num(a.mean_per_char) << ",,\n";
  }
  return os.str();
}

}  // namespace pocr
