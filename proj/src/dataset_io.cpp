#include "pocr/dataset_io.hpp"

#include <fstream>

#include "json.hpp"
#include "pocr/error.hpp"

namespace pocr {

namespace {

using json = nlohmann::ordered_json;

json sample_object(const TextSample& s) {
  json j;
  j["id"] = s.id;
  j["image"] = s.id + ".pgm";
  j["label"] = s.label;
  json boxes = json::array();
  for (const auto& b : s.boxes) boxes.push_back(json::array({b.x, b.y, b.w, b.h, b.confidence}));
  j["boxes"] = std::move(boxes);
  j["quality"] = s.quality;
  if (s.provenance.is_pseudo()) {
    j["provenance"] = {{"kind", "pseudo"}, {"origin", s.provenance.origin_id}, {"op", to_string(s.provenance.op)}};
  } else {
    j["provenance"] = {{"kind", "rendered"}, {"origin", nullptr}, {"op", nullptr}};
  }
  j["split"] = to_string(s.split);
  return j;
}

TextSample parse_line(const std::string& line, std::size_t lineno, const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(lineno, e.what());
  }
  TextSample s;
  try {
    s.id = j.at("id").get<std::string>();
    s.label = j.at("label").get<std::string>();
    s.quality = j.at("quality").get<double>();
    const auto& boxes = j.at("boxes");
    if (!boxes.is_array()) throw ParseError(lineno, "boxes is not an array");
    for (const auto& b : boxes) {
      if (!b.is_array() || b.size() != 5) throw ParseError(lineno, "box must be [x,y,w,h,conf]");
      s.boxes.push_back(CharBox{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>(),
                                b[4].get<double>(), std::nullopt});
    }
    const auto& prov = j.at("provenance");
    const std::string kind = prov.at("kind").get<std::string>();
    if (kind == "pseudo") {
      const auto op = parse_op(prov.at("op").get<std::string>());
      if (!op) throw ParseError(lineno, "unknown op");
      s.provenance = Provenance::pseudo(prov.at("origin").get<std::string>(), *op);
    } else if (kind != "rendered") {
      throw ParseError(lineno, "unknown provenance kind '" + kind + "'");
    }
    const auto split = parse_split(j.at("split").get<std::string>());
    if (!split) throw ParseError(lineno, "unknown split");
    s.split = *split;
    if (s.boxes.size() != s.label.size()) {
      throw ParseError(lineno, "box count " + std::to_string(s.boxes.size()) + " != label length " +
                                   std::to_string(s.label.size()));
    }
    for (std::size_t k = 0; k < s.boxes.size(); ++k) s.boxes[k].char_hint = s.label[k];
    s.image = read_pgm(dir / j.at("image").get<std::string>());
  } catch (const json::exception& e) {
    throw ParseError(lineno, e.what());
  }
  return s;
}

}  // namespace

std::string sample_to_json(const TextSample& sample) { return sample_object(sample).dump(); }

void save_dataset(const CorpusManifest& manifest, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ofstream out(dir / kManifestName, std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / kManifestName).string());
  for (const auto& s : manifest.samples) {
    write_pgm(s.image, dir / (s.id + ".pgm"));
    out << sample_to_json(s) << '\n';
  }
  if (!out) throw IoError("write failed for " + (dir / kManifestName).string());
}

CorpusManifest load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestName, std::ios::binary);
  if (!in) throw IoError("cannot read " + (dir / kManifestName).string());
  CorpusManifest manifest;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    manifest.samples.push_back(parse_line(line, lineno, dir));
  }
  return manifest;
}

}  // namespace pocr
