#pragma once

#include <filesystem>
#include <string>

#include "pocr/corpus.hpp"

namespace pocr {

inline constexpr const char* kManifestName = "manifest.jsonl";

// One JSON object (no trailing newline) in the manifest schema:
// {"id","image","label","boxes":[[x,y,w,h,conf],...],"quality",
//  "provenance":{"kind","origin","op"},"split"}
std::string sample_to_json(const TextSample& sample);

// Writes <dir>/manifest.jsonl and one <id>.pgm per sample. Creates the
// directory if needed; throws IoError when it cannot write.
void save_dataset(const CorpusManifest& manifest, const std::filesystem::path& dir);

// Inverse of save_dataset. Throws IoError (no manifest), ParseError with the
// 1-based line number (malformed line, unknown enum, box count != label
// length), MissingAsset / DecodeError for image files.
CorpusManifest load_dataset(const std::filesystem::path& dir);

}  // namespace pocr
