#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cx/model.hpp"

namespace cx {

// Dataset files are JSON Lines, one Example per line:
//   {"id":..., "tokens":[...], "label":..., "premise":[...],
//    "concept_labels":{"name":0|1}, "counterfactual_of":"id"|null}
// "text" may replace "tokens"; it is split on whitespace, case kept.
std::vector<Example> read_dataset(std::istream& in, const std::string& source = "<stream>");
std::vector<Example> read_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, std::span<const Example> dataset);
void write_dataset(const std::filesystem::path& path, std::span<const Example> dataset);

struct RepresentationSet {
  LinearHead head;
  std::vector<LatentRepr> reprs;
};

// Representation files: a header line
//   {"format":"cx-repr","version":1,"d":<int>,"classes":[...]}
// then exactly one {"kind":"head","W":[[...]],"bias":[...]|null} and any
// number of {"kind":"repr","id":"...","h":[...]} lines.
void write_representations(std::ostream& out, const LinearHead& head, std::span<const LatentRepr> reprs);
void write_representations(const std::filesystem::path& path, const LinearHead& head,
                           std::span<const LatentRepr> reprs);
RepresentationSet read_representations(std::istream& in, const std::string& source = "<stream>");
RepresentationSet read_representations(const std::filesystem::path& path);

void export_representations(const std::filesystem::path& path, const LinearHead& head, const BowEncoder& encoder,
                            std::span<const Example> dataset);
inline RepresentationSet import_representations(const std::filesystem::path& path) {
  return read_representations(path);
}

/// A trained model on disk: a directory holding model.json (encoder) and
/// reprs.jsonl (head + representations), or a bare representation file.
struct ModelBundle {
  std::optional<BowEncoder> encoder;
  LinearHead head;
  std::vector<LatentRepr> reprs;
};

inline constexpr const char* kModelFile = "model.json";
inline constexpr const char* kReprFile = "reprs.jsonl";

void save_model(const std::filesystem::path& dir, const BowEncoder& encoder, const LinearHead& head,
                std::span<const LatentRepr> reprs);
ModelBundle load_model(const std::filesystem::path& path);

std::string encoder_to_json(const BowEncoder& encoder);
BowEncoder encoder_from_json(const std::string& text);

/// Shortest text that parses back to exactly `x`.
std::string format_double(double x);

}  // namespace cx
