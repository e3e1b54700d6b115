#include "cx/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cx/error.hpp"
#include <nlohmann/json.hpp>

namespace cx {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::Parse, source + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path.string());
  return out;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

Vec vec_from(const json& j, const std::string& source, std::size_t line, const char* field) {
  if (!j.is_array()) parse_fail(source, line, std::string("'") + field + "' must be an array of numbers");
  Vec v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) parse_fail(source, line, std::string("'") + field + "' contains a non-number");
    v.push_back(x.get<double>());
  }
  if (!all_finite(v)) parse_fail(source, line, std::string("'") + field + "' contains non-finite values");
  return v;
}

json example_to_json(const Example& ex) {
  json j;
  j["id"] = ex.id;
  j["tokens"] = ex.tokens;
  j["label"] = ex.label;
  if (!ex.premise.empty()) j["premise"] = ex.premise;
  if (!ex.concept_labels.empty()) j["concept_labels"] = ex.concept_labels;
  if (ex.counterfactual_of) j["counterfactual_of"] = *ex.counterfactual_of;
  return j;
}

std::vector<std::string> strings_from(const json& j, const std::string& source, std::size_t line, const char* field) {
  if (!j.is_array()) parse_fail(source, line, std::string("'") + field + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& t : j) {
    if (!t.is_string()) parse_fail(source, line, std::string("'") + field + "' contains a non-string");
    out.push_back(t.get<std::string>());
  }
  return out;
}

Example example_from_json(const json& j, const std::string& source, std::size_t line) {
  if (!j.is_object()) parse_fail(source, line, "expected a JSON object");
  Example ex;
  if (!j.contains("id") || !j["id"].is_string()) parse_fail(source, line, "missing string field 'id'");
  ex.id = j["id"].get<std::string>();
  if (!j.contains("label") || !j["label"].is_string()) parse_fail(source, line, "missing string field 'label'");
  ex.label = j["label"].get<std::string>();
  if (j.contains("tokens")) {
    ex.tokens = strings_from(j["tokens"], source, line, "tokens");
  } else if (j.contains("text") && j["text"].is_string()) {
    ex.tokens = tokenize(j["text"].get<std::string>());
  } else {
    parse_fail(source, line, "missing field 'tokens'");
  }
  if (ex.tokens.empty()) parse_fail(source, line, "'tokens' must be non-empty");
  if (j.contains("premise") && !j["premise"].is_null()) {
    ex.premise = j["premise"].is_string() ? tokenize(j["premise"].get<std::string>())
                                          : strings_from(j["premise"], source, line, "premise");
  }
  if (j.contains("concept_labels") && !j["concept_labels"].is_null()) {
    const auto& c = j["concept_labels"];
    if (!c.is_object()) parse_fail(source, line, "'concept_labels' must be an object");
    for (const auto& [name, value] : c.items()) {
      if (!value.is_number_integer() || (value.get<int>() != 0 && value.get<int>() != 1)) {
        parse_fail(source, line, "concept label '" + name + "' must be 0 or 1");
      }
      ex.concept_labels[name] = value.get<int>();
    }
  }
  if (j.contains("counterfactual_of") && !j["counterfactual_of"].is_null()) {
    if (!j["counterfactual_of"].is_string()) parse_fail(source, line, "'counterfactual_of' must be a string");
    ex.counterfactual_of = j["counterfactual_of"].get<std::string>();
  }
  return ex;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, end);
}

std::vector<Example> read_dataset(std::istream& in, const std::string& source) {
  std::vector<Example> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_fail(source, number, e.what());
    }
    out.push_back(example_from_json(j, source, number));
  }
  return out;
}

std::vector<Example> read_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dataset(in, path.string());
}

void write_dataset(std::ostream& out, std::span<const Example> dataset) {
  for (const auto& ex : dataset) out << example_to_json(ex).dump() << '\n';
}

void write_dataset(const std::filesystem::path& path, std::span<const Example> dataset) {
  auto out = open_out(path);
  write_dataset(out, dataset);
}

void write_representations(std::ostream& out, const LinearHead& head, std::span<const LatentRepr> reprs) {
  head.validate();
  json header{{"format", "cx-repr"}, {"version", 1}, {"d", head.dim()}, {"classes", head.event_space.classes()}};
  out << header.dump() << '\n';

  json w = json::array();
  for (std::size_t r = 0; r < head.W.rows(); ++r) {
    const auto row = head.W.row(r);
    w.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json head_line{{"kind", "head"}, {"W", w}, {"bias", head.bias ? json(*head.bias) : json(nullptr)}};
  out << head_line.dump() << '\n';

  for (const auto& r : reprs) {
    require_same_size(r.h.size(), head.dim(), "representation '" + r.example_id + "'");
    out << json{{"kind", "repr"}, {"id", r.example_id}, {"h", r.h}}.dump() << '\n';
  }
}

void write_representations(const std::filesystem::path& path, const LinearHead& head,
                           std::span<const LatentRepr> reprs) {
  auto out = open_out(path);
  write_representations(out, head, reprs);
}

RepresentationSet read_representations(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t number = 0;
  std::optional<std::size_t> dim;
  std::vector<std::string> classes;
  std::optional<LinearHead> head;
  std::vector<LatentRepr> reprs;

  while (std::getline(in, line)) {
    ++number;
    if (blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_fail(source, number, e.what());
    }
    if (!j.is_object()) parse_fail(source, number, "expected a JSON object");

    if (!dim) {
      if (j.value("format", "") != "cx-repr") parse_fail(source, number, "header must declare format cx-repr");
      if (j.value("version", 0) != 1) parse_fail(source, number, "unsupported version");
      if (!j.contains("d") || !j["d"].is_number_integer() || j["d"].get<long long>() < 2) {
        parse_fail(source, number, "header needs integer d >= 2");
      }
      dim = j["d"].get<std::size_t>();
      if (!j.contains("classes")) parse_fail(source, number, "header needs classes");
      classes = strings_from(j["classes"], source, number, "classes");
      continue;
    }

    const std::string kind = j.value("kind", "");
    if (kind == "head") {
      if (head) parse_fail(source, number, "more than one head line");
      if (!j.contains("W") || !j["W"].is_array()) parse_fail(source, number, "head needs W");
      std::vector<Vec> rows;
      for (const auto& r : j["W"]) {
        rows.push_back(vec_from(r, source, number, "W"));
        if (rows.back().size() != *dim) {
          parse_fail(source, number, "W row length " + std::to_string(rows.back().size()) + " != d " +
                                         std::to_string(*dim));
        }
      }
      if (rows.size() != classes.size()) parse_fail(source, number, "W row count does not match classes");
      LinearHead h;
      h.W = Mat::from_rows(rows);
      try {
        h.event_space = EventSpace(classes);
      } catch (const Error& e) {
        parse_fail(source, number, e.what());
      }
      if (j.contains("bias") && !j["bias"].is_null()) {
        h.bias = vec_from(j["bias"], source, number, "bias");
        if (h.bias->size() != classes.size()) parse_fail(source, number, "bias length does not match classes");
      }
      head = std::move(h);
    } else if (kind == "repr") {
      if (!head) parse_fail(source, number, "repr line before the head line");
      if (!j.contains("id") || !j["id"].is_string()) parse_fail(source, number, "repr needs string id");
      LatentRepr r{j["id"].get<std::string>(), vec_from(j.value("h", json()), source, number, "h")};
      if (r.h.size() != *dim) {
        throw Error(ErrorKind::Shape, source + ":" + std::to_string(number) + ": h length " +
                                          std::to_string(r.h.size()) + " != d " + std::to_string(*dim));
      }
      reprs.push_back(std::move(r));
    } else {
      parse_fail(source, number, "unknown line kind '" + kind + "'");
    }
  }
  if (!dim) parse_fail(source, number, "missing header");
  if (!head) parse_fail(source, number, "missing head line");
  return {std::move(*head), std::move(reprs)};
}

RepresentationSet read_representations(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_representations(in, path.string());
}

void export_representations(const std::filesystem::path& path, const LinearHead& head, const BowEncoder& encoder,
                            std::span<const Example> dataset) {
  const auto reprs = encode_all(encoder, dataset);
  write_representations(path, head, reprs);
}

std::string encoder_to_json(const BowEncoder& encoder) {
  json j{{"format", "cx-model"}, {"version", 1}, {"vocabulary", encoder.vocabulary()},
         {"use_premise", encoder.use_premise()}, {"mask_token", BowEncoder::kMaskToken}};
  if (encoder.embedding()) {
    json rows = json::array();
    for (std::size_t r = 0; r < encoder.embedding()->rows(); ++r) {
      const auto row = encoder.embedding()->row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["embedding"] = rows;
  } else {
    j["embedding"] = nullptr;
  }
  return j.dump();
}

BowEncoder encoder_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("model file: ") + e.what());
  }
  if (j.value("format", "") != "cx-model") throw Error(ErrorKind::Parse, "model file: format must be cx-model");
  auto vocab = strings_from(j.value("vocabulary", json()), "model file", 1, "vocabulary");
  std::optional<Mat> embedding;
  if (j.contains("embedding") && !j["embedding"].is_null()) {
    std::vector<Vec> rows;
    for (const auto& r : j["embedding"]) rows.push_back(vec_from(r, "model file", 1, "embedding"));
    embedding = Mat::from_rows(rows);
  }
  return BowEncoder(std::move(vocab), j.value("use_premise", true), std::move(embedding));
}

void save_model(const std::filesystem::path& dir, const BowEncoder& encoder, const LinearHead& head,
                std::span<const LatentRepr> reprs) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / kModelFile);
    out << encoder_to_json(encoder) << '\n';
  }
  write_representations(dir / kReprFile, head, reprs);
}

ModelBundle load_model(const std::filesystem::path& path) {
  ModelBundle bundle;
  std::filesystem::path repr_path = path;
  if (std::filesystem::is_directory(path)) {
    auto in = open_in(path / kModelFile);
    std::stringstream ss;
    ss << in.rdbuf();
    bundle.encoder = encoder_from_json(ss.str());
    repr_path = path / kReprFile;
  }
  auto set = read_representations(repr_path);
  bundle.head = std::move(set.head);
  bundle.reprs = std::move(set.reprs);
  if (bundle.encoder) require_same_size(bundle.encoder->dim(), bundle.head.dim(), "encoder vs head dimension");
  return bundle;
}

}  // namespace cx
