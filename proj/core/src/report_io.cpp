#include "cx/report_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "cx/error.hpp"
#include "cx/io.hpp"
#include <nlohmann/json.hpp>

namespace cx {

using nlohmann::json;

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorKind::Parse, "unterminated quoted CSV field");
  fields.push_back(std::move(cur));
  return fields;
}

void write_reports_csv(std::ostream& out, std::span<const RankingReport> reports) {
  out << "mode,fact,fixed,item,score,count\n";
  for (const auto& r : reports) {
    for (const auto& e : r.entries) {
      out << to_string(r.mode) << ',' << csv_escape(r.fact) << ',' << csv_escape(r.fixed) << ','
          << csv_escape(e.item) << ',' << format_double(e.score) << ',' << e.count << '\n';
    }
  }
}

std::vector<RankingReport> read_reports_csv(std::istream& in, const std::string& source) {
  std::vector<RankingReport> reports;
  std::string line;
  std::size_t number = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::Parse, source + ":" + std::to_string(number) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++number;
    if (number == 1) {
      if (line.rfind("mode,fact,fixed,item,score,count", 0) != 0) fail("unexpected CSV header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    try {
      f = csv_split(line);
    } catch (const Error& e) {
      fail(e.what());
    }
    if (f.size() != 6) fail("expected 6 fields, got " + std::to_string(f.size()));
    RankEntry entry;
    entry.item = f[3];
    {
      const char* b = f[4].data();
      auto [ptr, ec] = std::from_chars(b, b + f[4].size(), entry.score);
      if (ec != std::errc() || ptr != b + f[4].size()) fail("bad score '" + f[4] + "'");
    }
    {
      const char* b = f[5].data();
      auto [ptr, ec] = std::from_chars(b, b + f[5].size(), entry.count);
      if (ec != std::errc() || ptr != b + f[5].size()) fail("bad count '" + f[5] + "'");
    }
    RankMode mode;
    try {
      mode = rank_mode_from(f[0]);
    } catch (const Error& e) {
      fail(e.what());
    }
    if (reports.empty() || reports.back().mode != mode || reports.back().fact != f[1] || reports.back().fixed != f[2]) {
      RankingReport r;
      r.mode = mode;
      r.fact = f[1];
      r.fixed = f[2];
      reports.push_back(std::move(r));
    }
    reports.back().entries.push_back(std::move(entry));
  }
  return reports;
}

std::string reports_to_json(std::span<const RankingReport> reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json entries = json::array();
    for (const auto& e : r.entries) {
      json je{{"item", e.item}, {"score", e.score}, {"count", e.count}, {"insufficient", e.insufficient}};
      je["span"] = e.span ? json::array({e.span->begin, e.span->end}) : json(nullptr);
      entries.push_back(std::move(je));
    }
    arr.push_back({{"mode", to_string(r.mode)},
                   {"fact", r.fact},
                   {"fixed", r.fixed},
                   {"metric", to_string(r.metric)},
                   {"aggregation", to_string(r.aggregation)},
                   {"entries", std::move(entries)}});
  }
  return arr.dump(2);
}

std::vector<RankingReport> reports_from_json(const std::string& text) {
  try {
    const json arr = json::parse(text);
    std::vector<RankingReport> out;
    for (const auto& j : arr) {
      RankingReport r;
      r.mode = rank_mode_from(j.at("mode").get<std::string>());
      r.fact = j.at("fact").get<std::string>();
      r.fixed = j.at("fixed").get<std::string>();
      r.metric = metric_from(j.at("metric").get<std::string>());
      r.aggregation = aggregation_from(j.at("aggregation").get<std::string>());
      for (const auto& je : j.at("entries")) {
        RankEntry e;
        e.item = je.at("item").get<std::string>();
        e.score = je.at("score").get<double>();
        e.count = je.at("count").get<std::size_t>();
        e.insufficient = je.at("insufficient").get<bool>();
        if (!je.at("span").is_null()) e.span = TokenSpan{je["span"].at(0).get<std::size_t>(), je["span"].at(1).get<std::size_t>()};
        r.entries.push_back(std::move(e));
      }
      out.push_back(std::move(r));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("report JSON: ") + e.what());
  }
}

void write_prevalence_csv(std::ostream& out, std::span<const PrevalenceTable> tables) {
  out << "concept,total_pct,count,with_concept,column,class,pct\n";
  for (const auto& t : tables) {
    const std::string head = csv_escape(t.concept_name) + ',' + format_double(t.total_pct) + ',' +
                             std::to_string(t.total) + ',' + std::to_string(t.with_concept) + ',';
    if (t.gold_pct.empty()) {
      out << head << ",,\n";
      continue;
    }
    for (std::size_t c = 0; c < t.classes.size(); ++c)
      out << head << "gold," << csv_escape(t.classes[c]) << ',' << format_double(t.gold_pct[c]) << '\n';
    for (std::size_t c = 0; c < t.classes.size(); ++c)
      out << head << "predicted," << csv_escape(t.classes[c]) << ',' << format_double(t.predicted_pct[c]) << '\n';
  }
}

}  // namespace cx
