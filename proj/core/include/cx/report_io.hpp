#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cx/concepts.hpp"
#include "cx/ranking.hpp"

namespace cx {

// Ranking CSV: header `mode,fact,fixed,item,score,count`, one row per entry,
// reports in order. Scores use the shortest round-trip decimal form; fields
// containing commas or quotes are quoted per RFC 4180.
void write_reports_csv(std::ostream& out, std::span<const RankingReport> reports);
/// Restores mode, fact, fixed and entries (item, score, count). Metric,
/// aggregation, spans and insufficiency flags live in the JSON form.
std::vector<RankingReport> read_reports_csv(std::istream& in, const std::string& source = "<stream>");

/// Full-fidelity JSON array of reports.
std::string reports_to_json(std::span<const RankingReport> reports);
std::vector<RankingReport> reports_from_json(const std::string& text);

std::string csv_escape(const std::string& field);
/// Splits one CSV record; throws parse errors on unbalanced quotes.
std::vector<std::string> csv_split(const std::string& line);

void write_prevalence_csv(std::ostream& out, std::span<const PrevalenceTable> tables);

}  // namespace cx
