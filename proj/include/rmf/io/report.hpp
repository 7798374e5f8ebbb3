#pragma once

// JSON serialization of score tables and meta reports (schemas under docs/),
// and the plain-text forest table printed by `rmf compare`.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rmf/eval.hpp"
#include "rmf/stats.hpp"

namespace rmf::io {

inline constexpr const char* kScoreTableSchema = "rmf.score_table/1";
inline constexpr const char* kMetaReportSchema = "rmf.meta_report/1";

nlohmann::ordered_json to_json(const PipelineScoreTable& t);
nlohmann::ordered_json to_json(const MetaReport& r);

PipelineScoreTable score_table_from_json(const nlohmann::json& j);
MetaReport meta_report_from_json(const nlohmann::json& j);

/// Serialized form with a trailing newline; identical inputs give identical bytes.
std::string dump(const nlohmann::ordered_json& j);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// One row per dataset plus the meta row: dataset, n, SMD, 95% CI, p, significance marks.
std::string format_meta_table(const MetaReport& r);

}  // namespace rmf::io
