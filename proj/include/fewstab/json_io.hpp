#pragma once

#include <filesystem>
#include <string>

#include "fewstab/catalog.hpp"
#include "fewstab/dataset.hpp"
#include "fewstab/evaluate.hpp"
#include "fewstab/synthetic.hpp"
#include "fewstab/tasks.hpp"
#include "json.hpp"

// File formats. Sample/class/attribute references travel as strings; 64-bit
// seeds as decimal strings so JSON consumers with double-backed numbers
// cannot corrupt them.

namespace fewstab {

std::string to_string(TaskMode mode);
std::string to_string(SupportVariant variant);
std::string to_string(QueryVariant variant);
TaskMode task_mode_from_string(const std::string& s);
SupportVariant support_variant_from_string(const std::string& s);
QueryVariant query_variant_from_string(const std::string& s);

nlohmann::json config_to_json(const BuildConfig& config);
BuildConfig config_from_json(const nlohmann::json& obj);

// tasks-json: {"config": {...}, "failed": [...], "tasks": [...]}. Slot order
// is selection order; id arrays stay in selection order.
nlohmann::json suite_to_json(const TaskSuite& suite, const DatasetSplit& split);
TaskSuite suite_from_json(const nlohmann::json& obj, const DatasetSplit& split);
TaskSuite load_suite(const std::filesystem::path& path, const DatasetSplit& split);

nlohmann::json report_to_json(const SuiteReport& report);
SuiteReport report_from_json(const nlohmann::json& obj);
SuiteReport load_report(const std::filesystem::path& path);

// catalog-json: {"<class>": ["<attr>", ...], ...}, everything ascending.
nlohmann::json catalog_to_json(const SpuriousCatalog& catalog, const DatasetSplit& split);

// rules-json: either an ordered array [{"attribute", "class"}, ...] or a
// planted-map object {"<class>": "<attribute>"} taken in ascending class
// order. Fallback policy comes from the caller.
OracleRules rules_from_json(const nlohmann::json& obj);
OracleRules load_rules(const std::filesystem::path& path);

nlohmann::json planted_map_to_json(const std::map<std::string, std::string>& planted);

SynthConfig synth_config_from_json(const nlohmann::json& obj);
SynthConfig load_synth_config(const std::filesystem::path& path);

// Seed helpers: accept a JSON integer or decimal string; emit a string.
std::uint64_t seed_from_json(const nlohmann::json& value);
std::uint64_t parse_seed(const std::string& text);

}  // namespace fewstab
