#include "fewstab/json_io.hpp"

#include <charconv>
#include <fstream>

#include "fewstab/errors.hpp"

namespace fewstab {

std::string to_string(TaskMode mode) {
    return mode == TaskMode::fewstab ? "fewstab" : "random";
}
std::string to_string(SupportVariant variant) {
    switch (variant) {
        case SupportVariant::SC1: return "SC1";
        case SupportVariant::SC2: return "SC2";
        default: return "SC3";
    }
}
std::string to_string(QueryVariant variant) {
    switch (variant) {
        case QueryVariant::QC1: return "QC1";
        case QueryVariant::QC2: return "QC2";
        default: return "QC3";
    }
}

TaskMode task_mode_from_string(const std::string& s) {
    if (s == "fewstab") return TaskMode::fewstab;
    if (s == "random") return TaskMode::random_baseline;
    throw ValidationError("unknown mode '" + s + "' (expected fewstab or random)");
}
SupportVariant support_variant_from_string(const std::string& s) {
    if (s == "SC1") return SupportVariant::SC1;
    if (s == "SC2") return SupportVariant::SC2;
    if (s == "SC3") return SupportVariant::SC3;
    throw ValidationError("unknown support variant '" + s + "'");
}
QueryVariant query_variant_from_string(const std::string& s) {
    if (s == "QC1") return QueryVariant::QC1;
    if (s == "QC2") return QueryVariant::QC2;
    if (s == "QC3") return QueryVariant::QC3;
    throw ValidationError("unknown query variant '" + s + "'");
}

std::uint64_t parse_seed(const std::string& text) {
    std::uint64_t value = 0;
    const auto* begin = text.data();
    const auto* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ValidationError("bad seed '" + text + "': expected a decimal 64-bit integer");
    return value;
}

std::uint64_t seed_from_json(const nlohmann::json& value) {
    if (value.is_string()) return parse_seed(value.get<std::string>());
    if (value.is_number_unsigned()) return value.get<std::uint64_t>();
    if (value.is_number_integer() && value.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(value.get<std::int64_t>());
    throw ValidationError("bad seed: expected a non-negative integer or decimal string");
}

nlohmann::json config_to_json(const BuildConfig& config) {
    nlohmann::json obj;
    obj["ways"] = config.ways;
    obj["shots"] = config.shots;
    obj["queries"] = config.queries;
    obj["num_tasks"] = config.num_tasks;
    obj["master_seed"] = std::to_string(config.master_seed);
    obj["mode"] = to_string(config.mode);
    obj["support_variant"] = to_string(config.support_variant);
    obj["query_variant"] = to_string(config.query_variant);
    obj["max_restarts"] = config.max_restarts;
    return obj;
}

BuildConfig config_from_json(const nlohmann::json& obj) {
    BuildConfig config;
    try {
        config.ways = obj.at("ways").get<int>();
        config.shots = obj.at("shots").get<int>();
        config.queries = obj.at("queries").get<int>();
        config.num_tasks = obj.at("num_tasks").get<int>();
        config.master_seed = seed_from_json(obj.at("master_seed"));
        config.mode = task_mode_from_string(obj.at("mode").get<std::string>());
        config.support_variant =
            support_variant_from_string(obj.at("support_variant").get<std::string>());
        config.query_variant =
            query_variant_from_string(obj.at("query_variant").get<std::string>());
        config.max_restarts = obj.at("max_restarts").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad build config: ") + e.what());
    }
    validate_config(config);
    return config;
}

nlohmann::json suite_to_json(const TaskSuite& suite, const DatasetSplit& split) {
    nlohmann::json obj;
    obj["config"] = config_to_json(suite.config);
    obj["failed"] = suite.failed;
    auto& tasks = obj["tasks"] = nlohmann::json::array();
    for (const auto& task : suite.tasks) {
        nlohmann::json t;
        t["index"] = task.index;
        t["seed"] = std::to_string(task.seed);
        t["restarts"] = task.restarts;
        auto& slots = t["slots"] = nlohmann::json::array();
        for (const auto& slot : task.slots) {
            nlohmann::json s;
            s["class"] = split.class_name(slot.class_idx);
            if (slot.attribute) s["attribute"] = split.attribute_name(*slot.attribute);
            else s["attribute"] = nullptr;
            auto ids = [&](const std::vector<std::uint32_t>& idxs) {
                nlohmann::json arr = nlohmann::json::array();
                for (std::uint32_t idx : idxs) arr.push_back(split.samples()[idx].id);
                return arr;
            };
            s["support"] = ids(slot.support);
            s["query"] = ids(slot.query);
            s["fallback"] = slot.fallback;
            slots.push_back(std::move(s));
        }
        tasks.push_back(std::move(t));
    }
    return obj;
}

TaskSuite suite_from_json(const nlohmann::json& obj, const DatasetSplit& split) {
    TaskSuite suite;
    try {
        suite.config = config_from_json(obj.at("config"));
        if (obj.contains("failed")) suite.failed = obj.at("failed").get<std::vector<int>>();
        auto resolve_sample = [&](const nlohmann::json& id) {
            const auto name = id.get<std::string>();
            const auto idx = split.sample_index(name);
            if (!idx) throw ValidationError("task file references unknown sample '" + name + "'");
            return *idx;
        };
        for (const auto& t : obj.at("tasks")) {
            TaskSpec task;
            task.index = t.at("index").get<int>();
            task.seed = seed_from_json(t.at("seed"));
            task.restarts = t.at("restarts").get<int>();
            for (const auto& s : t.at("slots")) {
                TaskSlot slot;
                slot.class_idx = split.require_class(s.at("class").get<std::string>());
                if (!s.at("attribute").is_null()) {
                    const auto attr_name = s.at("attribute").get<std::string>();
                    const auto attr = split.attribute_index(attr_name);
                    if (!attr)
                        throw ValidationError("task file references unknown attribute '" +
                                              attr_name + "'");
                    slot.attribute = *attr;
                }
                for (const auto& id : s.at("support")) slot.support.push_back(resolve_sample(id));
                for (const auto& id : s.at("query")) slot.query.push_back(resolve_sample(id));
                slot.fallback = s.at("fallback").get<bool>();
                task.slots.push_back(std::move(slot));
            }
            suite.tasks.push_back(std::move(task));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad tasks file: ") + e.what());
    }
    return suite;
}

TaskSuite load_suite(const std::filesystem::path& path, const DatasetSplit& split) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open tasks file '" + path.string() + "'");
    nlohmann::json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return suite_from_json(obj, split);
}

nlohmann::json report_to_json(const SuiteReport& report) {
    nlohmann::json obj;
    obj["mode"] = report.mode;
    obj["label"] = report.label;
    obj["metric"] = metric_label(report);
    obj["n_tasks"] = report.n_tasks;
    obj["acc_mean"] = report.acc_mean;
    obj["acc_ci95"] = report.acc_ci95;
    obj["wacc_mean"] = report.wacc_mean;
    obj["wacc_ci95"] = report.wacc_ci95;
    auto& tasks = obj["per_task"] = nlohmann::json::array();
    for (const auto& r : report.per_task) {
        nlohmann::json t;
        t["index"] = r.index;
        t["per_class"] = r.per_class;
        t["acc"] = r.acc;
        t["wacc"] = r.wacc;
        tasks.push_back(std::move(t));
    }
    return obj;
}

SuiteReport report_from_json(const nlohmann::json& obj) {
    SuiteReport report;
    try {
        report.mode = obj.at("mode").get<std::string>();
        report.label = obj.value("label", std::string{});
        report.n_tasks = obj.at("n_tasks").get<int>();
        report.acc_mean = obj.at("acc_mean").get<double>();
        report.acc_ci95 = obj.at("acc_ci95").get<double>();
        report.wacc_mean = obj.at("wacc_mean").get<double>();
        report.wacc_ci95 = obj.at("wacc_ci95").get<double>();
        if (obj.contains("per_task")) {
            for (const auto& t : obj.at("per_task")) {
                TaskResult r;
                r.index = t.at("index").get<int>();
                r.per_class = t.at("per_class").get<std::vector<double>>();
                r.acc = t.at("acc").get<double>();
                r.wacc = t.at("wacc").get<double>();
                report.per_task.push_back(std::move(r));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad report file: ") + e.what());
    }
    return report;
}

SuiteReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open report file '" + path.string() + "'");
    nlohmann::json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return report_from_json(obj);
}

nlohmann::json catalog_to_json(const SpuriousCatalog& catalog, const DatasetSplit& split) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::uint32_t c = 0; c < catalog.num_classes(); ++c) {
        nlohmann::json arr = nlohmann::json::array();
        for (std::uint32_t a : catalog.spurious_attributes(c))
            arr.push_back(split.attribute_name(a));
        obj[split.class_name(c)] = std::move(arr);
    }
    return obj;
}

OracleRules rules_from_json(const nlohmann::json& obj) {
    OracleRules rules;
    try {
        if (obj.is_array()) {
            for (const auto& r : obj)
                rules.rules.push_back({r.at("attribute").get<std::string>(),
                                       r.at("class").get<std::string>()});
        } else if (obj.is_object()) {
            // Planted map: class -> attribute, ascending class order.
            for (const auto& [cls, attr] : obj.items())
                rules.rules.push_back({attr.get<std::string>(), cls});
        } else {
            throw ValidationError("rules file must be an array or an object");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad rules file: ") + e.what());
    }
    return rules;
}

OracleRules load_rules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open rules file '" + path.string() + "'");
    nlohmann::json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return rules_from_json(obj);
}

nlohmann::json planted_map_to_json(const std::map<std::string, std::string>& planted) {
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& [cls, attr] : planted) obj[cls] = attr;
    return obj;
}

SynthConfig synth_config_from_json(const nlohmann::json& obj) {
    SynthConfig cfg;
    try {
        cfg.num_classes = obj.at("num_classes").get<int>();
        cfg.samples_per_class = obj.at("samples_per_class").get<int>();
        cfg.planted_rate = obj.at("planted_rate").get<double>();
        cfg.background_pool_size = obj.value("background_pool_size", 0);
        cfg.background_rate = obj.value("background_rate", 0.0);
        cfg.cross_rate = obj.value("cross_rate", 0.0);
        cfg.embedding_dim = obj.value("embedding_dim", 0);
        cfg.class_separation = obj.value("class_separation", 1.0);
        cfg.within_class_noise = obj.value("within_class_noise", 0.0);
        if (obj.contains("seed")) cfg.seed = seed_from_json(obj.at("seed"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad synthetic config: ") + e.what());
    }
    return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open synthetic config '" + path.string() + "'");
    nlohmann::json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return synth_config_from_json(obj);
}

}  // namespace fewstab
