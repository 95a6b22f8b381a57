#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fewstab/captions.hpp"
#include "fewstab/catalog.hpp"
#include "fewstab/dataset.hpp"
#include "fewstab/errors.hpp"
#include "fewstab/evaluate.hpp"
#include "fewstab/json_io.hpp"
#include "fewstab/synthetic.hpp"
#include "fewstab/tasks.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Logger {
    bool quiet = false;
    bool json_logs = false;

    void info(const std::string& message) const {
        if (quiet) return;
        if (json_logs) {
            json obj;
            obj["level"] = "info";
            obj["msg"] = message;
            std::cerr << obj.dump() << '\n';
        } else {
            std::cerr << "[fewstab] " << message << '\n';
        }
    }
};

std::uint64_t fnv1a64(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw fewstab::ValidationError("cannot open input file '" + path.string() + "'");
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buffer[1 << 15];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return hash;
}

std::string utc_timestamp() {
    std::time_t now;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    } else {
        now = std::time(nullptr);
    }
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Sits beside each output file as <output>.manifest.json.
void write_manifest(const fs::path& output, const std::string& command, const json& config,
                    const std::vector<fs::path>& inputs) {
    json manifest;
    manifest["command"] = command;
    manifest["config"] = config;
    manifest["tool_version"] = kVersion;
    manifest["timestamp"] = utc_timestamp();
    json digests = json::object();
    for (const auto& input : inputs) {
        char hex[17];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(input)));
        digests[input.string()] = std::string("fnv1a64:") + hex;
    }
    manifest["inputs"] = digests;
    const fs::path path = output.string() + ".manifest.json";
    std::ofstream out(path);
    if (!out) throw fewstab::ValidationError("cannot write manifest '" + path.string() + "'");
    out << manifest.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fewstab::ValidationError("cannot write output file '" + path.string() + "'");
    out << text;
}

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
    return buf;
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("FEWSTAB_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    return 0;  // library default: hardware concurrency
}

struct ReportRow {
    std::optional<fewstab::SuiteReport> random_side;
    std::optional<fewstab::SuiteReport> fewstab_side;
};

void render_report_table(const std::map<std::string, ReportRow>& rows, const std::string& format,
                         std::ostream& out) {
    std::vector<std::pair<double, double>> pairs;  // (wAcc-A, wAcc-R)
    for (const auto& [label, row] : rows)
        if (row.random_side && row.fewstab_side)
            pairs.emplace_back(row.fewstab_side->wacc_mean, row.random_side->wacc_mean);

    std::optional<double> rho;
    if (pairs.size() >= 2) {
        std::vector<double> wacc_a, wacc_r;
        for (const auto& [a, r] : pairs) {
            wacc_a.push_back(a);
            wacc_r.push_back(r);
        }
        try {
            rho = fewstab::spearman_rho(wacc_a, wacc_r);
        } catch (const fewstab::ValidationError&) {
            // constant column: correlation undefined, omit the row
        }
    }

    const bool csv = format == "csv";
    if (csv) {
        out << "method,wacc_r,wacc_r_ci95,wacc_a,wacc_a_ci95,gap\n";
    } else {
        out << "| Method | wAcc-R | wAcc-A | Gap |\n";
        out << "|---|---|---|---|\n";
    }
    for (const auto& [label, row] : rows) {
        std::string gap;
        if (row.random_side && row.fewstab_side)
            gap = percent(fewstab::accuracy_gap(*row.random_side, *row.fewstab_side));
        if (csv) {
            const auto cells = [&](const std::optional<fewstab::SuiteReport>& side) {
                return side ? percent(side->wacc_mean) + "," + percent(side->wacc_ci95)
                            : std::string(",");
            };
            out << label << "," << cells(row.random_side) << "," << cells(row.fewstab_side) << ","
                << gap << "\n";
        } else {
            const auto cell = [&](const std::optional<fewstab::SuiteReport>& side) {
                return side ? percent(side->wacc_mean) + " ± " + percent(side->wacc_ci95)
                            : std::string();
            };
            out << "| " << label << " | " << cell(row.random_side) << " | "
                << cell(row.fewstab_side) << " | " << gap << " |\n";
        }
    }
    if (rho) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", *rho);
        if (csv) out << "spearman,,,,," << buf << "\n";
        else out << "| Spearman(wAcc-A, wAcc-R) |  |  | " << buf << " |\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FewSTAB episode construction and spurious-bias evaluation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Logger log;
    int threads_flag = 0;
    app.add_flag("--quiet", log.quiet, "Suppress progress logging");
    app.add_flag("--json-logs", log.json_logs, "Emit log lines as JSON objects");
    app.add_option("--threads", threads_flag,
                   "Worker thread cap (default: FEWSTAB_THREADS or all cores)");

    // ingest
    std::string in_captions, in_labels, in_lexicon, ingest_out;
    bool strip_plural = false;
    auto* ingest = app.add_subcommand("ingest", "Captions + labels + lexicon -> attribute-jsonl");
    ingest->add_option("--captions", in_captions)->required();
    ingest->add_option("--labels", in_labels)->required();
    ingest->add_option("--lexicon", in_lexicon)->required();
    ingest->add_option("--out", ingest_out)->required();
    ingest->add_flag("--strip-plural-s", strip_plural,
                     "Match tokens with a trailing 's' against their stem");
    ingest->callback([&] {
        const auto captions = fewstab::load_captions(in_captions);
        if (captions.empty())
            throw fewstab::ValidationError("captions file is empty: refusing to build a split");
        const auto labels = fewstab::load_labels(in_labels);
        const auto lexicon = fewstab::Lexicon::load_tsv(in_lexicon);
        fewstab::ExtractOptions options;
        options.strip_plural_s = strip_plural;
        const auto split = fewstab::annotate_split(captions, labels, lexicon, options);
        std::ostringstream body;
        fewstab::write_split_jsonl(split, body);
        write_text(ingest_out, body.str());
        json config;
        config["captions"] = in_captions;
        config["labels"] = in_labels;
        config["lexicon"] = in_lexicon;
        config["strip_plural_s"] = strip_plural;
        write_manifest(ingest_out, "ingest", config, {in_captions, in_labels, in_lexicon});
        const auto stats = fewstab::split_stats(split);
        std::ostringstream msg;
        msg << "ingested " << split.size() << " samples, " << split.classes().size()
            << " classes, " << stats.unique_attribute_count << " attributes -> " << ingest_out;
        log.info(msg.str());
    });

    // build
    std::string build_dataset, build_out, build_mode = "fewstab", build_seed = "0";
    std::string build_sc = "SC3", build_qc = "QC3", catalog_out;
    fewstab::BuildConfig build_cfg;
    auto* build = app.add_subcommand("build", "Construct an episode suite (tasks-json)");
    build->add_option("--dataset", build_dataset)->required();
    build->add_option("--mode", build_mode)->check(CLI::IsMember({"fewstab", "random"}));
    build->add_option("--ways", build_cfg.ways);
    build->add_option("--shots", build_cfg.shots);
    build->add_option("--queries", build_cfg.queries);
    build->add_option("--num-tasks", build_cfg.num_tasks);
    build->add_option("--seed", build_seed, "Master seed (decimal, 64-bit)");
    build->add_option("--support-variant", build_sc)->check(CLI::IsMember({"SC1", "SC2", "SC3"}));
    build->add_option("--query-variant", build_qc)->check(CLI::IsMember({"QC1", "QC2", "QC3"}));
    build->add_option("--max-restarts", build_cfg.max_restarts);
    build->add_option("--catalog-out", catalog_out, "Also export the spurious catalog");
    build->add_option("--out", build_out)->required();
    build->callback([&] {
        build_cfg.mode = fewstab::task_mode_from_string(build_mode);
        build_cfg.master_seed = fewstab::parse_seed(build_seed);
        build_cfg.support_variant = fewstab::support_variant_from_string(build_sc);
        build_cfg.query_variant = fewstab::query_variant_from_string(build_qc);
        const auto split = fewstab::load_split(build_dataset);
        const auto catalog = fewstab::SpuriousCatalog::build(split);
        // Statically infeasible configurations are rejected up front (exit 2)
        // rather than surfacing as per-task construction failures.
        if (build_cfg.mode == fewstab::TaskMode::fewstab &&
            catalog.usable_classes().size() < static_cast<std::size_t>(build_cfg.ways)) {
            std::ostringstream msg;
            msg << "--ways " << build_cfg.ways << " exceeds the " << catalog.usable_classes().size()
                << " classes with spurious attributes";
            throw fewstab::ValidationError(msg.str());
        }
        if (split.classes().size() < static_cast<std::size_t>(build_cfg.ways)) {
            std::ostringstream msg;
            msg << "--ways " << build_cfg.ways << " exceeds the " << split.classes().size()
                << " classes in the split";
            throw fewstab::ValidationError(msg.str());
        }
        const auto start = std::chrono::steady_clock::now();
        const auto suite =
            fewstab::build_suite(split, catalog, build_cfg, resolve_threads(threads_flag));
        const auto elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
        write_text(build_out, fewstab::suite_to_json(suite, split).dump() + "\n");
        write_manifest(build_out, "build", fewstab::config_to_json(build_cfg), {build_dataset});
        if (!catalog_out.empty()) {
            write_text(catalog_out, fewstab::catalog_to_json(catalog, split).dump(2) + "\n");
            write_manifest(catalog_out, "build", fewstab::config_to_json(build_cfg),
                           {build_dataset});
        }
        std::ostringstream msg;
        msg << "built " << suite.tasks.size() << " tasks (" << suite.failed.size()
            << " failed) in " << elapsed.count() << " s -> " << build_out;
        log.info(msg.str());
    });

    // evaluate
    std::string eval_tasks, eval_dataset, eval_out, eval_label, eval_preds_out;
    std::string eval_classifier = "prototype", eval_rules, eval_preds;
    std::string eval_fallback = "fixed-first";
    std::string eval_fallback_seed = "0";
    auto* evaluate = app.add_subcommand("evaluate", "Score a suite (report-json)");
    evaluate->add_option("--tasks", eval_tasks)->required();
    evaluate->add_option("--dataset", eval_dataset)->required();
    evaluate->add_option("--classifier", eval_classifier)
        ->check(CLI::IsMember({"prototype", "oracle", "oracle-task", "external"}));
    evaluate->add_option("--rules", eval_rules, "Oracle rules file (array or planted map)");
    evaluate->add_option("--fallback", eval_fallback)
        ->check(CLI::IsMember({"fixed-first", "seeded"}));
    evaluate->add_option("--fallback-seed", eval_fallback_seed);
    evaluate->add_option("--predictions", eval_preds, "External predictions (jsonl)");
    evaluate->add_option("--predictions-out", eval_preds_out,
                         "Also dump the classifier's predictions (jsonl)");
    evaluate->add_option("--label", eval_label, "Method label for report tables");
    evaluate->add_option("--out", eval_out)->required();
    evaluate->callback([&] {
        const auto split = fewstab::load_split(eval_dataset);
        const auto suite = fewstab::load_suite(eval_tasks, split);
        const auto fallback = eval_fallback == "seeded"
                                  ? fewstab::OracleFallback::SeededUniform
                                  : fewstab::OracleFallback::FixedFirstSlot;
        fewstab::PredictionSet preds;
        if (eval_classifier == "prototype") {
            preds = fewstab::classify_suite_prototype(suite, split);
        } else if (eval_classifier == "oracle") {
            if (eval_rules.empty())
                throw fewstab::ValidationError("--classifier oracle requires --rules");
            auto rules = fewstab::load_rules(eval_rules);
            rules.fallback = fallback;
            rules.fallback_seed = fewstab::parse_seed(eval_fallback_seed);
            preds = fewstab::classify_suite_oracle(suite, rules, split);
        } else if (eval_classifier == "oracle-task") {
            preds = fewstab::classify_suite_task_oracle(suite, split, fallback,
                                                        fewstab::parse_seed(eval_fallback_seed));
        } else {
            if (eval_preds.empty())
                throw fewstab::ValidationError("--classifier external requires --predictions");
            preds = fewstab::load_predictions(eval_preds);
        }
        if (!eval_preds_out.empty()) {
            std::ostringstream body;
            fewstab::write_predictions_jsonl(preds, body);
            write_text(eval_preds_out, body.str());
        }
        auto report = fewstab::score_suite(suite, split, preds);
        report.label = eval_label;
        write_text(eval_out, fewstab::report_to_json(report).dump(2) + "\n");
        json config;
        config["tasks"] = eval_tasks;
        config["dataset"] = eval_dataset;
        config["classifier"] = eval_classifier;
        if (!eval_rules.empty()) config["rules"] = eval_rules;
        if (!eval_preds.empty()) config["predictions"] = eval_preds;
        config["label"] = eval_label;
        std::vector<fs::path> inputs{eval_tasks, eval_dataset};
        if (!eval_rules.empty()) inputs.push_back(eval_rules);
        if (!eval_preds.empty()) inputs.push_back(eval_preds);
        write_manifest(eval_out, "evaluate", config, inputs);
        std::ostringstream msg;
        msg << fewstab::metric_label(report) << " = " << percent(report.wacc_mean) << " ± "
            << percent(report.wacc_ci95) << ", Acc = " << percent(report.acc_mean) << " ± "
            << percent(report.acc_ci95) << " over " << report.n_tasks << " tasks -> " << eval_out;
        log.info(msg.str());
    });

    // report
    std::vector<std::string> report_inputs;
    std::string report_format = "md", report_out;
    auto* report_cmd = app.add_subcommand("report", "Tabulate report-json files (md or csv)");
    report_cmd->add_option("--inputs", report_inputs)->required()->expected(-1);
    report_cmd->add_option("--format", report_format)->check(CLI::IsMember({"md", "csv"}));
    report_cmd->add_option("--out", report_out, "Write the table here instead of stdout");
    report_cmd->callback([&] {
        std::map<std::string, ReportRow> rows;
        int unnamed = 0;
        for (const auto& input : report_inputs) {
            auto report = fewstab::load_report(input);
            std::string label = report.label;
            if (label.empty()) label = "report" + std::to_string(++unnamed);
            auto& row = rows[label];
            if (report.mode == "random") row.random_side = std::move(report);
            else row.fewstab_side = std::move(report);
        }
        std::ostringstream table;
        render_report_table(rows, report_format, table);
        if (report_out.empty()) {
            std::cout << table.str();
        } else {
            write_text(report_out, table.str());
            json config;
            config["inputs"] = report_inputs;
            config["format"] = report_format;
            std::vector<fs::path> inputs(report_inputs.begin(), report_inputs.end());
            write_manifest(report_out, "report", config, inputs);
        }
    });

    // stats
    std::string stats_dataset;
    auto* stats = app.add_subcommand("stats", "Attribute statistics of a split");
    stats->add_option("--dataset", stats_dataset)->required();
    stats->callback([&] {
        const auto split = fewstab::load_split(stats_dataset);
        const auto s = fewstab::split_stats(split);
        char avg[32];
        std::snprintf(avg, sizeof(avg), "%.2f", s.avg_attributes_per_class);
        std::cout << "samples=" << split.size() << " classes=" << split.classes().size()
                  << " unique_attributes=" << s.unique_attribute_count
                  << " avg_attributes_per_class=" << avg << "\n";
    });

    // agreement
    std::string agree_query, agree_ref;
    auto* agree = app.add_subcommand("agreement", "Cross-annotator detection accuracy");
    agree->add_option("--query", agree_query)->required();
    agree->add_option("--ref", agree_ref)->required();
    agree->callback([&] {
        const auto query = fewstab::load_split(agree_query);
        const auto ref = fewstab::load_split(agree_ref);
        const auto score = fewstab::agreement(query, ref);
        char value[32];
        std::snprintf(value, sizeof(value), "%.4f", score.value);
        std::cout << "agreement=" << value << " scored=" << score.images_scored
                  << " skipped=" << score.images_skipped << "\n";
    });

    // synth
    std::string synth_config_path, synth_out, planted_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic split");
    synth->add_option("--config", synth_config_path)->required();
    synth->add_option("--out", synth_out)->required();
    synth->add_option("--planted-out", planted_out, "Planted map (default: <out>.planted.json)");
    synth->callback([&] {
        const auto cfg = fewstab::load_synth_config(synth_config_path);
        const auto result = fewstab::generate_split(cfg);
        std::ostringstream body;
        fewstab::write_split_jsonl(result.split, body);
        write_text(synth_out, body.str());
        if (planted_out.empty()) planted_out = synth_out + ".planted.json";
        write_text(planted_out, fewstab::planted_map_to_json(result.planted).dump(2) + "\n");
        json config;
        config["config"] = synth_config_path;
        write_manifest(synth_out, "synth", config, {synth_config_path});
        write_manifest(planted_out, "synth", config, {synth_config_path});
        std::ostringstream msg;
        msg << "generated " << result.split.size() << " samples ("
            << result.split.vocabulary().size() << " attributes) -> " << synth_out;
        log.info(msg.str());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const fewstab::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const fewstab::ConstructionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
