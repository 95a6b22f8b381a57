#include "fewstab/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "fewstab/errors.hpp"
#include "fewstab/rng.hpp"
#include "json.hpp"

namespace fewstab {

std::string metric_label(const SuiteReport& report) {
    return report.mode == "random" ? "wAcc-R" : "wAcc-A";
}

std::unordered_map<std::string, std::string> prototype_classify(const TaskSpec& task,
                                                                const DatasetSplit& split) {
    if (!split.embedding_dim())
        throw ValidationError("prototype classifier requires embeddings on the split");
    const std::size_t dim = *split.embedding_dim();

    std::vector<std::vector<double>> prototypes;
    prototypes.reserve(task.slots.size());
    for (const auto& slot : task.slots) {
        if (slot.support.empty())
            throw ValidationError("task " + std::to_string(task.index) +
                                  " has a slot without support samples");
        std::vector<double> proto(dim, 0.0);
        for (std::uint32_t idx : slot.support) {
            const auto& emb = split.samples()[idx].embedding;
            for (std::size_t d = 0; d < dim; ++d) proto[d] += emb[d];
        }
        for (double& v : proto) v /= static_cast<double>(slot.support.size());
        prototypes.push_back(std::move(proto));
    }

    std::unordered_map<std::string, std::string> out;
    for (const auto& slot : task.slots) {
        for (std::uint32_t idx : slot.query) {
            const auto& emb = split.samples()[idx].embedding;
            std::size_t best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < prototypes.size(); ++k) {
                double dist = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double diff = emb[d] - prototypes[k][d];
                    dist += diff * diff;
                }
                if (dist < best_dist) {  // ties keep the lowest slot index
                    best_dist = dist;
                    best = k;
                }
            }
            out.emplace(split.samples()[idx].id, split.class_name(task.slots[best].class_idx));
        }
    }
    return out;
}

std::unordered_map<std::string, std::string> oracle_classify(const TaskSpec& task,
                                                             const OracleRules& rules,
                                                             const DatasetSplit& split) {
    // Resolve rules against this split once; rules whose attribute never
    // occurs can never fire.
    struct Resolved {
        std::uint32_t attr;
        std::uint32_t cls;
    };
    std::vector<Resolved> resolved;
    std::set<std::string> rule_attrs;
    for (const auto& rule : rules.rules) {
        if (!rule_attrs.insert(rule.attribute).second)
            throw ValidationError("oracle rules must have distinct attributes ('" +
                                  rule.attribute + "' repeats)");
        const auto cls = split.class_index(rule.class_id);
        if (!cls) continue;  // class absent from the split: rule can never match a slot
        resolved.push_back({split.attribute_or_none(rule.attribute), *cls});
    }

    std::vector<std::uint32_t> slot_classes;
    for (const auto& slot : task.slots) slot_classes.push_back(slot.class_idx);

    rng::Xoshiro256ss fallback_gen(
        rng::derive_task_seed(rules.fallback_seed, static_cast<std::uint64_t>(task.index)));

    std::unordered_map<std::string, std::string> out;
    for (const auto& slot : task.slots) {
        for (std::uint32_t idx : slot.query) {
            const auto& sample = split.samples()[idx];
            const std::uint32_t* hit = nullptr;
            for (const auto& rule : resolved) {
                if (!sample.has_attribute(rule.attr)) continue;
                if (std::find(slot_classes.begin(), slot_classes.end(), rule.cls) ==
                    slot_classes.end())
                    continue;
                hit = &rule.cls;
                break;
            }
            std::uint32_t predicted;
            if (hit) {
                predicted = *hit;
            } else if (rules.fallback == OracleFallback::FixedFirstSlot) {
                predicted = slot_classes.front();
            } else {
                predicted = slot_classes[fallback_gen.below(slot_classes.size())];
            }
            out.emplace(sample.id, split.class_name(predicted));
        }
    }
    return out;
}

PredictionSet classify_suite_prototype(const TaskSuite& suite, const DatasetSplit& split) {
    PredictionSet preds;
    for (const auto& task : suite.tasks)
        preds.by_task.emplace(task.index, prototype_classify(task, split));
    return preds;
}

PredictionSet classify_suite_oracle(const TaskSuite& suite, const OracleRules& rules,
                                    const DatasetSplit& split) {
    PredictionSet preds;
    for (const auto& task : suite.tasks)
        preds.by_task.emplace(task.index, oracle_classify(task, rules, split));
    return preds;
}

PredictionSet classify_suite_task_oracle(const TaskSuite& suite, const DatasetSplit& split,
                                         OracleFallback fallback, std::uint64_t fallback_seed) {
    PredictionSet preds;
    for (const auto& task : suite.tasks) {
        OracleRules rules;
        rules.fallback = fallback;
        rules.fallback_seed = fallback_seed;
        for (const auto& slot : task.slots) {
            if (!slot.attribute)
                throw ValidationError("task-rules oracle needs a fewstab suite (task " +
                                      std::to_string(task.index) + " has no attributes)");
            rules.rules.push_back(
                {split.attribute_name(*slot.attribute), split.class_name(slot.class_idx)});
        }
        preds.by_task.emplace(task.index, oracle_classify(task, rules, split));
    }
    return preds;
}

namespace {

struct MeanCi {
    double mean = 0.0;
    double ci95 = 0.0;
};

MeanCi mean_ci95(const std::vector<double>& values) {
    MeanCi out;
    if (values.empty()) return out;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
               static_cast<double>(values.size());
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    out.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(values.size()));
    return out;
}

}  // namespace

SuiteReport score_suite(const TaskSuite& suite, const DatasetSplit& split,
                        const PredictionSet& predictions) {
    SuiteReport report;
    report.mode = suite.config.mode == TaskMode::fewstab ? "fewstab" : "random";
    report.n_tasks = static_cast<int>(suite.tasks.size());

    std::vector<double> accs, waccs;
    for (const auto& task : suite.tasks) {
        auto it = predictions.by_task.find(task.index);
        if (it == predictions.by_task.end()) {
            std::ostringstream msg;
            msg << "no predictions for task " << task.index;
            throw ValidationError(msg.str());
        }
        const auto& preds = it->second;

        std::size_t n_queries = 0;
        std::set<std::string> slot_names;
        for (const auto& slot : task.slots) {
            if (slot.query.empty())
                throw ValidationError("task " + std::to_string(task.index) +
                                      " has a slot without query samples");
            n_queries += slot.query.size();
            slot_names.insert(split.class_name(slot.class_idx));
        }
        if (preds.size() != n_queries) {
            // Identify offenders for the error message.
            std::set<std::string> expected;
            for (const auto& slot : task.slots)
                for (std::uint32_t idx : slot.query) expected.insert(split.samples()[idx].id);
            std::ostringstream msg;
            msg << "task " << task.index << ": predictions cover " << preds.size() << " of "
                << n_queries << " query samples;";
            std::size_t shown = 0;
            for (const auto& id : expected) {
                if (!preds.contains(id) && shown < 8) {
                    msg << " missing " << id;
                    ++shown;
                }
            }
            for (const auto& [id, cls] : preds) {
                if (!expected.contains(id) && shown < 8) {
                    msg << " unexpected " << id;
                    ++shown;
                }
            }
            throw ValidationError(msg.str());
        }

        TaskResult result;
        result.index = task.index;
        for (const auto& slot : task.slots) {
            const std::string truth = split.class_name(slot.class_idx);
            std::size_t correct = 0;
            for (std::uint32_t idx : slot.query) {
                const auto& id = split.samples()[idx].id;
                auto pit = preds.find(id);
                if (pit == preds.end())
                    throw ValidationError("task " + std::to_string(task.index) +
                                          ": missing prediction for query '" + id + "'");
                if (!slot_names.contains(pit->second))
                    throw ValidationError("task " + std::to_string(task.index) +
                                          ": predicted class '" + pit->second +
                                          "' is not one of the task's classes");
                if (pit->second == truth) ++correct;
            }
            result.per_class.push_back(static_cast<double>(correct) /
                                       static_cast<double>(slot.query.size()));
        }
        result.acc = std::accumulate(result.per_class.begin(), result.per_class.end(), 0.0) /
                     static_cast<double>(result.per_class.size());
        result.wacc = *std::min_element(result.per_class.begin(), result.per_class.end());
        accs.push_back(result.acc);
        waccs.push_back(result.wacc);
        report.per_task.push_back(std::move(result));
    }

    const auto acc = mean_ci95(accs);
    const auto wacc = mean_ci95(waccs);
    report.acc_mean = acc.mean;
    report.acc_ci95 = acc.ci95;
    report.wacc_mean = wacc.mean;
    report.wacc_ci95 = wacc.ci95;
    return report;
}

double accuracy_gap(const SuiteReport& report_random, const SuiteReport& report_fewstab) {
    return report_random.wacc_mean - report_fewstab.wacc_mean;
}

namespace {

// Average ranks, 1-based, ties averaged.
std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ValidationError("spearman_rho: length mismatch");
    if (xs.size() < 2) throw ValidationError("spearman_rho: need at least two points");
    const bool x_const = std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; });
    const bool y_const = std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; });
    if (x_const || y_const)
        throw ValidationError("spearman_rho: undefined for a constant input");

    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    const double mean = (n + 1.0) / 2.0;  // mean rank on both sides
    double cov = 0.0, varx = 0.0, vary = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        cov += dx * dy;
        varx += dx * dx;
        vary += dy * dy;
    }
    return cov / std::sqrt(varx * vary);
}

PredictionSet parse_predictions_jsonl(std::istream& in, const std::string& source_name) {
    PredictionSet preds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto obj = nlohmann::json::parse(line);
            const int task = obj.at("task").get<int>();
            const auto id = obj.at("id").get<std::string>();
            const auto pred = obj.at("pred").get<std::string>();
            if (!preds.by_task[task].emplace(id, pred).second) {
                std::ostringstream msg;
                msg << source_name << ":" << line_no << ": duplicate prediction for task " << task
                    << " id '" << id << "'";
                throw ValidationError(msg.str());
            }
        } catch (const nlohmann::json::exception& e) {
            std::ostringstream msg;
            msg << source_name << ":" << line_no << ": " << e.what();
            throw ValidationError(msg.str());
        }
    }
    return preds;
}

PredictionSet load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open predictions file '" + path.string() + "'");
    return parse_predictions_jsonl(in, path.string());
}

void write_predictions_jsonl(const PredictionSet& predictions, std::ostream& out) {
    for (const auto& [task, preds] : predictions.by_task) {
        std::vector<std::pair<std::string, std::string>> rows(preds.begin(), preds.end());
        std::sort(rows.begin(), rows.end());
        for (const auto& [id, pred] : rows) {
            nlohmann::json obj;
            obj["task"] = task;
            obj["id"] = id;
            obj["pred"] = pred;
            out << obj.dump() << '\n';
        }
    }
}

}  // namespace fewstab
