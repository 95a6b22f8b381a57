#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fewstab/dataset.hpp"
#include "fewstab/tasks.hpp"

// Classification of query samples and all reported metrics: per-task
// standard accuracy (mean of per-class query accuracies), class-wise worst
// accuracy (their minimum), suite means with 95% confidence intervals,
// accuracy gaps, and Spearman rank correlation.

namespace fewstab {

// Classifier outputs for a suite: per task, query sample id -> predicted
// class id. Must cover exactly the task's query ids with predictions drawn
// from its class slots.
struct PredictionSet {
    std::map<int, std::unordered_map<std::string, std::string>> by_task;
};

struct TaskResult {
    int index = 0;
    std::vector<double> per_class;  // M_c per slot, each k/N_Q
    double acc = 0.0;               // mean of per_class
    double wacc = 0.0;              // min of per_class
};

struct SuiteReport {
    std::string mode;   // "fewstab" or "random"
    std::string label;  // method/config name for table building; may be empty
    int n_tasks = 0;
    double acc_mean = 0.0;
    double acc_ci95 = 0.0;
    double wacc_mean = 0.0;
    double wacc_ci95 = 0.0;
    std::vector<TaskResult> per_task;
};

// "wAcc-A" for fewstab suites, "wAcc-R" for random ones.
std::string metric_label(const SuiteReport& report);

// Nearest class prototype under squared Euclidean distance; prototypes are
// the arithmetic means of each slot's support embeddings. Ties go to the
// lowest slot index. Requires embeddings on the split.
std::unordered_map<std::string, std::string> prototype_classify(const TaskSpec& task,
                                                                const DatasetSplit& split);

struct OracleRule {
    std::string attribute;
    std::string class_id;
};

enum class OracleFallback { FixedFirstSlot, SeededUniform };

// A deliberately biased reference classifier: predicts by scanning rules in
// order and taking the first whose attribute the query carries and whose
// class is one of the task's slots.
struct OracleRules {
    std::vector<OracleRule> rules;
    OracleFallback fallback = OracleFallback::FixedFirstSlot;
    std::uint64_t fallback_seed = 0;  // used by SeededUniform only
};

std::unordered_map<std::string, std::string> oracle_classify(const TaskSpec& task,
                                                             const OracleRules& rules,
                                                             const DatasetSplit& split);

PredictionSet classify_suite_prototype(const TaskSuite& suite, const DatasetSplit& split);
PredictionSet classify_suite_oracle(const TaskSuite& suite, const OracleRules& rules,
                                    const DatasetSplit& split);

// Oracle whose rules are each task's own (attribute -> class) slot
// assignments: the bias a learner would pick up from that task's support
// set. On biased suites every query defeats its own slot's rule, so
// fallback-free tasks score exactly zero. Requires a fewstab suite.
PredictionSet classify_suite_task_oracle(const TaskSuite& suite, const DatasetSplit& split,
                                         OracleFallback fallback = OracleFallback::FixedFirstSlot,
                                         std::uint64_t fallback_seed = 0);

// Scores every task and aggregates. ci95 = 1.96 * sample std / sqrt(n);
// zero when n < 2.
SuiteReport score_suite(const TaskSuite& suite, const DatasetSplit& split,
                        const PredictionSet& predictions);

// wAcc-R minus wAcc-A, in whatever (consistent) unit the reports carry.
double accuracy_gap(const SuiteReport& report_random, const SuiteReport& report_fewstab);

// Spearman's rank correlation: Pearson correlation of average ranks, ties
// averaged. Errors on mismatched lengths, fewer than two points, or a
// constant input (ranks undefined).
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

// predictions-jsonl: {"task": n, "id": "...", "pred": "..."} per line.
PredictionSet parse_predictions_jsonl(std::istream& in, const std::string& source_name);
PredictionSet load_predictions(const std::filesystem::path& path);
void write_predictions_jsonl(const PredictionSet& predictions, std::ostream& out);

}  // namespace fewstab
