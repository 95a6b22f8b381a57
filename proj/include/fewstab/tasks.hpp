#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fewstab/catalog.hpp"
#include "fewstab/dataset.hpp"
#include "fewstab/rng.hpp"

// Episode construction. A biased (fewstab) task pairs each class with a
// spurious attribute: support samples demonstrate the correlation, query
// samples break it. A random task is the standard uniformly sampled
// baseline. Construction is a pure function of (split, config, task_index).

namespace fewstab {

enum class TaskMode { fewstab, random_baseline };

// Support construction: SC1 ignores attributes, SC2 requires the slot's own
// attribute, SC3 additionally forbids the other slots' attributes.
enum class SupportVariant { SC1 = 1, SC2 = 2, SC3 = 3 };

// Query construction: QC1 draws randomly from the intra-class pool, QC2
// randomly from the inter-class pool, QC3 takes the inter-class candidates
// with the lowest likelihood scores.
enum class QueryVariant { QC1 = 1, QC2 = 2, QC3 = 3 };

struct BuildConfig {
    int ways = 5;
    int shots = 5;
    int queries = 15;
    int num_tasks = 3000;
    std::uint64_t master_seed = 0;
    TaskMode mode = TaskMode::fewstab;
    SupportVariant support_variant = SupportVariant::SC3;
    QueryVariant query_variant = QueryVariant::QC3;
    int max_restarts = 100;
};

void validate_config(const BuildConfig& config);

struct TaskSlot {
    std::uint32_t class_idx = 0;
    std::optional<std::uint32_t> attribute;  // absent in random mode
    std::vector<std::uint32_t> support;      // sample indices, selection order
    std::vector<std::uint32_t> query;        // sample indices, selection order
    // Queries were drawn (at least partly) from beyond the inter-class
    // candidate pool: the intra-class fallback fired, or the variant (QC1)
    // never restricts to the inter-class pool.
    bool fallback = false;
};

struct TaskSpec {
    int index = 0;
    std::uint64_t seed = 0;
    int restarts = 0;
    std::vector<TaskSlot> slots;
};

// Draws `ways` distinct classes uniformly from those with spurious
// attributes, then per class a spurious attribute distinct from all
// previously drawn ones. Exhausted choices restart the whole selection, up
// to max_restarts times.
std::vector<Correlation> select_correlations(const SpuriousCatalog& catalog, int ways,
                                             rng::Xoshiro256ss& gen, int max_restarts = 100);

// Per-slot support draw. Throws ConstructionError when a slot's eligible
// pool is smaller than `shots` (callers restart the task).
std::vector<std::vector<std::uint32_t>> build_support(const DatasetSplit& split,
                                                      std::span<const Correlation> correlations,
                                                      int shots, SupportVariant variant,
                                                      rng::Xoshiro256ss& gen);

// Occurrence fractions of non-selected attributes among a candidate pool.
// Counts are kept as integers over a common denominator so likelihood
// comparisons are exact.
struct Prevalence {
    std::uint32_t denom = 0;
    // (attribute, occurrences), occurrences > 0, ascending attribute;
    // selected attributes excluded.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;

    std::uint32_t count_of(std::uint32_t attr) const;
    double value(std::uint32_t attr) const;
};

Prevalence attribute_prevalence(const DatasetSplit& split,
                                std::span<const std::uint32_t> candidates,
                                std::span<const std::uint32_t> selected_attrs);

// s(x): sum of prevalences of the sample's non-selected attributes.
double likelihood_score(const DatasetSplit::Sample& sample, const Prevalence& prevalence);
// Exact numerator of s(x) over prevalence.denom.
std::uint64_t likelihood_numerator(const DatasetSplit::Sample& sample,
                                   const Prevalence& prevalence);

struct QueryDraw {
    std::vector<std::uint32_t> ids;
    bool fallback = false;
};

// Query selection for one slot. `exclude` (ascending sample indices) removes
// the slot's own support samples from the candidate pools. Throws
// ConstructionError when even the intra-class pool is too small.
QueryDraw build_query(const DatasetSplit& split, std::span<const Correlation> correlations,
                      std::size_t slot_index, int queries, QueryVariant variant,
                      rng::Xoshiro256ss& gen, std::span<const std::uint32_t> exclude = {});

TaskSpec build_task(const DatasetSplit& split, const SpuriousCatalog& catalog,
                    const BuildConfig& config, int task_index);

TaskSpec build_random_task(const DatasetSplit& split, const BuildConfig& config, int task_index);

struct TaskSuite {
    BuildConfig config;
    std::vector<TaskSpec> tasks;  // ascending task index; failed ones omitted
    std::vector<int> failed;      // task indices that exhausted the restart budget
};

// Builds all tasks, in parallel across task indices. Output is identical for
// any worker count. threads <= 0 means hardware concurrency. Throws when
// more than 1% of tasks fail to construct.
TaskSuite build_suite(const DatasetSplit& split, const SpuriousCatalog& catalog,
                      const BuildConfig& config, int threads = 0);

}  // namespace fewstab
