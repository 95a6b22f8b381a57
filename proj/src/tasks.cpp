#include "fewstab/tasks.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "fewstab/errors.hpp"

namespace fewstab {

namespace {

// Internal restart signal; never escapes build_task / build_random_task.
struct Retry {};

std::vector<std::uint32_t> sorted_copy(std::span<const std::uint32_t> values) {
    std::vector<std::uint32_t> out(values.begin(), values.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::uint32_t> minus_sorted(const std::vector<std::uint32_t>& pool,
                                        const std::vector<std::uint32_t>& exclude) {
    if (exclude.empty()) return pool;
    std::vector<std::uint32_t> out;
    out.reserve(pool.size());
    std::set_difference(pool.begin(), pool.end(), exclude.begin(), exclude.end(),
                        std::back_inserter(out));
    return out;
}

std::optional<std::vector<Correlation>> try_select(const SpuriousCatalog& catalog, int ways,
                                                   rng::Xoshiro256ss& gen) {
    const auto classes =
        rng::sample_without_replacement(catalog.usable_classes(), static_cast<std::size_t>(ways), gen);
    std::vector<Correlation> out;
    out.reserve(classes.size());
    std::vector<std::uint32_t> used;
    std::vector<std::uint32_t> pool;
    for (std::uint32_t c : classes) {
        pool.clear();
        for (std::uint32_t a : catalog.spurious_attributes(c)) {
            if (std::find(used.begin(), used.end(), a) == used.end()) pool.push_back(a);
        }
        if (pool.empty()) return std::nullopt;  // distinctness exhausted this class
        const std::uint32_t attr = pool[gen.below(pool.size())];
        used.push_back(attr);
        out.push_back({c, attr});
    }
    return out;
}

}  // namespace

void validate_config(const BuildConfig& config) {
    if (config.ways < 2) throw ValidationError("ways must be >= 2");
    if (config.shots < 1) throw ValidationError("shots must be >= 1");
    if (config.queries < 1) throw ValidationError("queries must be >= 1");
    if (config.num_tasks < 1) throw ValidationError("num_tasks must be >= 1");
    if (config.max_restarts < 1) throw ValidationError("max_restarts must be >= 1");
}

std::vector<Correlation> select_correlations(const SpuriousCatalog& catalog, int ways,
                                             rng::Xoshiro256ss& gen, int max_restarts) {
    if (ways < 2) throw ValidationError("ways must be >= 2");
    if (catalog.usable_classes().size() < static_cast<std::size_t>(ways)) {
        std::ostringstream msg;
        msg << "only " << catalog.usable_classes().size()
            << " classes have spurious attributes, need " << ways;
        throw ConstructionError(msg.str());
    }
    for (int attempt = 0; attempt <= max_restarts; ++attempt) {
        if (auto picked = try_select(catalog, ways, gen)) return std::move(*picked);
    }
    std::ostringstream msg;
    msg << "correlation selection infeasible after " << max_restarts << " restarts";
    throw ConstructionError(msg.str());
}

std::vector<std::vector<std::uint32_t>> build_support(const DatasetSplit& split,
                                                      std::span<const Correlation> correlations,
                                                      int shots, SupportVariant variant,
                                                      rng::Xoshiro256ss& gen) {
    std::vector<std::vector<std::uint32_t>> out;
    out.reserve(correlations.size());
    std::vector<std::uint32_t> pool;
    for (std::size_t slot = 0; slot < correlations.size(); ++slot) {
        const auto [cls, attr] = correlations[slot];
        pool.clear();
        for (std::uint32_t idx : split.class_sample_indices(cls)) {
            const auto& sample = split.samples()[idx];
            if (variant != SupportVariant::SC1 && !sample.has_attribute(attr)) continue;
            if (variant == SupportVariant::SC3) {
                bool clash = false;
                for (std::size_t k = 0; k < correlations.size() && !clash; ++k)
                    if (k != slot && sample.has_attribute(correlations[k].attr_idx)) clash = true;
                if (clash) continue;
            }
            pool.push_back(idx);
        }
        if (pool.size() < static_cast<std::size_t>(shots)) {
            std::ostringstream msg;
            msg << "insufficient support pool (" << pool.size() << " < " << shots
                << ") for class '" << split.class_name(cls) << "'";
            throw ConstructionError(msg.str());
        }
        out.push_back(rng::sample_without_replacement(pool, static_cast<std::size_t>(shots), gen));
    }
    return out;
}

std::uint32_t Prevalence::count_of(std::uint32_t attr) const {
    auto it = std::lower_bound(counts.begin(), counts.end(), attr,
                               [](const auto& entry, std::uint32_t key) { return entry.first < key; });
    if (it == counts.end() || it->first != attr) return 0;
    return it->second;
}

double Prevalence::value(std::uint32_t attr) const {
    if (denom == 0) return 0.0;
    return static_cast<double>(count_of(attr)) / static_cast<double>(denom);
}

Prevalence attribute_prevalence(const DatasetSplit& split,
                                std::span<const std::uint32_t> candidates,
                                std::span<const std::uint32_t> selected_attrs) {
    if (candidates.empty()) throw ValidationError("attribute_prevalence: empty candidate set");
    const auto selected = sorted_copy(selected_attrs);
    std::unordered_map<std::uint32_t, std::uint32_t> tally;
    for (std::uint32_t idx : candidates) {
        for (std::uint32_t a : split.samples()[idx].attrs) {
            if (std::binary_search(selected.begin(), selected.end(), a)) continue;
            ++tally[a];
        }
    }
    Prevalence prev;
    prev.denom = static_cast<std::uint32_t>(candidates.size());
    prev.counts.assign(tally.begin(), tally.end());
    std::sort(prev.counts.begin(), prev.counts.end());
    return prev;
}

std::uint64_t likelihood_numerator(const DatasetSplit::Sample& sample,
                                   const Prevalence& prevalence) {
    // Two-pointer merge: sample.attrs and prevalence.counts are both sorted.
    std::uint64_t numer = 0;
    auto it = prevalence.counts.begin();
    for (std::uint32_t a : sample.attrs) {
        while (it != prevalence.counts.end() && it->first < a) ++it;
        if (it == prevalence.counts.end()) break;
        if (it->first == a) numer += it->second;
    }
    return numer;
}

double likelihood_score(const DatasetSplit::Sample& sample, const Prevalence& prevalence) {
    if (prevalence.denom == 0) return 0.0;
    return static_cast<double>(likelihood_numerator(sample, prevalence)) /
           static_cast<double>(prevalence.denom);
}

namespace {

// Candidates ordered by ascending likelihood numerator, ties by ascending
// sample id. `pool` is already in ascending sample-id order, so a stable
// sort on the numerator alone preserves the tie rule.
std::vector<std::uint32_t> order_by_score(const DatasetSplit& split,
                                          const std::vector<std::uint32_t>& pool,
                                          const Prevalence& prevalence) {
    std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed;
    keyed.reserve(pool.size());
    for (std::uint32_t idx : pool)
        keyed.emplace_back(likelihood_numerator(split.samples()[idx], prevalence), idx);
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::uint32_t> out;
    out.reserve(keyed.size());
    for (const auto& [numer, idx] : keyed) out.push_back(idx);
    return out;
}

}  // namespace

QueryDraw build_query(const DatasetSplit& split, std::span<const Correlation> correlations,
                      std::size_t slot_index, int queries, QueryVariant variant,
                      rng::Xoshiro256ss& gen, std::span<const std::uint32_t> exclude) {
    const auto [cls, attr] = correlations[slot_index];
    const auto excluded = sorted_copy(exclude);
    const std::size_t want = static_cast<std::size_t>(queries);

    const auto intra = minus_sorted(intra_candidates(split, cls, attr), excluded);
    if (intra.size() < want) {
        std::ostringstream msg;
        msg << "insufficient query pool (" << intra.size() << " < " << queries << ") for class '"
            << split.class_name(cls) << "'";
        throw ConstructionError(msg.str());
    }

    if (variant == QueryVariant::QC1) {
        // Intra-class pool only; never restricted to the inter-class pool.
        return {rng::sample_without_replacement(intra, want, gen), true};
    }

    const auto inter = minus_sorted(union_candidates(split, correlations, slot_index), excluded);
    std::vector<std::uint32_t> selected;
    selected.reserve(correlations.size());
    for (const auto& corr : correlations) selected.push_back(corr.attr_idx);

    if (inter.size() >= want) {
        if (variant == QueryVariant::QC2)
            return {rng::sample_without_replacement(inter, want, gen), false};
        const auto prevalence = attribute_prevalence(split, inter, selected);
        auto ordered = order_by_score(split, inter, prevalence);
        ordered.resize(want);
        return {std::move(ordered), false};
    }

    // Intra-class fallback: every inter-class candidate is kept, the rest is
    // filled from the remaining intra-class pool.
    auto fill_pool = minus_sorted(intra, inter);
    const std::size_t need = want - inter.size();
    QueryDraw draw;
    draw.fallback = true;
    if (variant == QueryVariant::QC2) {
        draw.ids = inter;
        auto fill = rng::sample_without_replacement(fill_pool, need, gen);
        draw.ids.insert(draw.ids.end(), fill.begin(), fill.end());
        return draw;
    }
    // QC3: prevalence over the active (intra-class) pool.
    const auto prevalence = attribute_prevalence(split, intra, selected);
    draw.ids = order_by_score(split, inter, prevalence);
    auto fill = order_by_score(split, fill_pool, prevalence);
    fill.resize(need);
    draw.ids.insert(draw.ids.end(), fill.begin(), fill.end());
    return draw;
}

TaskSpec build_task(const DatasetSplit& split, const SpuriousCatalog& catalog,
                    const BuildConfig& config, int task_index) {
    validate_config(config);
    if (catalog.usable_classes().size() < static_cast<std::size_t>(config.ways)) {
        std::ostringstream msg;
        msg << "task " << task_index << ": only " << catalog.usable_classes().size()
            << " classes have spurious attributes, need " << config.ways;
        throw ConstructionError(msg.str());
    }

    TaskSpec task;
    task.index = task_index;
    task.seed = rng::derive_task_seed(config.master_seed, static_cast<std::uint64_t>(task_index));
    rng::Xoshiro256ss gen(task.seed);

    for (int restarts = 0; restarts <= config.max_restarts; ++restarts) {
        try {
            auto correlations = try_select(catalog, config.ways, gen);
            if (!correlations) throw Retry{};

            const auto supports =
                build_support(split, *correlations, config.shots, config.support_variant, gen);

            task.slots.clear();
            for (std::size_t slot = 0; slot < correlations->size(); ++slot) {
                auto draw = build_query(split, *correlations, slot, config.queries,
                                        config.query_variant, gen, supports[slot]);
                TaskSlot out;
                out.class_idx = (*correlations)[slot].class_idx;
                out.attribute = (*correlations)[slot].attr_idx;
                out.support = supports[slot];
                out.query = std::move(draw.ids);
                out.fallback = draw.fallback;
                task.slots.push_back(std::move(out));
            }
            task.restarts = restarts;
            return task;
        } catch (const Retry&) {
        } catch (const ConstructionError&) {
        }
    }
    std::ostringstream msg;
    msg << "task " << task_index << ": construction failed after " << config.max_restarts
        << " restarts";
    throw ConstructionError(msg.str());
}

TaskSpec build_random_task(const DatasetSplit& split, const BuildConfig& config, int task_index) {
    validate_config(config);
    if (split.classes().size() < static_cast<std::size_t>(config.ways)) {
        std::ostringstream msg;
        msg << "task " << task_index << ": split has " << split.classes().size()
            << " classes, need " << config.ways;
        throw ConstructionError(msg.str());
    }

    TaskSpec task;
    task.index = task_index;
    task.seed = rng::derive_task_seed(config.master_seed, static_cast<std::uint64_t>(task_index));
    rng::Xoshiro256ss gen(task.seed);

    std::vector<std::uint32_t> all_classes(split.classes().size());
    for (std::uint32_t c = 0; c < all_classes.size(); ++c) all_classes[c] = c;
    const std::size_t per_class = static_cast<std::size_t>(config.shots + config.queries);

    for (int restarts = 0; restarts <= config.max_restarts; ++restarts) {
        const auto classes = rng::sample_without_replacement(
            all_classes, static_cast<std::size_t>(config.ways), gen);
        const bool enough = std::all_of(classes.begin(), classes.end(), [&](std::uint32_t c) {
            return split.class_sample_indices(c).size() >= per_class;
        });
        if (!enough) continue;

        task.slots.clear();
        for (std::uint32_t c : classes) {
            const auto members = split.class_sample_indices(c);
            auto picked = rng::sample_without_replacement(
                std::vector<std::uint32_t>(members.begin(), members.end()), per_class, gen);
            TaskSlot slot;
            slot.class_idx = c;
            slot.support.assign(picked.begin(), picked.begin() + config.shots);
            slot.query.assign(picked.begin() + config.shots, picked.end());
            task.slots.push_back(std::move(slot));
        }
        task.restarts = restarts;
        return task;
    }
    std::ostringstream msg;
    msg << "task " << task_index << ": no class subset with " << per_class
        << " samples per class after " << config.max_restarts << " restarts";
    throw ConstructionError(msg.str());
}

namespace {

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        workers.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

TaskSuite build_suite(const DatasetSplit& split, const SpuriousCatalog& catalog,
                      const BuildConfig& config, int threads) {
    validate_config(config);
    TaskSuite suite;
    suite.config = config;

    std::vector<std::optional<TaskSpec>> slots(static_cast<std::size_t>(config.num_tasks));
    std::vector<char> failed(static_cast<std::size_t>(config.num_tasks), 0);
    parallel_for(config.num_tasks, threads, [&](int i) {
        try {
            slots[static_cast<std::size_t>(i)] =
                config.mode == TaskMode::fewstab
                    ? build_task(split, catalog, config, i)
                    : build_random_task(split, config, i);
        } catch (const ConstructionError&) {
            failed[static_cast<std::size_t>(i)] = 1;
        }
    });

    for (int i = 0; i < config.num_tasks; ++i) {
        if (failed[static_cast<std::size_t>(i)]) suite.failed.push_back(i);
        else suite.tasks.push_back(std::move(*slots[static_cast<std::size_t>(i)]));
    }
    if (suite.failed.size() * 100 > static_cast<std::size_t>(config.num_tasks)) {
        std::ostringstream msg;
        msg << suite.failed.size() << " of " << config.num_tasks
            << " tasks failed to construct (> 1% threshold)";
        throw ConstructionError(msg.str());
    }
    return suite;
}

}  // namespace fewstab
