#include "fewstab/catalog.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "fewstab/errors.hpp"

namespace fewstab {

SpuriousCatalog SpuriousCatalog::build(const DatasetSplit& split) {
    SpuriousCatalog catalog;
    catalog.per_class_.resize(split.classes().size());
    std::unordered_map<std::uint32_t, std::uint32_t> counts;
    for (std::uint32_t c = 0; c < split.classes().size(); ++c) {
        const auto members = split.class_sample_indices(c);
        counts.clear();
        for (std::uint32_t idx : members)
            for (std::uint32_t a : split.samples()[idx].attrs) ++counts[a];
        auto& spurious = catalog.per_class_[c];
        for (const auto& [attr, count] : counts) {
            // Carried by some sample of the class but not all of them.
            if (count < members.size()) spurious.push_back(attr);
        }
        std::sort(spurious.begin(), spurious.end());
        if (!spurious.empty()) catalog.usable_.push_back(c);
    }
    return catalog;
}

std::vector<std::uint32_t> intra_candidates(const DatasetSplit& split, std::uint32_t class_idx,
                                            std::uint32_t attr_idx) {
    if (class_idx >= split.classes().size())
        throw ValidationError("unknown class index in intra_candidates");
    std::vector<std::uint32_t> out;
    for (std::uint32_t idx : split.class_sample_indices(class_idx)) {
        if (!split.samples()[idx].has_attribute(attr_idx)) out.push_back(idx);
    }
    return out;
}

std::vector<std::uint32_t> inter_candidates(const DatasetSplit& split, std::uint32_t class_idx,
                                            std::uint32_t attr_idx, std::uint32_t other_attr_idx) {
    if (class_idx >= split.classes().size())
        throw ValidationError("unknown class index in inter_candidates");
    if (attr_idx == other_attr_idx)
        throw ValidationError("inter_candidates requires two distinct attributes");
    std::vector<std::uint32_t> out;
    for (std::uint32_t idx : split.class_sample_indices(class_idx)) {
        const auto& sample = split.samples()[idx];
        if (!sample.has_attribute(attr_idx) && sample.has_attribute(other_attr_idx))
            out.push_back(idx);
    }
    return out;
}

std::vector<std::uint32_t> union_candidates(const DatasetSplit& split,
                                            std::span<const Correlation> correlations,
                                            std::size_t target_index) {
    if (correlations.size() < 2)
        throw ValidationError("union_candidates requires at least two correlations");
    if (target_index >= correlations.size())
        throw ValidationError("union_candidates target index out of range");
    std::set<std::uint32_t> classes_seen, attrs_seen;
    for (const auto& corr : correlations) {
        if (corr.class_idx >= split.classes().size())
            throw ValidationError("unknown class index in correlations");
        if (!classes_seen.insert(corr.class_idx).second)
            throw ValidationError("correlations must have pairwise distinct classes");
        if (!attrs_seen.insert(corr.attr_idx).second)
            throw ValidationError("correlations must have pairwise distinct attributes");
    }

    // Single pass: keep samples of the target class lacking its attribute
    // but carrying at least one of the other correlations' attributes.
    const auto [target_class, target_attr] = correlations[target_index];
    std::vector<std::uint32_t> out;
    for (std::uint32_t idx : split.class_sample_indices(target_class)) {
        const auto& sample = split.samples()[idx];
        if (sample.has_attribute(target_attr)) continue;
        for (std::size_t k = 0; k < correlations.size(); ++k) {
            if (k == target_index) continue;
            if (sample.has_attribute(correlations[k].attr_idx)) {
                out.push_back(idx);
                break;
            }
        }
    }
    return out;
}

}  // namespace fewstab
