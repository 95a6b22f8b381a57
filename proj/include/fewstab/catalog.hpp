#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fewstab/dataset.hpp"

// Which (class, attribute) pairs are spurious correlations: an attribute is
// spurious for a class when some sample of the class carries it and some
// sample does not. Candidate-set selection for episode construction builds
// on the same membership tests.

namespace fewstab {

class SpuriousCatalog {
  public:
    static SpuriousCatalog build(const DatasetSplit& split);

    // Spurious attribute indices of one class, ascending.
    std::span<const std::uint32_t> spurious_attributes(std::uint32_t class_idx) const {
        return per_class_.at(class_idx);
    }
    // Classes with a non-empty spurious set, ascending.
    const std::vector<std::uint32_t>& usable_classes() const { return usable_; }
    std::size_t num_classes() const { return per_class_.size(); }

  private:
    std::vector<std::vector<std::uint32_t>> per_class_;
    std::vector<std::uint32_t> usable_;
};

struct Correlation {
    std::uint32_t class_idx;
    std::uint32_t attr_idx;

    bool operator==(const Correlation&) const = default;
};

// Samples of the class that lack the attribute. All candidate functions
// return sample indices in ascending sample-id order so downstream
// tie-breaking is deterministic.
std::vector<std::uint32_t> intra_candidates(const DatasetSplit& split, std::uint32_t class_idx,
                                            std::uint32_t attr_idx);

// Intra-class candidates that additionally carry other_attr (an attribute
// selected for a different class). attr_idx != other_attr_idx.
std::vector<std::uint32_t> inter_candidates(const DatasetSplit& split, std::uint32_t class_idx,
                                            std::uint32_t attr_idx, std::uint32_t other_attr_idx);

// Union over the other correlations of inter_candidates against the target
// correlation. Requires >= 2 correlations with pairwise distinct classes and
// pairwise distinct attributes.
std::vector<std::uint32_t> union_candidates(const DatasetSplit& split,
                                            std::span<const Correlation> correlations,
                                            std::size_t target_index);

}  // namespace fewstab
