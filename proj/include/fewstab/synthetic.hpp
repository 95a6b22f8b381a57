#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "fewstab/dataset.hpp"

// Synthetic attribute-annotated splits with planted spurious correlations
// and (optionally) linearly separable embeddings. Ground truth for the
// acceptance suite: the planted map says exactly which attribute each class
// is biased toward.

namespace fewstab {

struct SynthConfig {
    int num_classes = 0;
    int samples_per_class = 0;
    // Fraction of a class's samples carrying its planted attribute. The
    // carrier count is exact (ceil(rate * samples_per_class)), not Bernoulli,
    // so acceptance thresholds are deterministic.
    double planted_rate = 0.0;
    int background_pool_size = 0;
    double background_rate = 0.0;  // per background attribute, per sample
    // Cross-class contamination: per sample and per *other* class,
    // independent probability of carrying that class's planted attribute.
    // Keeps the inter-class candidate pools populated.
    double cross_rate = 0.0;
    int embedding_dim = 0;  // 0 disables embeddings; otherwise >= num_classes
    double class_separation = 1.0;  // exact pairwise centroid distance
    double within_class_noise = 0.0;
    std::uint64_t seed = 0;
};

struct SyntheticSplit {
    DatasetSplit split;
    std::map<std::string, std::string> planted;  // class id -> planted attribute
};

// Deterministic in config.seed. Post-checks that every planted attribute
// satisfies the spurious-correlation conditions for its class.
SyntheticSplit generate_split(const SynthConfig& config);

}  // namespace fewstab
