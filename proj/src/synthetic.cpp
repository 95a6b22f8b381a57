#include "fewstab/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include <numeric>
#include <sstream>

#include "fewstab/catalog.hpp"
#include "fewstab/errors.hpp"
#include "fewstab/rng.hpp"

namespace fewstab {

namespace {

int digits_for(int count) {
    int width = 1;
    for (int v = count - 1; v >= 10; v /= 10) ++width;
    return width;
}

std::string padded(const char* prefix, int value, int width) {
    std::string digits = std::to_string(value);
    if (static_cast<int>(digits.size()) < width)
        digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    return prefix + digits;
}

void validate(const SynthConfig& cfg, int planted_count) {
    std::ostringstream msg;
    if (cfg.num_classes < 1) msg << "num_classes must be >= 1";
    else if (cfg.samples_per_class < 1) msg << "samples_per_class must be >= 1";
    else if (!(cfg.planted_rate > 0.0 && cfg.planted_rate < 1.0))
        msg << "planted_rate must be in (0, 1)";
    else if (planted_count < 1 || planted_count >= cfg.samples_per_class)
        msg << "planted_rate " << cfg.planted_rate << " with " << cfg.samples_per_class
            << " samples/class leaves no carrier or no non-carrier";
    else if (cfg.background_pool_size < 0) msg << "background_pool_size must be >= 0";
    else if (cfg.background_rate < 0.0 || cfg.background_rate > 1.0)
        msg << "background_rate must be in [0, 1]";
    else if (cfg.cross_rate < 0.0 || cfg.cross_rate > 1.0) msg << "cross_rate must be in [0, 1]";
    else if (cfg.embedding_dim < 0) msg << "embedding_dim must be >= 0";
    else if (cfg.embedding_dim > 0 && cfg.embedding_dim < cfg.num_classes)
        msg << "embedding_dim must be >= num_classes (centroids sit on orthogonal axes)";
    else if (cfg.embedding_dim > 0 && !(cfg.class_separation > 0.0))
        msg << "class_separation must be > 0";
    else if (cfg.within_class_noise < 0.0) msg << "within_class_noise must be >= 0";
    else return;
    throw ValidationError("synthetic config infeasible: " + msg.str());
}

// Indices in [0, n) hit by independent Bernoulli(p) draws, via geometric
// jumps so sparse rates cost O(hits) instead of O(n).
template <typename Fn>
void bernoulli_subset(int n, double p, rng::Xoshiro256ss& gen, Fn&& hit) {
    if (n <= 0 || p <= 0.0) return;
    if (p >= 1.0) {
        for (int i = 0; i < n; ++i) hit(i);
        return;
    }
    const double log1mp = std::log1p(-p);
    double pos = -1.0;
    for (;;) {
        const double u = 1.0 - gen.unit();  // in (0, 1]
        pos += 1.0 + std::floor(std::log(u) / log1mp);
        if (pos >= static_cast<double>(n)) return;
        hit(static_cast<int>(pos));
    }
}

}  // namespace

SyntheticSplit generate_split(const SynthConfig& cfg) {
    const int planted_count = static_cast<int>(
        std::ceil(cfg.planted_rate * static_cast<double>(cfg.samples_per_class)));
    validate(cfg, planted_count);

    const int class_width = digits_for(cfg.num_classes);
    const int sample_width = digits_for(cfg.samples_per_class);
    const int bg_width = digits_for(std::max(cfg.background_pool_size, 1));

    std::vector<std::string> planted_names(cfg.num_classes);
    for (int k = 0; k < cfg.num_classes; ++k) planted_names[k] = padded("pl_", k, class_width);
    std::vector<std::string> background_names(cfg.background_pool_size);
    for (int j = 0; j < cfg.background_pool_size; ++j)
        background_names[j] = padded("bg_", j, bg_width);

    rng::Xoshiro256ss gen(cfg.seed);
    const double axis = cfg.class_separation / std::sqrt(2.0);

    std::vector<SampleRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.num_classes) * cfg.samples_per_class);
    SyntheticSplit out;

    std::vector<int> order(cfg.samples_per_class);
    for (int k = 0; k < cfg.num_classes; ++k) {
        const std::string class_name = padded("c", k, class_width);
        out.planted.emplace(class_name, planted_names[k]);

        // Exact carrier count on a uniformly random subset of the class.
        std::iota(order.begin(), order.end(), 0);
        const auto carrier_list = rng::sample_without_replacement(
            order, static_cast<std::size_t>(planted_count), gen);
        std::vector<char> carries(cfg.samples_per_class, 0);
        for (int i : carrier_list) carries[i] = 1;

        for (int i = 0; i < cfg.samples_per_class; ++i) {
            SampleRecord rec;
            rec.id = class_name + padded("_s", i, sample_width);
            rec.class_id = class_name;
            if (carries[i]) rec.attributes.push_back(planted_names[k]);
            // Planted attributes of other classes, independently per class.
            bernoulli_subset(cfg.num_classes - 1, cfg.cross_rate, gen, [&](int j) {
                rec.attributes.push_back(planted_names[j < k ? j : j + 1]);
            });
            bernoulli_subset(cfg.background_pool_size, cfg.background_rate, gen,
                             [&](int j) { rec.attributes.push_back(background_names[j]); });
            if (cfg.embedding_dim > 0) {
                std::vector<double> emb(cfg.embedding_dim, 0.0);
                emb[k] = axis;
                if (cfg.within_class_noise > 0.0)
                    for (double& v : emb) v += cfg.within_class_noise * gen.normal();
                rec.embedding = std::move(emb);
            }
            records.push_back(std::move(rec));
        }
    }

    out.split = DatasetSplit::from_records(std::move(records));

    // Every planted attribute must be a spurious correlation of its class;
    // the exact-count construction guarantees it.
    const auto catalog = SpuriousCatalog::build(out.split);
    for (const auto& [class_name, attr_name] : out.planted) {
        const auto cls = out.split.class_index(class_name);
        const auto attr = out.split.attribute_index(attr_name);
        if (!cls || !attr) throw std::logic_error("synthetic: planted attribute missing");
        const auto spurious = catalog.spurious_attributes(*cls);
        if (!std::binary_search(spurious.begin(), spurious.end(), *attr))
            throw std::logic_error("synthetic: planted attribute failed the spurious check");
    }
    return out;
}

}  // namespace fewstab
