#include <map>
#include <set>

#include "doctest.h"
#include "fewstab/errors.hpp"
#include "fewstab/json_io.hpp"
#include "fewstab/synthetic.hpp"
#include "fewstab/tasks.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"
#include "support/validator.hpp"

using namespace fewstab;
using namespace fewstab::test;

namespace {

// Two classes whose only spurious attributes are a and b respectively.
DatasetSplit forced_pair_split() {
    return make_split({{"s11", "c1", {"a"}},
                       {"s12", "c1", {}},
                       {"s21", "c2", {"b"}},
                       {"s22", "c2", {}}});
}

SynthConfig small_synth() {
    SynthConfig cfg;
    cfg.num_classes = 12;
    cfg.samples_per_class = 80;
    cfg.planted_rate = 0.8;
    cfg.background_pool_size = 30;
    cfg.background_rate = 0.08;
    cfg.cross_rate = 0.25;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("config defaults follow the reference evaluation protocol") {
    const BuildConfig cfg;
    CHECK(cfg.ways == 5);
    CHECK(cfg.queries == 15);
    CHECK(cfg.num_tasks == 3000);
    CHECK(cfg.max_restarts == 100);
    CHECK(cfg.mode == TaskMode::fewstab);
    CHECK(cfg.support_variant == SupportVariant::SC3);
    CHECK(cfg.query_variant == QueryVariant::QC3);

    BuildConfig bad = cfg;
    bad.ways = 1;
    CHECK_THROWS_AS(validate_config(bad), ValidationError);
    bad = cfg;
    bad.queries = 0;
    CHECK_THROWS_AS(validate_config(bad), ValidationError);
}

TEST_CASE("select_correlations with a forced catalog") {
    const auto split = forced_pair_split();
    const auto catalog = SpuriousCatalog::build(split);
    rng::Xoshiro256ss gen(1);
    const auto picked = select_correlations(catalog, 2, gen);
    REQUIRE(picked.size() == 2);
    std::map<std::string, std::string> chosen;
    for (const auto& corr : picked)
        chosen[split.class_name(corr.class_idx)] = split.attribute_name(corr.attr_idx);
    CHECK(chosen == std::map<std::string, std::string>{{"c1", "a"}, {"c2", "b"}});
}

TEST_CASE("select_correlations is infeasible when attributes cannot be distinct") {
    const auto split = make_split(
        {{"s11", "c1", {"a"}}, {"s12", "c1", {}}, {"s21", "c2", {"a"}}, {"s22", "c2", {}}});
    const auto catalog = SpuriousCatalog::build(split);
    rng::Xoshiro256ss gen(1);
    CHECK_THROWS_AS(select_correlations(catalog, 2, gen, 20), ConstructionError);
}

TEST_CASE("select_correlations draws attributes uniformly per class") {
    // 3 classes x 3 disjoint spurious attributes: every draw succeeds and
    // each class's attribute should be uniform over its three options.
    std::vector<SampleRecord> records;
    for (int c = 0; c < 3; ++c) {
        const std::string cls = "c" + std::to_string(c);
        for (int a = 0; a < 3; ++a)
            records.push_back(
                {cls + "s" + std::to_string(a), cls, {"a" + std::to_string(3 * c + a)}, {}});
        records.push_back({cls + "s9", cls, {}, {}});
    }
    const auto split = DatasetSplit::from_records(std::move(records));
    const auto catalog = SpuriousCatalog::build(split);

    std::map<std::pair<std::uint32_t, std::uint32_t>, int> tallies;
    rng::Xoshiro256ss gen(123);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
        for (const auto& corr : select_correlations(catalog, 3, gen))
            ++tallies[{corr.class_idx, corr.attr_idx}];

    for (std::uint32_t c = 0; c < 3; ++c) {
        const double expected = draws / 3.0;
        double chi2 = 0.0;
        int total = 0;
        for (std::uint32_t a : catalog.spurious_attributes(c)) {
            const int obs = tallies[{c, a}];
            total += obs;
            chi2 += (obs - expected) * (obs - expected) / expected;
        }
        CHECK(total == draws);  // the class appears in every 3-way draw
        CHECK(chi2 < 13.8);     // chi-square, 2 dof, p ~ 0.001
    }
}

TEST_CASE("build_support takes the forced pool and rejects short pools") {
    const auto split = forced_pair_split();
    const std::vector<Correlation> corr{
        {split.require_class("c1"), split.attribute_or_none("a")},
        {split.require_class("c2"), split.attribute_or_none("b")}};
    rng::Xoshiro256ss gen(5);
    const auto supports = build_support(split, corr, 1, SupportVariant::SC3, gen);
    CHECK(ids_of(split, supports[0]) == std::set<std::string>{"s11"});
    CHECK(ids_of(split, supports[1]) == std::set<std::string>{"s21"});

    rng::Xoshiro256ss gen2(5);
    CHECK_THROWS_AS(build_support(split, corr, 2, SupportVariant::SC3, gen2), ConstructionError);
}

TEST_CASE("SC1 ignores attributes entirely") {
    const auto synth = generate_split(small_synth());
    const auto catalog = SpuriousCatalog::build(synth.split);
    rng::Xoshiro256ss gen(9);
    const auto corr = select_correlations(catalog, 4, gen);
    // SC1 pools are whole classes, so any draw fits.
    const auto supports = build_support(synth.split, corr, 10, SupportVariant::SC1, gen);
    for (std::size_t s = 0; s < corr.size(); ++s) {
        for (std::uint32_t idx : supports[s])
            CHECK(synth.split.samples()[idx].class_idx == corr[s].class_idx);
    }
    // SC2 requires the slot attribute but tolerates foreign ones. A drawn
    // attribute can have very few carriers; redraw like the builder does.
    rng::Xoshiro256ss gen2(9);
    for (int attempt = 0;; ++attempt) {
        REQUIRE(attempt < 100);
        const auto corr2 = select_correlations(catalog, 4, gen2);
        std::vector<std::vector<std::uint32_t>> sc2;
        try {
            sc2 = build_support(synth.split, corr2, 3, SupportVariant::SC2, gen2);
        } catch (const ConstructionError&) {
            continue;
        }
        for (std::size_t s = 0; s < corr2.size(); ++s)
            for (std::uint32_t idx : sc2[s])
                CHECK(synth.split.samples()[idx].has_attribute(corr2[s].attr_idx));
        break;
    }
}

TEST_CASE("attribute_prevalence counts non-selected attributes") {
    const auto split = make_split({{"x2", "c", {"b", "e"}}, {"x4", "c", {"d", "e"}}});
    const std::vector<std::uint32_t> candidates{0, 1};
    const std::vector<std::uint32_t> selected{split.attribute_or_none("a"),
                                              split.attribute_or_none("b"),
                                              split.attribute_or_none("d")};
    const auto prev = attribute_prevalence(split, candidates, selected);
    CHECK(prev.denom == 2);
    REQUIRE(prev.counts.size() == 1);
    CHECK(prev.value(split.attribute_or_none("e")) == doctest::Approx(1.0));

    // Only selected attributes occur: empty map.
    const std::vector<std::uint32_t> selected_all{split.attribute_or_none("b"),
                                                  split.attribute_or_none("d"),
                                                  split.attribute_or_none("e")};
    CHECK(attribute_prevalence(split, candidates, selected_all).counts.empty());

    const auto split2 = make_split({{"x1", "c", {"e"}}, {"x2", "c", {}}});
    const auto prev2 = attribute_prevalence(split2, std::vector<std::uint32_t>{0, 1},
                                            std::vector<std::uint32_t>{});
    CHECK(prev2.value(split2.attribute_or_none("e")) == doctest::Approx(0.5));

    CHECK_THROWS_AS(attribute_prevalence(split, std::vector<std::uint32_t>{}, selected),
                    ValidationError);
}

TEST_CASE("likelihood_score sums prevalences of present non-selected attributes") {
    const auto split = make_split({{"x2", "c", {"b", "e"}},
                                   {"x4", "c", {"d", "e"}},
                                   {"x9", "c", {"b", "d"}},
                                   {"x8", "c", {"e", "f"}}});
    const std::vector<std::uint32_t> selected{split.attribute_or_none("a"),
                                              split.attribute_or_none("b"),
                                              split.attribute_or_none("d")};
    const std::vector<std::uint32_t> candidates{0, 1};  // x2, x4 in input order
    const auto prev = attribute_prevalence(split, candidates, selected);
    // p_e = 1.0; x2 carries {b, e}, b is selected.
    CHECK(likelihood_score(split.samples()[*split.sample_index("x2")], prev) ==
          doctest::Approx(1.0));
    // Every attribute selected: score 0.
    CHECK(likelihood_score(split.samples()[*split.sample_index("x9")], prev) ==
          doctest::Approx(0.0));

    // Two attributes with p 0.5 and 0.25.
    const auto split2 = make_split({{"x1", "c", {"e", "f"}},
                                    {"x2", "c", {"e"}},
                                    {"x3", "c", {}},
                                    {"x4", "c", {"g"}}});
    const auto prev2 = attribute_prevalence(split2, std::vector<std::uint32_t>{0, 1, 2, 3},
                                            std::vector<std::uint32_t>{split2.attribute_or_none("g")});
    CHECK(prev2.value(split2.attribute_or_none("e")) == doctest::Approx(0.5));
    CHECK(prev2.value(split2.attribute_or_none("f")) == doctest::Approx(0.25));
    CHECK(likelihood_score(split2.samples()[0], prev2) == doctest::Approx(0.75));
}

TEST_CASE("build_query picks the lowest-scoring inter-class candidates") {
    // Class c, selected a; other slots select b (c2) and d (c3). The
    // inter-class pool is {x2, x4, x5} with scores 1.0, 0.0 and 2/3: x2
    // carries both non-selected e and f, x4 only selected attributes, x5
    // just e.
    const auto split = make_split({{"x1", "c", {"a"}},
                                   {"x2", "c", {"b", "e", "f"}},
                                   {"x4", "c", {"d"}},
                                   {"x5", "c", {"b", "e"}},
                                   {"y1", "c2", {"b"}},
                                   {"y2", "c2", {}},
                                   {"z1", "c3", {"d"}},
                                   {"z2", "c3", {}}});
    const std::vector<Correlation> corr{
        {split.require_class("c"), split.attribute_or_none("a")},
        {split.require_class("c2"), split.attribute_or_none("b")},
        {split.require_class("c3"), split.attribute_or_none("d")}};
    rng::Xoshiro256ss gen(3);
    const auto draw = build_query(split, corr, 0, 2, QueryVariant::QC3, gen);
    CHECK(!draw.fallback);
    CHECK(ids_of(split, draw.ids) == std::set<std::string>{"x4", "x5"});
    // Selection order is ascending score.
    CHECK(split.samples()[draw.ids[0]].id == "x4");
    CHECK(split.samples()[draw.ids[1]].id == "x5");

    // The pool exactly fits: everything is taken, no fallback.
    rng::Xoshiro256ss gen2(3);
    const auto all3 = build_query(split, corr, 0, 3, QueryVariant::QC3, gen2);
    CHECK(!all3.fallback);
    CHECK(ids_of(split, all3.ids) == std::set<std::string>{"x2", "x4", "x5"});
}

TEST_CASE("build_query falls back to the intra-class pool when needed") {
    // Inter-class pool is just {q1}; the fill comes from the remaining
    // intra-class candidates ordered by intra-pool scores: q2 (0) then q3
    // (2/4) before q4 (3/4).
    const auto split = make_split({{"p1", "c", {"a"}},
                                   {"q1", "c", {"b"}},
                                   {"q2", "c", {}},
                                   {"q3", "c", {"e"}},
                                   {"q4", "c", {"e", "f"}},
                                   {"y1", "c2", {"b"}},
                                   {"y2", "c2", {}}});
    const std::vector<Correlation> corr{
        {split.require_class("c"), split.attribute_or_none("a")},
        {split.require_class("c2"), split.attribute_or_none("b")}};
    rng::Xoshiro256ss gen(3);
    const auto draw = build_query(split, corr, 0, 3, QueryVariant::QC3, gen);
    CHECK(draw.fallback);
    REQUIRE(draw.ids.size() == 3);
    CHECK(split.samples()[draw.ids[0]].id == "q1");  // all of the inter pool first
    CHECK(split.samples()[draw.ids[1]].id == "q2");
    CHECK(split.samples()[draw.ids[2]].id == "q3");

    // Even the intra-class pool is too small: restartable failure.
    rng::Xoshiro256ss gen2(3);
    CHECK_THROWS_AS(build_query(split, corr, 0, 5, QueryVariant::QC3, gen2), ConstructionError);
}

TEST_CASE("QC1 and QC2 draw without scoring from their pools") {
    const auto synth = generate_split(small_synth());
    const auto& split = synth.split;
    const auto catalog = SpuriousCatalog::build(split);
    rng::Xoshiro256ss gen(21);
    const auto corr = select_correlations(catalog, 5, gen);

    const auto qc1 = build_query(split, corr, 0, 10, QueryVariant::QC1, gen);
    CHECK(qc1.fallback);  // never restricted to the inter-class pool
    for (std::uint32_t idx : qc1.ids) {
        CHECK(split.samples()[idx].class_idx == corr[0].class_idx);
        CHECK(!split.samples()[idx].has_attribute(corr[0].attr_idx));
    }

    const auto qc2 = build_query(split, corr, 0, 5, QueryVariant::QC2, gen);
    const auto pool = ids_of(split, union_candidates(split, corr, 0));
    if (!qc2.fallback) {
        for (std::uint32_t idx : qc2.ids) CHECK(pool.contains(split.samples()[idx].id));
    }
}

TEST_CASE("build_task is deterministic and satisfies the validator") {
    const auto synth = generate_split(small_synth());
    const auto catalog = SpuriousCatalog::build(synth.split);
    BuildConfig cfg;
    cfg.ways = 5;
    cfg.shots = 3;
    cfg.queries = 10;
    cfg.num_tasks = 40;
    cfg.master_seed = 99;

    const auto once = build_task(synth.split, catalog, cfg, 7);
    const auto twice = build_task(synth.split, catalog, cfg, 7);
    TaskSuite wrap;
    wrap.config = cfg;
    wrap.tasks = {once};
    TaskSuite wrap2 = wrap;
    wrap2.tasks = {twice};
    CHECK(suite_to_json(wrap, synth.split).dump() == suite_to_json(wrap2, synth.split).dump());
    CHECK(once.seed == rng::derive_task_seed(cfg.master_seed, 7));

    const auto suite = build_suite(synth.split, catalog, cfg, 2);
    CHECK(suite.tasks.size() == 40);
    CHECK(validate_suite(synth.split, suite).empty());
}

TEST_CASE("engineered split admits exactly one assignment") {
    const auto split = forced_pair_split();
    const auto catalog = SpuriousCatalog::build(split);
    BuildConfig cfg;
    cfg.ways = 2;
    cfg.shots = 1;
    cfg.queries = 1;
    cfg.master_seed = 4;
    const auto task = build_task(split, catalog, cfg, 0);
    std::map<std::string, std::pair<std::string, std::string>> by_class;
    for (const auto& slot : task.slots) {
        REQUIRE(slot.attribute.has_value());
        by_class[split.class_name(slot.class_idx)] = {split.samples()[slot.support[0]].id,
                                                      split.samples()[slot.query[0]].id};
        CHECK(slot.fallback);  // no sample of either class carries the other's attribute
    }
    CHECK(by_class.at("c1") == std::pair<std::string, std::string>{"s11", "s12"});
    CHECK(by_class.at("c2") == std::pair<std::string, std::string>{"s21", "s22"});
}

TEST_CASE("build_task fails when too few classes are usable") {
    const auto split = make_split({{"x1", "c1", {"a"}}, {"x2", "c1", {}}, {"x3", "c2", {"b"}}});
    const auto catalog = SpuriousCatalog::build(split);  // c2 has one sample: unusable
    BuildConfig cfg;
    cfg.ways = 2;
    cfg.shots = 1;
    cfg.queries = 1;
    CHECK_THROWS_AS(build_task(split, catalog, cfg, 0), ConstructionError);
}

TEST_CASE("random tasks use a class exactly when it fits") {
    const auto split = make_split({{"x1", "c1", {}},
                                   {"x2", "c1", {}},
                                   {"x3", "c1", {}},
                                   {"x4", "c2", {}},
                                   {"x5", "c2", {}},
                                   {"x6", "c2", {}}});
    BuildConfig cfg;
    cfg.ways = 2;
    cfg.shots = 1;
    cfg.queries = 2;
    cfg.mode = TaskMode::random_baseline;
    const auto task = build_random_task(split, cfg, 0);
    std::set<std::string> used;
    for (const auto& slot : task.slots) {
        CHECK(!slot.attribute.has_value());
        CHECK(slot.support.size() == 1);
        CHECK(slot.query.size() == 2);
        for (std::uint32_t idx : slot.support) used.insert(split.samples()[idx].id);
        for (std::uint32_t idx : slot.query) used.insert(split.samples()[idx].id);
    }
    CHECK(used.size() == 6);  // every sample used exactly once

    const auto again = build_random_task(split, cfg, 0);
    TaskSuite a, b;
    a.config = b.config = cfg;
    a.tasks = {task};
    b.tasks = {again};
    CHECK(suite_to_json(a, split).dump() == suite_to_json(b, split).dump());
}

TEST_CASE("random suites keep support and query disjoint") {
    const auto synth = generate_split(small_synth());
    const auto catalog = SpuriousCatalog::build(synth.split);
    BuildConfig cfg;
    cfg.ways = 5;
    cfg.shots = 5;
    cfg.queries = 15;
    cfg.num_tasks = 200;
    cfg.mode = TaskMode::random_baseline;
    cfg.master_seed = 31;
    const auto suite = build_suite(synth.split, catalog, cfg, 2);
    CHECK(suite.tasks.size() == 200);
    CHECK(validate_suite(synth.split, suite).empty());
}

TEST_CASE("suite output is independent of the worker count") {
    const auto synth = generate_split(small_synth());
    const auto catalog = SpuriousCatalog::build(synth.split);
    BuildConfig cfg;
    cfg.ways = 4;
    cfg.shots = 2;
    cfg.queries = 8;
    cfg.num_tasks = 60;
    cfg.master_seed = 12345;
    const auto one = build_suite(synth.split, catalog, cfg, 1);
    const auto eight = build_suite(synth.split, catalog, cfg, 8);
    CHECK(suite_to_json(one, synth.split).dump() == suite_to_json(eight, synth.split).dump());
}

TEST_CASE("every support/query variant combination builds valid suites") {
    SynthConfig scfg;
    scfg.num_classes = 12;
    scfg.samples_per_class = 100;
    scfg.planted_rate = 0.9;
    scfg.cross_rate = 0.3;
    scfg.seed = 77;
    const auto synth = generate_split(scfg);
    const auto catalog = SpuriousCatalog::build(synth.split);

    for (auto sc : {SupportVariant::SC1, SupportVariant::SC2, SupportVariant::SC3}) {
        for (auto qc : {QueryVariant::QC1, QueryVariant::QC2, QueryVariant::QC3}) {
            BuildConfig cfg;
            cfg.ways = 4;
            cfg.shots = 2;
            cfg.queries = 5;
            cfg.num_tasks = 20;
            cfg.master_seed = 1000 + static_cast<int>(sc) * 10 + static_cast<int>(qc);
            cfg.support_variant = sc;
            cfg.query_variant = qc;
            const auto suite = build_suite(synth.split, catalog, cfg, 1);
            CHECK(suite.tasks.size() == 20);
            const auto violations = validate_suite(synth.split, suite);
            if (!violations.empty()) {
                CAPTURE(to_string(sc));
                CAPTURE(to_string(qc));
                CAPTURE(violations.front());
            }
            CHECK(violations.empty());
        }
    }
}

TEST_CASE("isolated construction failures are tolerated and recorded") {
    // One attribute layout where a quarter of selection orders dead-end:
    // when c3 draws before c1 and picks "a", c1 is left without a distinct
    // attribute. With a small restart budget a few tasks per suite fail for
    // good; the suite must carry on and record them.
    const auto split = make_split({{"a1", "c1", {"a"}},
                                   {"a2", "c1", {}},
                                   {"b1", "c2", {"b"}},
                                   {"b2", "c2", {}},
                                   {"d1", "c3", {"c"}},
                                   {"d2", "c3", {"a"}},
                                   {"d3", "c3", {}}});
    const auto catalog = SpuriousCatalog::build(split);
    BuildConfig cfg;
    cfg.ways = 3;
    cfg.shots = 1;
    cfg.queries = 1;
    cfg.num_tasks = 400;
    cfg.max_restarts = 3;

    bool found_partial = false;
    for (std::uint64_t seed = 0; seed < 60 && !found_partial; ++seed) {
        cfg.master_seed = seed;
        TaskSuite suite;
        try {
            suite = build_suite(split, catalog, cfg, 1);
        } catch (const ConstructionError&) {
            continue;  // this seed breached the 1% threshold
        }
        if (suite.failed.empty()) continue;
        found_partial = true;
        CHECK(suite.failed.size() * 100 <= static_cast<std::size_t>(cfg.num_tasks));
        CHECK(suite.tasks.size() + suite.failed.size() == 400);
        CHECK(std::is_sorted(suite.failed.begin(), suite.failed.end()));
        std::set<int> failed(suite.failed.begin(), suite.failed.end());
        for (const auto& task : suite.tasks) CHECK(!failed.contains(task.index));
        CHECK(validate_suite(split, suite).empty());
    }
    CHECK(found_partial);  // the fixture must actually exercise the path
}

TEST_CASE("a suite with pervasive failures throws") {
    const auto split = make_split({{"x1", "c1", {}}, {"x2", "c2", {}}});
    BuildConfig cfg;
    cfg.ways = 2;
    cfg.shots = 1;
    cfg.queries = 2;  // classes have one sample each: never satisfiable
    cfg.num_tasks = 10;
    cfg.mode = TaskMode::random_baseline;
    cfg.max_restarts = 3;
    const auto catalog = SpuriousCatalog::build(split);
    CHECK_THROWS_AS(build_suite(split, catalog, cfg, 1), ConstructionError);
}

TEST_CASE("QC3 chosen scores are pointwise minimal") {
    const auto synth = generate_split(small_synth());
    const auto& split = synth.split;
    const auto catalog = SpuriousCatalog::build(split);
    BuildConfig cfg;
    cfg.ways = 5;
    cfg.shots = 2;
    cfg.queries = 6;
    cfg.num_tasks = 12;
    cfg.master_seed = 8;
    const auto suite = build_suite(split, catalog, cfg, 1);

    rng::Xoshiro256ss gen(17);
    for (const auto& task : suite.tasks) {
        std::vector<Correlation> corr;
        std::vector<std::uint32_t> selected;
        for (const auto& slot : task.slots) {
            corr.push_back({slot.class_idx, *slot.attribute});
            selected.push_back(*slot.attribute);
        }
        for (std::size_t s = 0; s < task.slots.size(); ++s) {
            const auto& slot = task.slots[s];
            if (slot.fallback) continue;
            auto pool = union_candidates(split, corr, s);
            std::vector<std::uint32_t> support_sorted = slot.support;
            std::sort(support_sorted.begin(), support_sorted.end());
            std::vector<std::uint32_t> filtered;
            std::set_difference(pool.begin(), pool.end(), support_sorted.begin(),
                                support_sorted.end(), std::back_inserter(filtered));
            const auto prev = attribute_prevalence(split, filtered, selected);
            std::vector<std::uint64_t> chosen;
            for (std::uint32_t idx : slot.query)
                chosen.push_back(likelihood_numerator(split.samples()[idx], prev));
            std::sort(chosen.begin(), chosen.end());
            // Any other subset of the pool scores pointwise >= the choice.
            for (int trial = 0; trial < 20; ++trial) {
                auto other = rng::sample_without_replacement(filtered, chosen.size(), gen);
                std::vector<std::uint64_t> other_scores;
                for (std::uint32_t idx : other)
                    other_scores.push_back(likelihood_numerator(split.samples()[idx], prev));
                std::sort(other_scores.begin(), other_scores.end());
                for (std::size_t i = 0; i < chosen.size(); ++i)
                    CHECK(chosen[i] <= other_scores[i]);
            }
        }
    }
}

TEST_CASE("construction is unaffected by dataset line order") {
    // The same records in two different input orders must yield identical
    // suites (ids whose lexicographic order disagrees with insertion order).
    std::vector<SampleRecord> records;
    rng::Xoshiro256ss gen(2718);
    for (int c = 0; c < 6; ++c) {
        const std::string cls = "c" + std::to_string(c);
        for (int i = 0; i < 30; ++i) {
            SampleRecord rec;
            rec.id = cls + "_s" + std::to_string(i);  // "s10" < "s2" as strings
            rec.class_id = cls;
            if (gen.unit() < 0.8) rec.attributes.push_back("pl" + std::to_string(c));
            for (int o = 0; o < 6; ++o)
                if (o != c && gen.unit() < 0.3) rec.attributes.push_back("pl" + std::to_string(o));
            records.push_back(std::move(rec));
        }
    }
    auto shuffled = records;
    std::reverse(shuffled.begin(), shuffled.end());
    const auto split_a = DatasetSplit::from_records(records);
    const auto split_b = DatasetSplit::from_records(shuffled);

    BuildConfig cfg;
    cfg.ways = 3;
    cfg.shots = 2;
    cfg.queries = 4;
    cfg.num_tasks = 20;
    cfg.master_seed = 5;
    const auto suite_a = build_suite(split_a, SpuriousCatalog::build(split_a), cfg, 1);
    const auto suite_b = build_suite(split_b, SpuriousCatalog::build(split_b), cfg, 1);
    CHECK(suite_to_json(suite_a, split_a).dump() == suite_to_json(suite_b, split_b).dump());
    CHECK(validate_suite(split_a, suite_a).empty());
}

TEST_CASE("tasks-json round-trips through parse") {
    const auto synth = generate_split(small_synth());
    const auto catalog = SpuriousCatalog::build(synth.split);
    BuildConfig cfg;
    cfg.ways = 3;
    cfg.shots = 2;
    cfg.queries = 4;
    cfg.num_tasks = 6;
    cfg.master_seed = 77;
    const auto suite = build_suite(synth.split, catalog, cfg, 1);
    const auto json = suite_to_json(suite, synth.split);
    const auto back = suite_from_json(json, synth.split);
    CHECK(suite_to_json(back, synth.split).dump() == json.dump());

    // Random mode serializes null attributes and round-trips the same way.
    cfg.mode = TaskMode::random_baseline;
    const auto random_suite = build_suite(synth.split, catalog, cfg, 1);
    const auto rjson = suite_to_json(random_suite, synth.split);
    CHECK(rjson["tasks"][0]["slots"][0]["attribute"].is_null());
    CHECK(suite_to_json(suite_from_json(rjson, synth.split), synth.split).dump() == rjson.dump());

    // Unknown references are rejected.
    auto broken = json;
    broken["tasks"][0]["slots"][0]["support"][0] = "no-such-sample";
    CHECK_THROWS_AS(suite_from_json(broken, synth.split), ValidationError);
}
