#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "partvos/aggregation.hpp"
#include "partvos/dataset_io.hpp"
#include "partvos/part_gen.hpp"
#include "partvos/rng.hpp"

using namespace partvos;

namespace {

ScoreMap uniform(int w, int h, double v) { return ScoreMap(w, h, v); }

ScoreMap random_map(Rng& rng, int w, int h) {
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (auto& x : v) x = rng.uniform();
    return ScoreMap(w, h, std::move(v));
}

std::vector<PartObservation> random_observations(Rng& rng, int n, int fw, int fh) {
    std::vector<PartObservation> obs;
    for (int i = 0; i < n; ++i) {
        const int w = 1 + static_cast<int>(rng.below(fw / 2));
        const int h = 1 + static_cast<int>(rng.below(fh / 2));
        const BoundingBox b{static_cast<int>(rng.below(fw - w + 1)), static_cast<int>(rng.below(fh - h + 1)), w, h};
        obs.push_back({i, b, random_map(rng, w, h), rng.uniform()});
    }
    return obs;
}

double region_mean(const ScoreMap& m, const BoundingBox& b) {
    double s = 0.0;
    for (int y = b.y; y < b.bottom(); ++y) {
        for (int x = b.x; x < b.right(); ++x) s += m(x, y);
    }
    return s / static_cast<double>(b.area());
}

FeatureVector fv(std::vector<double> v) { return FeatureVector{std::move(v), false}; }

InitialPartBank bank_of(const std::vector<std::vector<double>>& vs) {
    InitialPartBank bank;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        BankEntry e;
        e.part_id = static_cast<int>(i);
        e.feature = fv(vs[i]);
        e.confidence = 1.0;
        bank.entries.push_back(e);
    }
    bank.sigma = bank_sigma(bank.entries, 1e-6);
    return bank;
}

}  // namespace

TEST_CASE("bank sigma is the median squared pairwise distance") {
    // Pairwise squared distances: 1, 4, 9 -> median 4.
    const auto bank = bank_of({{0.0}, {1.0}, {3.0}});
    CHECK(bank.sigma == 4.0);
    // {0,1,2,3}: 1,1,1,4,4,9 -> (1 + 4) / 2
    CHECK(bank_of({{0.0}, {1.0}, {2.0}, {3.0}}).sigma == 2.5);
    CHECK(bank_of({{0.0}}).sigma == 1e-6);
    CHECK(bank_of({{1.0}, {1.0}}).sigma == 1e-6);
}

TEST_CASE("nearest initial part") {
    const auto bank = bank_of({{0.0, 0.0}, {1.0, 0.0}, {0.0, 2.0}});
    auto r = nearest_initial(fv({1.0, 0.0}), bank);
    CHECK(r.index == 1);
    CHECK(r.distance == 0.0);
    // Equidistant from entries 0 and 1: lower index.
    r = nearest_initial(fv({0.5, 0.0}), bank);
    CHECK(r.index == 0);
    CHECK(r.distance == 0.25);

    const auto none = nearest_initial(FeatureVector{{0.0, 0.0}, true}, bank);
    CHECK(none.index == -1);
    CHECK(similarity_weight(none.distance, bank.sigma) == 0.0);
}

TEST_CASE("nearest initial matches exhaustive search") {
    Rng rng(17);
    std::vector<std::vector<double>> vs;
    for (int i = 0; i < 300; ++i) {
        std::vector<double> v(10);
        for (auto& x : v) x = rng.uniform(-1, 1);
        vs.push_back(v);
    }
    const auto bank = bank_of(vs);
    for (int q = 0; q < 1000; ++q) {
        std::vector<double> v(10);
        for (auto& x : v) x = rng.uniform(-1, 1);
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < vs.size(); ++i) {
            double d = 0;
            for (std::size_t k = 0; k < 10; ++k) d += (v[k] - vs[i][k]) * (v[k] - vs[i][k]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        const auto r = nearest_initial(fv(v), bank);
        CHECK(r.index == static_cast<int>(best));
        CHECK(r.distance == best_d);
    }
}

TEST_CASE("similarity weight") {
    CHECK(similarity_weight(0.0, 2.0) == 1.0);
    CHECK(similarity_weight(2.0, 2.0) == doctest::Approx(std::exp(-1.0)));
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const double a = rng.uniform(0, 5), b = rng.uniform(0, 5);
        if (a < b) CHECK(similarity_weight(a, 1.3) > similarity_weight(b, 1.3));
    }
    CHECK_THROWS_AS(similarity_weight(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("unit weights over full coverage: seg equals ave") {
    Rng rng(4);
    std::vector<PartObservation> obs;
    for (int i = 0; i < 6; ++i) obs.push_back({i, {0, 0, 12, 9}, random_map(rng, 12, 9), 1.0});
    AggConfig ave, seg;
    ave.mode = AggMode::ave;
    seg.mode = AggMode::seg;
    const auto a = aggregate(obs, ave, 12, 9);
    const auto s = aggregate(obs, seg, 12, 9);
    for (std::size_t p = 0; p < a.score_map.size(); ++p) {
        CHECK(std::abs(a.score_map.values()[p] - s.score_map.values()[p]) <= 1e-12);
    }
}

TEST_CASE("single part: weights cancel") {
    Rng rng(6);
    const auto m = random_map(rng, 5, 4);
    std::vector<PartObservation> obs{{0, {2, 3, 5, 4}, m, 0.5}};
    const auto agg = aggregate(obs, AggConfig{}, 10, 10);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 5; ++x) CHECK(agg.score_map(2 + x, 3 + y) == doctest::Approx(m(x, y)).epsilon(1e-15));
    }
    CHECK(agg.score_map(0, 0) == 0.0);
}

TEST_CASE("low-weight false positive is suppressed") {
    // Nine good parts cover the frame and score the decoy region as
    // background; one decoy part claims that region with certainty.
    const BoundingBox decoy{20, 20, 8, 8};
    std::vector<PartObservation> obs;
    Rng rng(8);
    for (int i = 0; i < 9; ++i) {
        ScoreMap m(40, 40);
        for (int y = 0; y < 40; ++y) {
            for (int x = 0; x < 40; ++x) m.set(x, y, decoy.contains(x, y) ? 0.02 : 0.9);
        }
        obs.push_back({i, {0, 0, 40, 40}, m, rng.uniform(0.8, 1.0)});
    }
    obs.push_back({9, decoy, uniform(8, 8, 1.0), 0.2});
    AggConfig ave, seg;
    ave.mode = AggMode::ave;
    const double a = region_mean(aggregate(obs, ave, 40, 40).score_map, decoy);
    const double s = region_mean(aggregate(obs, seg, 40, 40).score_map, decoy);
    CHECK(s <= 0.5 * a);
}

TEST_CASE("aggregation invariants") {
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        auto obs = random_observations(rng, 30, 37, 23);
        for (bool strict : {false, true}) {
            for (auto mode : {AggMode::ave, AggMode::seg}) {
                AggConfig cfg;
                cfg.mode = mode;
                cfg.strict_eq5 = strict;
                const auto ref = aggregate_serial(obs, cfg, 37, 23);
                for (double v : ref.score_map.values()) {
                    CHECK(v >= 0.0);
                    CHECK(v <= 1.0);
                }
                for (int workers : {1, 3, 8}) CHECK(aggregate(obs, cfg, 37, 23, workers).score_map == ref.score_map);
                auto shuffled = obs;
                rng.shuffle(shuffled.begin(), shuffled.end());
                CHECK(aggregate(shuffled, cfg, 37, 23, 2).score_map == ref.score_map);
            }
        }
    }
}

TEST_CASE("global normalisation is monotone in each weight") {
    Rng rng(12);
    AggConfig cfg;
    cfg.strict_eq5 = true;
    for (int trial = 0; trial < 20; ++trial) {
        auto obs = random_observations(rng, 12, 30, 20);
        const auto before = aggregate(obs, cfg, 30, 20).score_map;
        const auto k = rng.below(obs.size());
        obs[k].weight *= rng.uniform();
        const auto after = aggregate(obs, cfg, 30, 20).score_map;
        const auto& b = obs[k].box;
        for (int y = b.y; y < b.bottom(); ++y) {
            for (int x = b.x; x < b.right(); ++x) CHECK(after(x, y) <= before(x, y) + 1e-15);
        }
    }
}

TEST_CASE("coverage normalisation: lowering a weight pulls toward the others") {
    // Per covered pixel the result moves toward the mean of the remaining
    // parts, away from the down-weighted part's own score.
    Rng rng(13);
    AggConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        auto obs = random_observations(rng, 12, 30, 20);
        const auto before = aggregate(obs, cfg, 30, 20).score_map;
        const auto k = rng.below(obs.size());
        const auto own = obs[k].map;
        obs[k].weight *= rng.uniform();
        const auto after = aggregate(obs, cfg, 30, 20).score_map;
        const auto& b = obs[k].box;
        for (int y = b.y; y < b.bottom(); ++y) {
            for (int x = b.x; x < b.right(); ++x) {
                const double mine = own(x - b.x, y - b.y);
                if (mine >= before(x, y)) CHECK(after(x, y) <= before(x, y) + 1e-12);
                if (mine <= before(x, y)) CHECK(after(x, y) >= before(x, y) - 1e-12);
            }
        }
    }
}

TEST_CASE("aggregate bookkeeping") {
    std::vector<PartObservation> obs{{5, {0, 0, 2, 2}, uniform(2, 2, 0.9), 0.7},
                                     {1, {2, 2, 2, 2}, uniform(2, 2, 0.2), 0.4}};
    const auto agg = aggregate(obs, AggConfig{}, 4, 4);
    REQUIRE(agg.contributions.size() == 2);
    CHECK(agg.contributions[0].part_id == 1);
    CHECK(agg.contributions[1].weight == 0.7);
    REQUIRE(agg.centroid.has_value());
    CHECK(agg.centroid->first == 0.5);
    CHECK(agg.centroid->second == 0.5);

    const auto empty = aggregate({}, AggConfig{}, 4, 4);
    CHECK(empty.empty);
    CHECK_FALSE(empty.centroid.has_value());

    std::vector<PartObservation> outside{{0, {3, 3, 2, 2}, uniform(2, 2, 0.5), 1.0}};
    CHECK_THROWS_AS(aggregate(outside, AggConfig{}, 4, 4), std::invalid_argument);
}

TEST_CASE("binarize and resolve") {
    FrameAggregate a;
    a.score_map = uniform(3, 3, 0.6);
    CHECK(binarize_frame(a, 0.5).count() == 9);
    a.score_map = uniform(3, 3, 0.5);
    CHECK(binarize_frame(a, 0.5).none());

    const std::vector<std::uint8_t> labels{1, 2};
    const std::vector<ScoreMap> maps{ScoreMap(3, 1, std::vector<double>{0.8, 0.1, 0.7}),
                                     ScoreMap(3, 1, std::vector<double>{0.6, 0.9, 0.7})};
    const auto r = resolve_instances(maps, labels, 0.5);
    CHECK(r(0, 0) == 1);
    CHECK(r(1, 0) == 2);
    CHECK(r(2, 0) == 1);

    Rng rng(3);
    const auto single = random_map(rng, 6, 5);
    const std::vector<ScoreMap> one{single};
    const std::vector<std::uint8_t> l1{1};
    CHECK(resolve_instances(one, l1, 0.5) == from_binary(binarize(single, 0.5)));
}

TEST_CASE("bank from a trained segmenter") {
    const auto seq = synth_sequence(synth_preset("small"), 1);
    const auto mask = seq.annotations[0]->instance(1);
    const auto parts = generate_parts(mask, PartConfig{}, 1);
    SegConfig sc;
    sc.epochs = 40;
    sc.augment_copies = 1;
    const auto model = train_segmenter(seq.frames[0], mask, parts, sc, 1).model;

    const auto bank = build_bank(seq.frames[0], mask, parts, model, AggConfig{}, 2);
    REQUIRE(bank.size() == parts.size());
    for (const auto& e : bank.entries) {
        CHECK(e.confidence > 0.8);
        CHECK(e.confidence <= 1.0);
    }
    CHECK(bank.sigma > 0.0);

    // The degenerate model outputs 0.5 everywhere: nothing exceeds the threshold.
    const auto flat = build_bank(seq.frames[0], mask, parts, SegmenterModel{}, AggConfig{});
    for (const auto& e : flat.entries) CHECK(e.confidence == 0.0);

    // Repaint the smallest part with background colour: its self-segmentation
    // collapses, more than for any part only partly covering it.
    auto frame = seq.frames[0];
    const auto smallest = std::min_element(parts.begin(), parts.end(), [](const Part& a, const Part& b) {
        return a.box.area() < b.box.area();
    });
    for (int y = smallest->box.y; y < smallest->box.bottom(); ++y) {
        for (int x = smallest->box.x; x < smallest->box.right(); ++x) frame.set(x, y, 40, 90, 170);
    }
    const auto hurt = build_bank(frame, mask, parts, model, AggConfig{});
    const auto k = static_cast<std::size_t>(smallest - parts.begin());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i != k && !(parts[i].box == parts[k].box)) CHECK(hurt.entries[i].confidence > hurt.entries[k].confidence);
    }
}
