#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairaudit/dataset.hpp"
#include "fairaudit/group_metrics.hpp"
#include "fairaudit/individual_metrics.hpp"
#include "fairaudit/preprocess.hpp"
#include "fairaudit/rng.hpp"
#include "helpers.hpp"

using namespace fairaudit;
using Catch::Approx;

TEST_CASE("drop_sensitive removes flagged feature columns only") {
    Dataset ds = testutil::make_dataset({{1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}}, {0, 1},
                                        {"A", "B"});
    SECTION("no sensitive columns is the identity") {
        REQUIRE(drop_sensitive(ds) == ds);
    }
    SECTION("one of five features dropped, order preserved") {
        ds.sensitive_features = {"f2"};
        const Dataset out = drop_sensitive(ds);
        REQUIRE(out.feature_names == std::vector<std::string>{"f0", "f1", "f3", "f4"});
        REQUIRE(out.features[0] == std::vector<double>{1, 2, 4, 5});
        REQUIRE(out.features[1] == std::vector<double>{6, 7, 9, 10});
        // protected metadata retained, so audits still work
        const GroupIndex gi = build_group_index(out, {"group"});
        REQUIRE_NOTHROW(confusion_by_group({0, 1}, out, gi));
    }
}

TEST_CASE("suppress_correlated drops the group proxy") {
    // f0 equals the group indicator, f1 alternates independently of groups
    const Dataset ds = testutil::make_dataset(
        {{0, 1}, {0, -1}, {1, 1}, {1, -1}}, {0, 1, 0, 1}, {"A", "A", "B", "B"});
    const GroupIndex gi = build_group_index(ds, {"group"});
    const SuppressResult res = suppress_correlated(ds, gi, 0.99);
    REQUIRE(res.dropped == std::vector<std::string>{"f0"});
    REQUIRE(res.data.feature_names == std::vector<std::string>{"f1"});
}

TEST_CASE("suppress_correlated retains constant features with a warning") {
    const Dataset ds = testutil::make_dataset({{7, 1}, {7, 2}, {7, 3}, {7, 4}}, {0, 1, 0, 1},
                                              {"A", "A", "B", "B"});
    const GroupIndex gi = build_group_index(ds, {"group"});
    const SuppressResult res = suppress_correlated(ds, gi, 0.4);
    REQUIRE(res.dropped.empty() == false);  // f1 perfectly tracks groups
    REQUIRE(std::find(res.data.feature_names.begin(), res.data.feature_names.end(), "f0") !=
            res.data.feature_names.end());
    REQUIRE(!res.warnings.empty());
}

TEST_CASE("suppress_correlated agrees with a direct correlation oracle") {
    Rng rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 60;
        Matrix feats(n, std::vector<double>(6));
        std::vector<std::string> groups;
        std::vector<int> labels;
        for (std::size_t i = 0; i < n; ++i) {
            const bool in_b = rng.index(2) == 1;
            groups.push_back(in_b ? "B" : "A");
            labels.push_back(static_cast<int>(rng.index(2)));
            for (std::size_t f = 0; f < 6; ++f) {
                const double signal = static_cast<double>(in_b) * rng.uniform(0.0, 2.0);
                feats[i][f] = rng.normal() + (f % 2 == 0 ? signal : 0.0);
            }
        }
        const Dataset ds = testutil::make_dataset(feats, labels, groups);
        const GroupIndex gi = build_group_index(ds, {"group"});
        const SuppressResult res = suppress_correlated(ds, gi, 0.4);

        // independent Pearson computation
        std::vector<std::string> expected;
        std::vector<double> g(n);
        for (std::size_t i : gi.members[1]) g[i] = 1.0;
        const double gm = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
        for (std::size_t f = 0; f < 6; ++f) {
            double xm = 0;
            for (std::size_t i = 0; i < n; ++i) xm += feats[i][f];
            xm /= static_cast<double>(n);
            double sxx = 0, sgg = 0, sxg = 0;
            for (std::size_t i = 0; i < n; ++i) {
                sxx += (feats[i][f] - xm) * (feats[i][f] - xm);
                sgg += (g[i] - gm) * (g[i] - gm);
                sxg += (feats[i][f] - xm) * (g[i] - gm);
            }
            if (std::abs(sxg / std::sqrt(sxx * sgg)) >= 0.4) {
                expected.push_back(ds.feature_names[f]);
            }
        }
        REQUIRE(res.dropped == expected);
    }
}

TEST_CASE("reweight reproduces the worked cell weight") {
    // n = 100: (A, 1) = 10, (A, 0) = 30, (B, 1) = 30, (B, 0) = 30
    Matrix feats;
    std::vector<int> labels;
    std::vector<std::string> groups;
    auto emit = [&](const std::string& grp, int label, int count) {
        for (int i = 0; i < count; ++i) {
            feats.push_back({static_cast<double>(feats.size())});
            labels.push_back(label);
            groups.push_back(grp);
        }
    };
    emit("A", 1, 10);
    emit("A", 0, 30);
    emit("B", 1, 30);
    emit("B", 0, 30);
    const Dataset ds = testutil::make_dataset(feats, labels, groups);
    const GroupIndex gi = build_group_index(ds, {"group"});
    const auto weights = reweight(ds, gi);
    REQUIRE(weights[0] == Approx(1.6).margin(1e-12));           // (A, 1)
    REQUIRE(weights[10] == Approx(0.4 * 0.6 / 0.3).margin(1e-12));  // (A, 0)
    REQUIRE(weights[40] == Approx(0.6 * 0.4 / 0.3).margin(1e-12));  // (B, 1)
    REQUIRE(weights[70] == Approx(0.6 * 0.6 / 0.3).margin(1e-12));  // (B, 0)

    SECTION("weighted positive rates are exactly equal") {
        double rate[2];
        for (std::size_t g = 0; g < 2; ++g) {
            double pos = 0, tot = 0;
            for (std::size_t i : gi.members[g]) {
                pos += weights[i] * ds.labels[i];
                tot += weights[i];
            }
            rate[g] = pos / tot;
        }
        REQUIRE(std::abs(rate[0] - rate[1]) <= 1e-12);
    }
    SECTION("weights are strictly positive") {
        for (double w : weights) REQUIRE(w > 0.0);
    }
}

TEST_CASE("reweight yields unit weights for independent group and label") {
    Matrix feats;
    std::vector<int> labels;
    std::vector<std::string> groups;
    for (int i = 0; i < 40; ++i) {
        feats.push_back({static_cast<double>(i)});
        labels.push_back(i % 2);
        groups.push_back(i < 20 ? "A" : "B");
    }
    const Dataset ds = testutil::make_dataset(feats, labels, groups);
    const auto weights = reweight(ds, build_group_index(ds, {"group"}));
    for (double w : weights) REQUIRE(w == Approx(1.0).margin(1e-12));
}

TEST_CASE("reweight rejects an empty cell naming it") {
    const Dataset ds = testutil::make_dataset({{0.0}, {1.0}, {2.0}, {3.0}}, {1, 1, 0, 1},
                                              {"A", "A", "B", "B"});
    REQUIRE_THROWS_MATCHES(
        reweight(ds, build_group_index(ds, {"group"})), ValidationError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("A")));
}

namespace {

Dataset massage_fixture(std::vector<double>& scores, std::size_t unpriv_pos,
                        std::size_t priv_pos) {
    Matrix feats;
    std::vector<int> labels;
    std::vector<std::string> groups;
    Rng rng(55);
    scores.clear();
    for (std::size_t i = 0; i < 10; ++i) {
        feats.push_back({static_cast<double>(i)});
        labels.push_back(i < unpriv_pos ? 1 : 0);
        groups.push_back("A");  // unprivileged
        scores.push_back(rng.uniform01());
    }
    for (std::size_t i = 0; i < 10; ++i) {
        feats.push_back({static_cast<double>(10 + i)});
        labels.push_back(i < priv_pos ? 1 : 0);
        groups.push_back("B");
        scores.push_back(rng.uniform01());
    }
    return testutil::make_dataset(feats, labels, groups);
}

}  // namespace

TEST_CASE("massage flips the minimal pair count") {
    std::vector<double> scores;
    const Dataset ds = massage_fixture(scores, 2, 6);
    const GroupIndex gi = build_group_index(ds, {"group"});
    const MassageResult res = massage(ds, gi, 0, scores);

    // integer-search oracle for the minimal M
    const double tol = 1.0 / 20.0;
    std::size_t expected_m = 0;
    for (std::size_t m = 0;; ++m) {
        if (std::abs((2.0 + m) / 10.0 - (6.0 - m) / 10.0) <= tol) {
            expected_m = m;
            break;
        }
    }
    REQUIRE(expected_m == 2);
    REQUIRE(res.pairs == expected_m);
    REQUIRE(res.flips.size() == 2 * expected_m);
    REQUIRE(res.data.features == ds.features);

    SECTION("flip selection follows score order") {
        std::vector<std::size_t> unpriv_neg;
        for (std::size_t i : gi.members[0]) {
            if (ds.labels[i] == 0) unpriv_neg.push_back(i);
        }
        std::sort(unpriv_neg.begin(), unpriv_neg.end(), [&](std::size_t a, std::size_t b) {
            return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
        });
        for (std::size_t k = 0; k < res.pairs; ++k) {
            REQUIRE(res.data.labels[unpriv_neg[k]] == 1);  // top-M scored negatives flipped
        }
        for (std::size_t k = res.pairs; k < unpriv_neg.size(); ++k) {
            REQUIRE(res.data.labels[unpriv_neg[k]] == 0);
        }
    }
    SECTION("exactly 2M labels change") {
        std::size_t changed = 0;
        for (std::size_t i = 0; i < ds.n_records(); ++i) {
            changed += res.data.labels[i] != ds.labels[i];
        }
        REQUIRE(changed == 2 * res.pairs);
    }
}

TEST_CASE("massage with equal rates is a no-op") {
    std::vector<double> scores;
    const Dataset ds = massage_fixture(scores, 4, 4);
    const MassageResult res = massage(ds, build_group_index(ds, {"group"}), 0, scores);
    REQUIRE(res.pairs == 0);
    REQUIRE(res.data == ds);
}

TEST_CASE("massage reports the attainable residual gap when stuck") {
    // unprivileged all positive already; privileged none: no flips can help
    std::vector<double> scores(8, 0.5);
    const Dataset ds = testutil::make_dataset(
        {{0.0}, {1.0}, {2.0}, {3.0}, {4.0}, {5.0}, {6.0}, {7.0}},
        {1, 1, 1, 1, 0, 0, 0, 0}, {"A", "A", "A", "A", "B", "B", "B", "B"});
    REQUIRE_THROWS_MATCHES(
        massage(ds, build_group_index(ds, {"group"}), 0, scores), ValidationError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("gap")));
}

TEST_CASE("di_repair hand case moves both groups to the rank medians") {
    const Dataset ds = testutil::make_dataset({{1}, {2}, {3}, {3}, {4}, {5}}, {0, 0, 0, 1, 1, 1},
                                              {"A", "A", "A", "B", "B", "B"});
    const GroupIndex gi = build_group_index(ds, {"group"});
    const Dataset out = di_repair(ds, gi, {0.8, 1.0});
    REQUIRE(out.features[0][0] == Approx(2.0).margin(1e-12));
    REQUIRE(out.features[1][0] == Approx(3.0).margin(1e-12));
    REQUIRE(out.features[2][0] == Approx(4.0).margin(1e-12));
    REQUIRE(out.features[3][0] == Approx(2.0).margin(1e-12));
    REQUIRE(out.features[4][0] == Approx(3.0).margin(1e-12));
    REQUIRE(out.features[5][0] == Approx(4.0).margin(1e-12));
    REQUIRE(out.labels == ds.labels);
}

TEST_CASE("di_repair at lambda 0 is the identity") {
    const Dataset ds = generate_synthetic({20, 20, 1.5, 2.0, 0.1, 2}, 3);
    const GroupIndex gi = build_group_index(ds, {"group"});
    REQUIRE(di_repair(ds, gi, {0.8, 0.0}) == ds);
}

TEST_CASE("di_repair at lambda 1 removes the group distance") {
    const Dataset ds = generate_synthetic({150, 150, 2.0, 1.0, 0.0, 3}, 9);
    const GroupIndex gi = build_group_index(ds, {"group"});
    const Dataset out = di_repair(ds, gi, {0.8, 1.0});
    const GroupDistance d = group_feature_distance(out, gi);
    for (double v : d.per_feature) REQUIRE(v <= 1e-9);
}

TEST_CASE("di_repair preserves within-group ordering") {
    Rng rng(66);
    const Dataset ds = generate_synthetic({40, 60, 1.0, 3.0, 0.2, 2}, 13);
    const GroupIndex gi = build_group_index(ds, {"group"});
    for (double lambda : {0.3, 0.7, 1.0}) {
        const Dataset out = di_repair(ds, gi, {0.8, lambda});
        for (std::size_t g = 0; g < 2; ++g) {
            for (std::size_t f = 0; f < ds.n_features(); ++f) {
                for (int t = 0; t < 50; ++t) {
                    const std::size_t i = gi.members[g][rng.index(gi.members[g].size())];
                    const std::size_t j = gi.members[g][rng.index(gi.members[g].size())];
                    if (ds.features[i][f] <= ds.features[j][f]) {
                        REQUIRE(out.features[i][f] <= out.features[j][f] + 1e-12);
                    }
                }
            }
        }
    }
}

TEST_CASE("thresholding a fully repaired feature almost equalizes selection") {
    const Dataset ds = generate_synthetic({120, 80, 1.2, 1.0, 0.0, 1}, 17);
    const GroupIndex gi = build_group_index(ds, {"group"});
    const Dataset out = di_repair(ds, gi, {0.8, 1.0});
    std::vector<double> col;
    for (const auto& row : out.features) col.push_back(row[0]);
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    const double cut = sorted[sorted.size() / 2];
    std::vector<int> preds;
    for (double v : col) preds.push_back(v >= cut ? 1 : 0);
    const FairnessReport rep =
        parity_report(preds, std::nullopt, out, gi, {1, 1}, {0.8, std::size_t{1}});
    const double bound = 2.0 / 80.0;
    REQUIRE(*rep.dp_ratio >= 1.0 - bound);
    REQUIRE(*rep.dp_ratio <= 1.0 + bound);
}
