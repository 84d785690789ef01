#pragma once
// Tabular datasets with protected attributes: validation, group partitioning,
// stratified splits, standardization, and a seeded synthetic generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairaudit/errors.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit {

using Matrix = std::vector<std::vector<double>>;

struct Dataset {
    Matrix features;                                       // n_records x n_features
    std::vector<int> labels;                               // values in {0, 1}
    std::vector<std::string> feature_names;
    std::vector<std::string> protected_names;
    std::vector<std::vector<std::string>> protected_cols;  // [attr][record]
    std::vector<double> weights;                           // empty = unit weights
    std::vector<std::string> sensitive_features;           // feature columns slated for drop_sensitive
    std::string label_name = "y";
    std::string weight_name = "weight";

    std::size_t n_records() const { return labels.size(); }
    std::size_t n_features() const { return feature_names.size(); }
    double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }

    bool operator==(const Dataset&) const = default;
};

inline void validate(const Dataset& ds) {
    const std::size_t n = ds.n_records();
    if (ds.features.size() != n) {
        throw ValidationError("feature row count does not match label count");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (ds.features[i].size() != ds.feature_names.size()) {
            throw ValidationError("row " + std::to_string(i + 1) + " has wrong feature dimension");
        }
        for (double v : ds.features[i]) {
            if (!std::isfinite(v)) {
                throw ValidationError("row " + std::to_string(i + 1) + " has a non-finite feature");
            }
        }
        if (ds.labels[i] != 0 && ds.labels[i] != 1) {
            throw ValidationError("row " + std::to_string(i + 1) + " has non-binary label");
        }
    }
    if (ds.protected_cols.size() != ds.protected_names.size()) {
        throw ValidationError("protected attribute count mismatch");
    }
    for (std::size_t a = 0; a < ds.protected_cols.size(); ++a) {
        if (ds.protected_cols[a].size() != n) {
            throw ValidationError("protected attribute '" + ds.protected_names[a] +
                                  "' is not present for every record");
        }
    }
    if (!ds.weights.empty()) {
        if (ds.weights.size() != n) throw ValidationError("weight count mismatch");
        for (double w : ds.weights) {
            if (!(w > 0.0) || !std::isfinite(w)) {
                throw ValidationError("weights must be strictly positive and finite");
            }
        }
    }
}

// Rows selected by index, in the given order.
inline Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.protected_names = ds.protected_names;
    out.sensitive_features = ds.sensitive_features;
    out.label_name = ds.label_name;
    out.weight_name = ds.weight_name;
    out.protected_cols.resize(ds.protected_cols.size());
    for (std::size_t i : rows) {
        out.features.push_back(ds.features[i]);
        out.labels.push_back(ds.labels[i]);
        for (std::size_t a = 0; a < ds.protected_cols.size(); ++a) {
            out.protected_cols[a].push_back(ds.protected_cols[a][i]);
        }
        if (!ds.weights.empty()) out.weights.push_back(ds.weights[i]);
    }
    return out;
}

using GroupKey = std::vector<std::string>;

inline std::string group_label(const GroupKey& key) {
    std::string out;
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (i) out += '|';
        out += key[i];
    }
    return out;
}

// Partition of records by protected-attribute value tuple, ordered
// lexicographically by value so reports are stable.
struct GroupIndex {
    std::vector<std::string> attrs;
    std::vector<GroupKey> keys;
    std::vector<std::vector<std::size_t>> members;
    std::vector<double> weights;             // group size / n_records
    std::vector<std::size_t> record_group;   // record index -> group id

    std::size_t n_groups() const { return keys.size(); }
    std::size_t group_of(std::size_t record) const { return record_group[record]; }
    std::string label(std::size_t g) const { return group_label(keys[g]); }
};

inline GroupIndex build_group_index(const Dataset& ds, const std::vector<std::string>& attrs) {
    if (attrs.empty()) throw ValidationError("grouping requires at least one attribute");
    std::vector<std::size_t> attr_idx;
    for (const auto& a : attrs) {
        auto it = std::find(ds.protected_names.begin(), ds.protected_names.end(), a);
        if (it == ds.protected_names.end()) {
            throw ValidationError("unknown protected attribute '" + a + "'");
        }
        attr_idx.push_back(static_cast<std::size_t>(it - ds.protected_names.begin()));
    }
    std::map<GroupKey, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < ds.n_records(); ++i) {
        GroupKey key;
        for (std::size_t a : attr_idx) key.push_back(ds.protected_cols[a][i]);
        buckets[key].push_back(i);
    }
    GroupIndex gi;
    gi.attrs = attrs;
    gi.record_group.resize(ds.n_records());
    const double n = static_cast<double>(ds.n_records());
    for (auto& [key, members] : buckets) {
        for (std::size_t i : members) gi.record_group[i] = gi.keys.size();
        gi.keys.push_back(key);
        gi.weights.push_back(static_cast<double>(members.size()) / n);
        gi.members.push_back(std::move(members));
    }
    return gi;
}

inline std::optional<std::size_t> find_group(const GroupIndex& gi, const GroupKey& key) {
    for (std::size_t g = 0; g < gi.n_groups(); ++g) {
        if (gi.keys[g] == key) return g;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Synthetic two-group generator.

struct SyntheticSpec {
    std::size_t n_group_a = 0;
    std::size_t n_group_b = 0;
    double mean_shift = 0.0;       // group-B feature means sit at this offset
    double variance_ratio = 1.0;   // group-B feature variance
    double base_rate_offset = 0.0; // base_rate(B) - base_rate(A), in [-0.5, 0.5]
    std::size_t n_features = 1;
};

inline void validate(const SyntheticSpec& spec) {
    if (spec.n_group_a < 10 || spec.n_group_b < 10) {
        throw ValidationError("synthetic spec requires at least 10 records per group");
    }
    if (!(spec.variance_ratio > 0.0)) throw ValidationError("variance_ratio must be positive");
    if (spec.base_rate_offset < -0.5 || spec.base_rate_offset > 0.5) {
        throw ValidationError("base_rate_offset must lie in [-0.5, 0.5]");
    }
    if (spec.n_features < 1) throw ValidationError("n_features must be at least 1");
}

// Labels follow a logistic link on the first feature, re-centered per group so
// the per-group intercept alone carries base_rate_offset.
inline Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    validate(spec);
    Dataset ds;
    for (std::size_t f = 0; f < spec.n_features; ++f) {
        ds.feature_names.push_back("f" + std::to_string(f));
    }
    ds.protected_names = {"group"};
    ds.protected_cols.resize(1);
    ds.label_name = "y";

    const double sd_b = std::sqrt(spec.variance_ratio);
    Rng feat = Rng(seed).split("synthetic.features");
    Rng lab = Rng(seed).split("synthetic.labels");

    const double rate_a = 0.5 - spec.base_rate_offset / 2.0;
    const double rate_b = 0.5 + spec.base_rate_offset / 2.0;
    auto logit = [](double p) {
        p = std::min(1.0 - 1e-9, std::max(1e-9, p));
        return std::log(p / (1.0 - p));
    };

    const std::size_t total = spec.n_group_a + spec.n_group_b;
    for (std::size_t i = 0; i < total; ++i) {
        const bool in_b = i >= spec.n_group_a;
        std::vector<double> row(spec.n_features);
        for (std::size_t f = 0; f < spec.n_features; ++f) {
            row[f] = in_b ? spec.mean_shift + sd_b * feat.normal() : feat.normal();
        }
        const double centered = row[0] - (in_b ? spec.mean_shift : 0.0);
        const double z = centered + logit(in_b ? rate_b : rate_a);
        const double p = 1.0 / (1.0 + std::exp(-z));
        ds.labels.push_back(lab.uniform01() < p ? 1 : 0);
        ds.features.push_back(std::move(row));
        ds.protected_cols[0].push_back(in_b ? "B" : "A");
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Stratified split.

inline std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                         std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValidationError("test_fraction must lie in (0, 1)");
    }
    GroupIndex gi = build_group_index(ds, ds.protected_names);
    Rng rng = Rng(seed).split("split");
    std::vector<std::size_t> test_rows;
    for (std::size_t g = 0; g < gi.n_groups(); ++g) {
        const std::size_t n_g = gi.members[g].size();
        if (n_g < 2) {
            throw ValidationError("group '" + gi.label(g) + "' is too small to stratify");
        }
        std::size_t n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(n_g)));
        n_test = std::max<std::size_t>(1, std::min(n_test, n_g - 1));
        std::vector<std::size_t> pool = gi.members[g];
        rng.shuffle(pool);
        test_rows.insert(test_rows.end(), pool.begin(), pool.begin() + n_test);
    }
    std::sort(test_rows.begin(), test_rows.end());
    std::vector<std::size_t> train_rows;
    std::size_t t = 0;
    for (std::size_t i = 0; i < ds.n_records(); ++i) {
        if (t < test_rows.size() && test_rows[t] == i) {
            ++t;
        } else {
            train_rows.push_back(i);
        }
    }
    return {subset(ds, train_rows), subset(ds, test_rows)};
}

// ---------------------------------------------------------------------------
// Standardization (population standard deviation, fit once on train).

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> sd;  // 0 marks a constant feature, mapped to 0

    Dataset apply(const Dataset& ds) const {
        if (ds.n_features() != mean.size()) {
            throw ValidationError("standardizer feature dimension mismatch");
        }
        Dataset out = ds;
        for (auto& row : out.features) {
            for (std::size_t f = 0; f < row.size(); ++f) {
                row[f] = sd[f] == 0.0 ? 0.0 : (row[f] - mean[f]) / sd[f];
            }
        }
        return out;
    }
};

inline Standardizer fit_standardizer(const Dataset& train) {
    const std::size_t n = train.n_records();
    if (n == 0) throw ValidationError("cannot standardize an empty dataset");
    const std::size_t d = train.n_features();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.sd.assign(d, 0.0);
    for (const auto& row : train.features) {
        for (std::size_t f = 0; f < d; ++f) s.mean[f] += row[f];
    }
    for (std::size_t f = 0; f < d; ++f) s.mean[f] /= static_cast<double>(n);
    for (const auto& row : train.features) {
        for (std::size_t f = 0; f < d; ++f) {
            const double c = row[f] - s.mean[f];
            s.sd[f] += c * c;
        }
    }
    for (std::size_t f = 0; f < d; ++f) s.sd[f] = std::sqrt(s.sd[f] / static_cast<double>(n));
    return s;
}

inline std::pair<Dataset, std::vector<Dataset>> standardize(const Dataset& train,
                                                            const std::vector<Dataset>& others) {
    const Standardizer s = fit_standardizer(train);
    std::vector<Dataset> out;
    out.reserve(others.size());
    for (const auto& o : others) out.push_back(s.apply(o));
    return {s.apply(train), std::move(out)};
}

}  // namespace fairaudit
