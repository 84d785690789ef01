#pragma once
// Pre-processing repairs: sensitive-feature removal, correlation suppression,
// label massaging, reweighting, and the rank-preserving disparate-impact
// remover. All transformations return new datasets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"

namespace fairaudit {

struct DiSpec {
    double tau_di = 0.8;        // disparate-impact flag threshold
    double repair_amount = 1.0; // lambda in [0, 1]; 1 fully equalizes distributions
};

inline void validate(const DiSpec& spec) {
    if (!(spec.tau_di > 0.0 && spec.tau_di <= 1.0)) {
        throw ValidationError("tau_di must lie in (0, 1]");
    }
    if (spec.repair_amount < 0.0 || spec.repair_amount > 1.0) {
        throw ValidationError("repair_amount must lie in [0, 1]");
    }
}

// Unawareness: drop the feature columns flagged sensitive in the schema.
// Protected attributes stay attached as metadata so audits keep working.
inline Dataset drop_sensitive(const Dataset& ds) {
    if (ds.sensitive_features.empty()) return ds;
    Dataset out = ds;
    out.feature_names.clear();
    out.sensitive_features.clear();
    std::vector<std::size_t> keep;
    for (std::size_t f = 0; f < ds.n_features(); ++f) {
        if (std::find(ds.sensitive_features.begin(), ds.sensitive_features.end(),
                      ds.feature_names[f]) == ds.sensitive_features.end()) {
            keep.push_back(f);
            out.feature_names.push_back(ds.feature_names[f]);
        }
    }
    for (std::size_t i = 0; i < ds.n_records(); ++i) {
        out.features[i].clear();
        for (std::size_t f : keep) out.features[i].push_back(ds.features[i][f]);
    }
    return out;
}

struct SuppressResult {
    Dataset data;
    std::vector<std::string> dropped;
    std::vector<std::string> warnings;
};

// Drop every feature whose |Pearson correlation| with the 0/1 group indicator
// reaches rho_threshold. Constant features have no defined correlation and are
// retained with a warning.
inline SuppressResult suppress_correlated(const Dataset& ds, const GroupIndex& gi,
                                          double rho_threshold) {
    if (gi.n_groups() != 2) {
        throw ValidationError("suppress_correlated supports exactly 2 groups");
    }
    if (!(rho_threshold > 0.0 && rho_threshold <= 1.0)) {
        throw ValidationError("rho_threshold must lie in (0, 1]");
    }
    const std::size_t n = ds.n_records();
    std::vector<double> g(n, 0.0);
    for (std::size_t i : gi.members[1]) g[i] = 1.0;
    const double g_mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
    double g_var = 0.0;
    for (double v : g) g_var += (v - g_mean) * (v - g_mean);

    SuppressResult out;
    std::vector<std::size_t> keep;
    for (std::size_t f = 0; f < ds.n_features(); ++f) {
        double x_mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) x_mean += ds.features[i][f];
        x_mean /= static_cast<double>(n);
        double x_var = 0.0, cov = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = ds.features[i][f] - x_mean;
            x_var += c * c;
            cov += c * (g[i] - g_mean);
        }
        if (x_var == 0.0) {
            out.warnings.push_back("feature '" + ds.feature_names[f] +
                                   "' is constant; correlation undefined, retained");
            keep.push_back(f);
            continue;
        }
        const double rho = cov / std::sqrt(x_var * g_var);
        if (std::abs(rho) >= rho_threshold) {
            out.dropped.push_back(ds.feature_names[f]);
        } else {
            keep.push_back(f);
        }
    }
    out.data = ds;
    out.data.feature_names.clear();
    for (std::size_t f : keep) out.data.feature_names.push_back(ds.feature_names[f]);
    for (std::size_t i = 0; i < n; ++i) {
        out.data.features[i].clear();
        for (std::size_t f : keep) out.data.features[i].push_back(ds.features[i][f]);
    }
    out.data.sensitive_features.clear();
    for (const auto& s : ds.sensitive_features) {
        if (std::find(out.dropped.begin(), out.dropped.end(), s) == out.dropped.end()) {
            out.data.sensitive_features.push_back(s);
        }
    }
    return out;
}

// Weight P(S=s)P(Y=y)/P(S=s,Y=y) per record; makes group and label independent
// in the weighted empirical distribution, so weighted label rates coincide
// exactly across groups.
inline std::vector<double> reweight(const Dataset& ds, const GroupIndex& gi) {
    const double n = static_cast<double>(ds.n_records());
    std::vector<std::array<double, 2>> cell(gi.n_groups(), {0.0, 0.0});
    std::array<double, 2> label_count = {0.0, 0.0};
    for (std::size_t g = 0; g < gi.n_groups(); ++g) {
        for (std::size_t i : gi.members[g]) {
            cell[g][static_cast<std::size_t>(ds.labels[i])] += 1.0;
            label_count[static_cast<std::size_t>(ds.labels[i])] += 1.0;
        }
    }
    for (std::size_t g = 0; g < gi.n_groups(); ++g) {
        for (int y : {0, 1}) {
            if (cell[g][static_cast<std::size_t>(y)] == 0.0) {
                throw ValidationError("reweight: empty cell (group '" + gi.label(g) +
                                      "', label " + std::to_string(y) + ")");
            }
        }
    }
    std::vector<double> weights(ds.n_records(), 1.0);
    for (std::size_t g = 0; g < gi.n_groups(); ++g) {
        const double group_size = static_cast<double>(gi.members[g].size());
        for (std::size_t i : gi.members[g]) {
            const auto y = static_cast<std::size_t>(ds.labels[i]);
            weights[i] = (group_size / n) * (label_count[y] / n) / (cell[g][y] / n);
        }
    }
    return weights;
}

struct LabelFlip {
    std::size_t record = 0;
    int from = 0, to = 0;
};

struct MassageResult {
    Dataset data;
    std::vector<LabelFlip> flips;
    std::size_t pairs = 0;  // M: paired flips performed
};

// Flip the M highest-scored negatives in the unprivileged group to positive
// and the M lowest-scored positives in the privileged group to negative, with
// M minimal such that the group positive rates agree within 1/n.
inline MassageResult massage(const Dataset& ds, const GroupIndex& gi, std::size_t unprivileged,
                             const std::vector<double>& scores) {
    if (gi.n_groups() != 2) throw ValidationError("massage supports exactly 2 groups");
    if (unprivileged >= 2) throw ValidationError("unprivileged group index out of range");
    if (scores.size() != ds.n_records()) throw ValidationError("score vector length mismatch");
    const std::size_t priv = 1 - unprivileged;

    std::vector<std::size_t> unpriv_neg, priv_pos;
    double pos_u = 0;
    for (std::size_t i : gi.members[unprivileged]) {
        if (ds.labels[i] == 1) {
            pos_u += 1;
        } else {
            unpriv_neg.push_back(i);
        }
    }
    for (std::size_t i : gi.members[priv]) {
        if (ds.labels[i] == 1) priv_pos.push_back(i);
    }
    const double pos_p = static_cast<double>(priv_pos.size());
    const double n_u = static_cast<double>(gi.members[unprivileged].size());
    const double n_p = static_cast<double>(gi.members[priv].size());
    const double tol = 1.0 / static_cast<double>(ds.n_records());

    const std::size_t m_max = std::min(unpriv_neg.size(), priv_pos.size());
    std::size_t m = 0;
    bool found = false;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t cand = 0; cand <= m_max; ++cand) {
        const double gap = std::abs((pos_u + static_cast<double>(cand)) / n_u -
                                    (pos_p - static_cast<double>(cand)) / n_p);
        best_gap = std::min(best_gap, gap);
        if (gap <= tol) {
            m = cand;
            found = true;
            break;
        }
    }
    if (!found) {
        throw ValidationError("massage: cannot equalize rates within 1/n; best attainable gap " +
                              std::to_string(best_gap));
    }

    // highest-scored unprivileged negatives; ties break on lower record index
    std::sort(unpriv_neg.begin(), unpriv_neg.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    });
    // lowest-scored privileged positives
    std::sort(priv_pos.begin(), priv_pos.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] != scores[b] ? scores[a] < scores[b] : a < b;
    });

    MassageResult out;
    out.data = ds;
    out.pairs = m;
    for (std::size_t k = 0; k < m; ++k) {
        out.data.labels[unpriv_neg[k]] = 1;
        out.flips.push_back({unpriv_neg[k], 0, 1});
        out.data.labels[priv_pos[k]] = 0;
        out.flips.push_back({priv_pos[k], 1, 0});
    }
    return out;
}

namespace detail {

// Hazen quantile of each record within its group (average rank at ties).
inline std::vector<double> within_group_quantiles(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b];
    });
    std::vector<double> q(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            q[order[k]] = (avg_rank - 0.5) / static_cast<double>(n);
        }
        i = j + 1;
    }
    return q;
}

// Left-continuous inverse empirical CDF.
inline double inverse_ecdf(const std::vector<double>& sorted, double q) {
    const auto n = static_cast<double>(sorted.size());
    auto idx = static_cast<std::ptrdiff_t>(std::ceil(q * n - 1e-12)) - 1;
    idx = std::max<std::ptrdiff_t>(0, std::min<std::ptrdiff_t>(idx, sorted.size() - 1));
    return sorted[static_cast<std::size_t>(idx)];
}

}  // namespace detail

// Rank-preserving within-group repair: each value moves toward the per-rank
// median of the groups' quantile functions, scaled by repair_amount.
inline Dataset di_repair(const Dataset& ds, const GroupIndex& gi, const DiSpec& spec) {
    validate(spec);
    if (gi.n_groups() != 2) throw ValidationError("di_repair supports exactly 2 groups");
    if (spec.repair_amount == 0.0) return ds;

    Dataset out = ds;
    const double lambda = spec.repair_amount;
    for (std::size_t f = 0; f < ds.n_features(); ++f) {
        std::vector<std::vector<double>> group_values(2), group_sorted(2);
        for (std::size_t g = 0; g < 2; ++g) {
            for (std::size_t i : gi.members[g]) group_values[g].push_back(ds.features[i][f]);
            group_sorted[g] = group_values[g];
            std::sort(group_sorted[g].begin(), group_sorted[g].end());
        }
        for (std::size_t g = 0; g < 2; ++g) {
            const auto quantiles = detail::within_group_quantiles(group_values[g]);
            for (std::size_t m = 0; m < gi.members[g].size(); ++m) {
                const double q = quantiles[m];
                const double target = (detail::inverse_ecdf(group_sorted[0], q) +
                                       detail::inverse_ecdf(group_sorted[1], q)) /
                                      2.0;  // median of two quantile functions
                const std::size_t i = gi.members[g][m];
                out.features[i][f] = (1.0 - lambda) * ds.features[i][f] + lambda * target;
            }
        }
    }
    return out;
}

}  // namespace fairaudit
