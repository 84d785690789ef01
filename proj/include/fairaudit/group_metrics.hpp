#pragma once
// Group-fairness measures over hard predictions: per-group confusion counts,
// parity ratios and rate gaps, the weighted error loss, and intersectional
// subgroup audits. Rates with an empty denominator surface as explicit
// "undefined" values, never NaN.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"

namespace fairaudit {

struct ConfusionCounts {
    double tp = 0.0, fp = 0.0, tn = 0.0, fn = 0.0;  // weighted when record weights are set

    double total() const { return tp + fp + tn + fn; }
    std::optional<double> fnr() const {
        return fn + tp > 0.0 ? std::optional<double>(fn / (fn + tp)) : std::nullopt;
    }
    std::optional<double> fpr() const {
        return fp + tn > 0.0 ? std::optional<double>(fp / (fp + tn)) : std::nullopt;
    }
    std::optional<double> tpr() const {
        return fn + tp > 0.0 ? std::optional<double>(tp / (fn + tp)) : std::nullopt;
    }
    std::optional<double> ppv() const {
        return tp + fp > 0.0 ? std::optional<double>(tp / (tp + fp)) : std::nullopt;
    }
    std::optional<double> positive_rate() const {
        return total() > 0.0 ? std::optional<double>((tp + fp) / total()) : std::nullopt;
    }
};

struct CostSpec {
    double alpha = 1.0;  // loss per false negative
    double beta = 1.0;   // loss per false positive
};

inline void validate(const CostSpec& c) {
    if (c.alpha < 0.0 || c.beta < 0.0 || !(c.alpha + c.beta > 0.0)) {
        throw ValidationError("cost spec requires alpha, beta >= 0 and alpha + beta > 0");
    }
}

inline std::vector<ConfusionCounts> confusion_by_group(const std::vector<int>& preds,
                                                       const Dataset& ds, const GroupIndex& gi) {
    if (preds.size() != ds.n_records()) {
        throw ValidationError("prediction vector length does not match record count");
    }
    std::vector<ConfusionCounts> counts(gi.n_groups());
    for (std::size_t g = 0; g < gi.n_groups(); ++g) {
        for (std::size_t i : gi.members[g]) {
            const double w = ds.weight(i);
            if (ds.labels[i] == 1) {
                (preds[i] == 1 ? counts[g].tp : counts[g].fn) += w;
            } else {
                (preds[i] == 1 ? counts[g].fp : counts[g].tn) += w;
            }
        }
    }
    return counts;
}

// Sum over groups of (alpha*FNR + beta*FPR) * W; undefined rates contribute 0.
inline double weighted_error_loss(const std::vector<ConfusionCounts>& counts,
                                  const GroupIndex& gi, const CostSpec& costs) {
    if (counts.size() != gi.n_groups()) {
        throw ValidationError("confusion counts do not cover all groups");
    }
    validate(costs);
    double loss = 0.0;
    for (std::size_t g = 0; g < counts.size(); ++g) {
        double term = 0.0;
        if (auto r = counts[g].fnr()) term += costs.alpha * *r;
        if (auto r = counts[g].fpr()) term += costs.beta * *r;
        loss += term * gi.weights[g];
    }
    return loss;
}

// Max pairwise |FNR_i - FNR_j| over groups with a defined rate; 0 when fewer
// than two rates are defined.
inline double fn_gap_max(const std::vector<ConfusionCounts>& counts) {
    double lo = 1.0, hi = 0.0;
    std::size_t defined = 0;
    for (const auto& c : counts) {
        if (auto r = c.fnr()) {
            lo = std::min(lo, *r);
            hi = std::max(hi, *r);
            ++defined;
        }
    }
    return defined >= 2 ? hi - lo : 0.0;
}

struct ParityOptions {
    double tau_di = 0.8;                      // disparate-impact threshold
    std::optional<std::size_t> privileged;    // group id; fixes dp_ratio orientation
};

struct FairnessReport {
    std::vector<std::string> group_names;
    std::vector<ConfusionCounts> per_group;
    std::vector<std::optional<double>> mean_scores;  // present when scores were supplied
    std::optional<double> dp_ratio;
    bool di_flagged = false;
    double tau_di = 0.8;
    std::optional<double> tpr_gap, fpr_gap, eopp_gap, ppv_gap, fn_gap;
    double weighted_loss = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

// Max pairwise gap; undefined (with a warning) as soon as any group's rate is.
template <typename RateFn>
inline std::optional<double> report_gap(const std::vector<ConfusionCounts>& counts, RateFn rate,
                                        const char* what, std::vector<std::string>& warnings,
                                        const std::vector<std::string>& names) {
    double lo = 1.0, hi = 0.0;
    for (std::size_t g = 0; g < counts.size(); ++g) {
        const auto r = rate(counts[g]);
        if (!r) {
            warnings.push_back(std::string(what) + " undefined for group '" + names[g] +
                               "' (empty denominator)");
            return std::nullopt;
        }
        lo = std::min(lo, *r);
        hi = std::max(hi, *r);
    }
    return counts.size() >= 2 ? std::optional<double>(hi - lo) : std::optional<double>(0.0);
}

}  // namespace detail

inline FairnessReport parity_report(const std::vector<int>& preds,
                                    const std::optional<std::vector<double>>& scores,
                                    const Dataset& ds, const GroupIndex& gi,
                                    const CostSpec& costs, const ParityOptions& opt = {}) {
    if (scores && scores->size() != ds.n_records()) {
        throw ValidationError("score vector length does not match record count");
    }
    FairnessReport rep;
    rep.tau_di = opt.tau_di;
    rep.per_group = confusion_by_group(preds, ds, gi);
    for (std::size_t g = 0; g < gi.n_groups(); ++g) rep.group_names.push_back(gi.label(g));

    if (scores) {
        for (std::size_t g = 0; g < gi.n_groups(); ++g) {
            double sum = 0.0, wsum = 0.0;
            for (std::size_t i : gi.members[g]) {
                sum += ds.weight(i) * (*scores)[i];
                wsum += ds.weight(i);
            }
            rep.mean_scores.push_back(wsum > 0.0 ? std::optional<double>(sum / wsum)
                                                 : std::nullopt);
        }
    }

    std::vector<double> pos_rate(gi.n_groups(), 0.0);
    for (std::size_t g = 0; g < gi.n_groups(); ++g) {
        const auto r = rep.per_group[g].positive_rate();
        pos_rate[g] = r ? *r : 0.0;  // groups are non-empty, so r is always set
    }

    if (gi.n_groups() == 2 && opt.privileged) {
        const std::size_t priv = *opt.privileged;
        if (priv >= 2) throw ValidationError("privileged group index out of range");
        const std::size_t unpriv = 1 - priv;
        if (pos_rate[priv] > 0.0) {
            rep.dp_ratio = pos_rate[unpriv] / pos_rate[priv];
        } else {
            rep.warnings.push_back("dp_ratio undefined: privileged group '" +
                                   rep.group_names[priv] + "' has no positive predictions");
        }
    } else {
        // Conservative multi-group form: min over ordered pairs rate_i / rate_j.
        std::optional<double> best;
        for (std::size_t i = 0; i < gi.n_groups(); ++i) {
            for (std::size_t j = 0; j < gi.n_groups(); ++j) {
                if (i == j || pos_rate[j] <= 0.0) continue;
                const double ratio = pos_rate[i] / pos_rate[j];
                if (!best || ratio < *best) best = ratio;
            }
        }
        rep.dp_ratio = best;
        if (!best) {
            rep.warnings.push_back("dp_ratio undefined: no group has positive predictions");
        }
    }
    rep.di_flagged = rep.dp_ratio.has_value() && *rep.dp_ratio <= opt.tau_di;

    rep.tpr_gap = detail::report_gap(
        rep.per_group, [](const ConfusionCounts& c) { return c.tpr(); }, "tpr_gap", rep.warnings,
        rep.group_names);
    rep.fpr_gap = detail::report_gap(
        rep.per_group, [](const ConfusionCounts& c) { return c.fpr(); }, "fpr_gap", rep.warnings,
        rep.group_names);
    rep.eopp_gap = rep.tpr_gap;  // equal opportunity constrains the TPR only
    rep.ppv_gap = detail::report_gap(
        rep.per_group, [](const ConfusionCounts& c) { return c.ppv(); }, "ppv_gap", rep.warnings,
        rep.group_names);
    rep.fn_gap = detail::report_gap(
        rep.per_group, [](const ConfusionCounts& c) { return c.fnr(); }, "fn_gap_max",
        rep.warnings, rep.group_names);
    rep.weighted_loss = weighted_error_loss(rep.per_group, gi, costs);
    return rep;
}

// ---------------------------------------------------------------------------
// Intersectional subgroup audit.

struct SubgroupRow {
    GroupKey values;
    std::size_t size = 0;
    std::optional<double> fnr, fpr;
    bool supported = false;
};

struct SubgroupReport {
    std::vector<std::string> attrs;
    std::size_t potential_intersections = 0;  // product of observed value counts
    std::size_t observed = 0;                 // non-empty intersections
    std::size_t supported = 0;                // observed with size >= min_support
    std::size_t min_support = 0;
    std::size_t pairwise_constraints = 0;     // g(g-1)/2 over supported subgroups
    std::vector<SubgroupRow> rows;
};

inline SubgroupReport audit_subgroups(const Dataset& ds, const std::vector<int>& preds,
                                      const std::vector<std::string>& attrs,
                                      std::size_t min_support) {
    if (attrs.empty()) throw ValidationError("subgroup audit requires at least one attribute");
    if (preds.size() != ds.n_records()) {
        throw ValidationError("prediction vector length does not match record count");
    }
    GroupIndex gi = build_group_index(ds, attrs);

    SubgroupReport rep;
    rep.attrs = attrs;
    rep.min_support = min_support;

    rep.potential_intersections = 1;
    for (const auto& a : attrs) {
        const std::size_t col =
            static_cast<std::size_t>(std::find(ds.protected_names.begin(),
                                               ds.protected_names.end(), a) -
                                     ds.protected_names.begin());
        std::vector<std::string> values = ds.protected_cols[col];
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        rep.potential_intersections *= values.size();
    }

    const auto counts = confusion_by_group(preds, ds, gi);
    for (std::size_t g = 0; g < gi.n_groups(); ++g) {
        SubgroupRow row;
        row.values = gi.keys[g];
        row.size = gi.members[g].size();
        row.fnr = counts[g].fnr();
        row.fpr = counts[g].fpr();
        row.supported = row.size >= min_support;
        if (row.supported) ++rep.supported;
        rep.rows.push_back(std::move(row));
    }
    rep.observed = gi.n_groups();
    rep.pairwise_constraints = rep.supported * (rep.supported - 1) / 2;
    return rep;
}

}  // namespace fairaudit
