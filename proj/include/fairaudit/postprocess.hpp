#pragma once
// Post-processing: tolerance-bounded per-group threshold optimization,
// tolerance sweeps, equalized-odds label mixing, and reject-option
// classification.
//
// The threshold search is exhaustive over per-group candidate thresholds
// (0, 1, and midpoints between consecutive distinct scores), which enumerates
// every achievable confusion outcome, so the search is exact. Partial
// assignments whose FN rates already span more than the tolerance are pruned.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/group_metrics.hpp"
#include "fairaudit/rng.hpp"
#include "fairaudit/simplex.hpp"

namespace fairaudit {

struct ToleranceSpec {
    double tau_fn = 0.05;        // maximum allowed pairwise FN-rate gap
    bool include_fp_term = true; // carry the beta*FP term in the objective
};

inline void validate(const ToleranceSpec& t) {
    if (t.tau_fn < 0.0) throw ValidationError("tau_fn must be non-negative");
}

struct ThresholdPolicy {
    std::vector<double> thresholds;  // one per group, aligned with the GroupIndex

    // decision rule: predict 1 iff score >= group threshold
    std::vector<int> apply(const std::vector<double>& scores, const GroupIndex& gi) const {
        if (thresholds.size() != gi.n_groups()) {
            throw ValidationError("policy does not cover all groups");
        }
        if (scores.size() != gi.record_group.size()) {
            throw ValidationError("score vector length mismatch");
        }
        std::vector<int> preds(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) {
            preds[i] = scores[i] >= thresholds[gi.group_of(i)] ? 1 : 0;
        }
        return preds;
    }
};

struct ThresholdResult {
    ThresholdPolicy policy;
    FairnessReport report;
    double loss = 0.0;
    double fn_gap = 0.0;
};

namespace detail {

constexpr double kFnGapSlack = 1e-12;

struct ThresholdCandidate {
    double threshold = 0.0;
    std::optional<double> fnr, fpr;
    double loss_term = 0.0;  // (alpha*FNR [+ beta*FPR]) * W, undefined rates contribute 0
};

inline std::vector<ThresholdCandidate> group_candidates(const std::vector<double>& scores,
                                                        const Dataset& ds, const GroupIndex& gi,
                                                        std::size_t g, const CostSpec& costs,
                                                        bool include_fp) {
    std::vector<double> distinct;
    for (std::size_t i : gi.members[g]) distinct.push_back(scores[i]);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> thresholds = {0.0, 1.0};
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        thresholds.push_back((distinct[i] + distinct[i + 1]) / 2.0);
    }
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<ThresholdCandidate> out;
    for (double t : thresholds) {
        double tp = 0, fn = 0, fp = 0, tn = 0;
        for (std::size_t i : gi.members[g]) {
            const double w = ds.weight(i);
            const bool positive = scores[i] >= t;
            if (ds.labels[i] == 1) {
                (positive ? tp : fn) += w;
            } else {
                (positive ? fp : tn) += w;
            }
        }
        ThresholdCandidate c;
        c.threshold = t;
        if (tp + fn > 0) c.fnr = fn / (tp + fn);
        if (fp + tn > 0) c.fpr = fp / (fp + tn);
        double term = 0.0;
        if (c.fnr) term += costs.alpha * *c.fnr;
        if (include_fp && c.fpr) term += costs.beta * *c.fpr;
        c.loss_term = term * gi.weights[g];
        out.push_back(c);
    }
    return out;
}

}  // namespace detail

// Minimize sum_g (alpha*FN_g [+ beta*FP_g]) * W_g subject to every pairwise
// |FN_i - FN_j| <= tau_fn. Groups without positives impose no FN constraint.
// Always feasible: thresholds at 0 give FN = 0 everywhere. Ties break by
// (lower loss, lower FN gap, lexicographically smaller threshold vector).
inline ThresholdResult optimize_thresholds(const std::vector<double>& scores, const Dataset& ds,
                                           const GroupIndex& gi, const CostSpec& costs,
                                           const ToleranceSpec& tol,
                                           const ParityOptions& report_opts = {}) {
    validate(costs);
    validate(tol);
    if (scores.size() != ds.n_records()) throw ValidationError("score vector length mismatch");
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) {
            throw ValidationError("scores must lie in [0, 1]");
        }
    }
    const std::size_t n_groups = gi.n_groups();

    std::vector<std::vector<detail::ThresholdCandidate>> cands(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g) {
        cands[g] = detail::group_candidates(scores, ds, gi, g, costs, tol.include_fp_term);
    }

    struct Best {
        double loss = std::numeric_limits<double>::infinity();
        double gap = 0.0;
        std::vector<double> thresholds;
    } best;

    std::vector<std::size_t> choice(n_groups, 0);
    const double limit = tol.tau_fn + detail::kFnGapSlack;

    // depth-first product search; candidates are threshold-sorted so the first
    // solution found among loss/gap ties carries the lexicographically
    // smallest threshold vector
    auto recurse = [&](auto&& self, std::size_t g, double partial_loss, double fn_lo,
                       double fn_hi) -> void {
        if (partial_loss > best.loss) return;
        if (g == n_groups) {
            const double gap = fn_hi >= fn_lo ? fn_hi - fn_lo : 0.0;
            if (partial_loss < best.loss ||
                (partial_loss == best.loss && gap < best.gap)) {
                best.loss = partial_loss;
                best.gap = gap;
                best.thresholds.resize(n_groups);
                for (std::size_t k = 0; k < n_groups; ++k) {
                    best.thresholds[k] = cands[k][choice[k]].threshold;
                }
            }
            return;
        }
        for (std::size_t c = 0; c < cands[g].size(); ++c) {
            const auto& cand = cands[g][c];
            double lo = fn_lo, hi = fn_hi;
            if (cand.fnr) {
                lo = std::min(lo, *cand.fnr);
                hi = std::max(hi, *cand.fnr);
                if (hi - lo > limit) continue;  // no completion can shrink the window
            }
            choice[g] = c;
            self(self, g + 1, partial_loss + cand.loss_term, lo, hi);
        }
    };
    recurse(recurse, 0, 0.0, 1.0, 0.0);

    ThresholdResult out;
    out.policy.thresholds = best.thresholds;
    out.loss = best.loss;
    out.fn_gap = best.gap;
    const std::vector<int> preds = out.policy.apply(scores, gi);
    out.report = parity_report(preds, scores, ds, gi, costs, report_opts);
    return out;
}

struct SweepRow {
    double tau = 0.0;
    double loss = 0.0;
    double fn_gap = 0.0;
    std::vector<double> thresholds;
};

struct SweepResult {
    std::vector<std::string> group_names;
    std::vector<SweepRow> rows;
};

inline SweepResult sweep_tau(const std::vector<double>& scores, const Dataset& ds,
                             const GroupIndex& gi, const CostSpec& costs,
                             const std::vector<double>& taus, bool include_fp_term = true) {
    if (taus.empty()) throw ValidationError("sweep requires at least one tau");
    if (!std::is_sorted(taus.begin(), taus.end())) {
        throw ValidationError("taus must be sorted ascending");
    }
    SweepResult out;
    for (std::size_t g = 0; g < gi.n_groups(); ++g) out.group_names.push_back(gi.label(g));
    for (double tau : taus) {
        const ThresholdResult r =
            optimize_thresholds(scores, ds, gi, costs, {tau, include_fp_term});
        out.rows.push_back({tau, r.loss, r.fn_gap, r.policy.thresholds});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Equalized-odds mixing.

struct GroupMixing {
    double q1 = 1.0;  // probability of keeping a positive prediction
    double q0 = 0.0;  // probability of converting a negative prediction
};

struct MixingResult {
    std::vector<GroupMixing> per_group;
    double target_tpr = 0.0, target_fpr = 0.0;
    double cost = 0.0;                         // alpha*(1-TPR*) + beta*FPR*
    std::vector<double> achieved_tpr, achieved_fpr;  // analytic, from counts
};

// Solve for per-group (q0, q1) with shared targets (TPR*, FPR*), equal across
// groups, minimizing alpha*(1-TPR*) + beta*FPR*. Rates are exact in
// expectation; nothing here is sampled.
inline MixingResult equalize_odds_mixing(const std::vector<int>& preds, const Dataset& ds,
                                         const GroupIndex& gi, const CostSpec& costs) {
    validate(costs);
    const auto counts = confusion_by_group(preds, ds, gi);
    const std::size_t n_groups = gi.n_groups();
    std::vector<double> base_tpr(n_groups), base_fpr(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g) {
        const auto t = counts[g].tpr();
        const auto f = counts[g].fpr();
        if (!t || !f) {
            throw ValidationError("equalize_odds_mixing: group '" + gi.label(g) +
                                  "' lacks positives or negatives");
        }
        base_tpr[g] = *t;
        base_fpr[g] = *f;
    }

    auto derived = [](const GroupMixing& m, double t0, double f0) {
        return std::pair<double, double>{m.q0 * (1.0 - t0) + m.q1 * t0,
                                         m.q0 * (1.0 - f0) + m.q1 * f0};
    };
    auto finish = [&](MixingResult r) {
        for (std::size_t g = 0; g < n_groups; ++g) {
            const auto [t, f] = derived(r.per_group[g], base_tpr[g], base_fpr[g]);
            r.achieved_tpr.push_back(t);
            r.achieved_fpr.push_back(f);
        }
        r.cost = costs.alpha * (1.0 - r.target_tpr) + costs.beta * r.target_fpr;
        return r;
    };

    MixingResult identity;
    identity.per_group.assign(n_groups, GroupMixing{1.0, 0.0});
    identity.target_tpr = base_tpr[0];
    identity.target_fpr = base_fpr[0];
    if (n_groups == 1) return finish(identity);  // no constraint to meet

    // variables: q0_g, q1_g per group, then shared TPR*, FPR*
    LpProblem lp;
    lp.n_vars = 2 * n_groups + 2;
    lp.objective.assign(lp.n_vars, 0.0);
    const std::size_t t_var = 2 * n_groups, f_var = 2 * n_groups + 1;
    lp.objective[t_var] = -costs.alpha;
    lp.objective[f_var] = costs.beta;
    lp.lower.assign(lp.n_vars, 0.0);
    lp.upper.assign(lp.n_vars, 1.0);
    for (std::size_t g = 0; g < n_groups; ++g) {
        LpConstraint tpr_row;
        tpr_row.coeffs.assign(lp.n_vars, 0.0);
        tpr_row.coeffs[2 * g] = 1.0 - base_tpr[g];
        tpr_row.coeffs[2 * g + 1] = base_tpr[g];
        tpr_row.coeffs[t_var] = -1.0;
        tpr_row.rel = Relation::eq;
        lp.constraints.push_back(std::move(tpr_row));
        LpConstraint fpr_row;
        fpr_row.coeffs.assign(lp.n_vars, 0.0);
        fpr_row.coeffs[2 * g] = 1.0 - base_fpr[g];
        fpr_row.coeffs[2 * g + 1] = base_fpr[g];
        fpr_row.coeffs[f_var] = -1.0;
        fpr_row.rel = Relation::eq;
        lp.constraints.push_back(std::move(fpr_row));
    }
    const LpSolution sol = simplex_solve(lp);
    if (sol.status != LpStatus::optimal) {
        throw Error("equalized-odds LP did not solve");  // q = 0 is always feasible
    }
    MixingResult out;
    for (std::size_t g = 0; g < n_groups; ++g) {
        out.per_group.push_back({sol.x[2 * g + 1], sol.x[2 * g]});
    }
    out.target_tpr = sol.x[t_var];
    out.target_fpr = sol.x[f_var];
    out = finish(std::move(out));

    // When the groups already share their base rates, prefer the identity
    // mixing among cost ties.
    bool already_equal = true;
    for (std::size_t g = 1; g < n_groups; ++g) {
        if (std::abs(base_tpr[g] - base_tpr[0]) > 1e-12 ||
            std::abs(base_fpr[g] - base_fpr[0]) > 1e-12) {
            already_equal = false;
            break;
        }
    }
    if (already_equal) {
        const MixingResult id = finish(std::move(identity));
        if (id.cost <= out.cost + 1e-12) return id;
    }
    return out;
}

// Sampled application of a mixing policy; acceptance math never uses this.
inline std::vector<int> apply_mixing(const MixingResult& mix, const std::vector<int>& preds,
                                     const GroupIndex& gi, std::uint64_t seed) {
    if (mix.per_group.size() != gi.n_groups()) {
        throw ValidationError("mixing policy does not cover all groups");
    }
    Rng rng = Rng(seed).split("eqodds.apply");
    std::vector<int> out(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto& m = mix.per_group[gi.group_of(i)];
        const double u = rng.uniform01();
        out[i] = preds[i] == 1 ? (u < m.q1 ? 1 : 0) : (u < m.q0 ? 1 : 0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reject-option classification.

struct RocSpec {
    double theta = 0.7;  // must lie in (0.5, 1]
};

// Confident predictions pass through; inside the critical band [1-theta,
// theta] the unprivileged group receives the favorable outcome. Scores equal
// to either boundary fall inside the band.
inline std::vector<int> roc_reject_option(const std::vector<double>& scores, const GroupIndex& gi,
                                          std::size_t unprivileged, const RocSpec& spec) {
    if (!(spec.theta > 0.5 && spec.theta <= 1.0)) {
        throw ValidationError("theta must lie in (0.5, 1]");
    }
    if (gi.n_groups() != 2) throw ValidationError("roc_reject_option supports exactly 2 groups");
    if (unprivileged >= 2) throw ValidationError("unprivileged group index out of range");
    if (scores.size() != gi.record_group.size()) {
        throw ValidationError("score vector length mismatch");
    }
    std::vector<int> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > spec.theta) {
            out[i] = 1;
        } else if (scores[i] < 1.0 - spec.theta) {
            out[i] = 0;
        } else {
            out[i] = gi.group_of(i) == unprivileged ? 1 : 0;
        }
    }
    return out;
}

}  // namespace fairaudit
