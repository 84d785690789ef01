#pragma once
// Individual-fairness linear programs over binary outcomes. With A = {0, 1}
// the mapping into outcome distributions reduces to one probability per
// individual, and the statistical distance between two individuals' outcome
// distributions is exactly |p_x - p_y|.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/simplex.hpp"

namespace fairaudit {

struct LipschitzInstance {
    Matrix d;                                 // pairwise distances, symmetric, zero diagonal
    std::vector<std::array<double, 2>> loss;  // {L(x, 0), L(x, 1)} per individual

    std::size_t size() const { return loss.size(); }
};

constexpr std::size_t kMaxLipschitzInstance = 200;  // exactness over scale

inline void validate(const LipschitzInstance& inst) {
    const std::size_t n = inst.size();
    if (n == 0) throw ValidationError("instance has no individuals");
    if (n > kMaxLipschitzInstance) {
        throw ValidationError("instance size exceeds the supported cap of " +
                              std::to_string(kMaxLipschitzInstance));
    }
    if (inst.d.size() != n) throw ValidationError("distance matrix dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (inst.d[i].size() != n) throw ValidationError("distance matrix is not square");
        if (inst.d[i][i] != 0.0) throw ValidationError("distance matrix diagonal must be zero");
        if (!std::isfinite(inst.loss[i][0]) || !std::isfinite(inst.loss[i][1]) ||
            inst.loss[i][0] < 0.0 || inst.loss[i][1] < 0.0) {
            throw ValidationError("losses must be finite and non-negative");
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (inst.d[i][j] < 0.0) throw ValidationError("distances must be non-negative");
            if (std::abs(inst.d[i][j] - inst.d[j][i]) > 1e-12) {
                throw ValidationError("distance matrix must be symmetric");
            }
        }
    }
}

struct LipschitzSolution {
    std::vector<double> p;  // probability of outcome 1 per individual
    double objective = 0.0;
};

struct ParitySpec {
    std::vector<int> group;  // 0 = S, 1 = T per individual
    double epsilon = 0.0;
};

inline void validate(const ParitySpec& parity, std::size_t n) {
    if (parity.group.size() != n) throw ValidationError("parity group vector length mismatch");
    if (parity.epsilon < 0.0) throw ValidationError("epsilon must be non-negative");
    std::size_t in_t = 0;
    for (int g : parity.group) {
        if (g != 0 && g != 1) throw ValidationError("parity groups must be 0 or 1");
        in_t += static_cast<std::size_t>(g);
    }
    if (in_t == 0 || in_t == n) throw ValidationError("both parity groups must be non-empty");
}

namespace detail {

inline LipschitzSolution solve_outcome_lp(const LipschitzInstance& inst,
                                          const ParitySpec* parity) {
    const std::size_t n = inst.size();
    LpProblem lp;
    lp.n_vars = n;
    lp.lower.assign(n, 0.0);
    lp.upper.assign(n, 1.0);
    lp.objective.resize(n);
    double base = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        base += inst.loss[i][0];
        lp.objective[i] = inst.loss[i][1] - inst.loss[i][0];
    }
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = x + 1; y < n; ++y) {
            if (parity && parity->group[x] != parity->group[y]) continue;
            if (inst.d[x][y] >= 1.0) continue;  // vacuous given p in [0, 1]
            LpConstraint fwd;
            fwd.coeffs.assign(n, 0.0);
            fwd.coeffs[x] = 1.0;
            fwd.coeffs[y] = -1.0;
            fwd.rhs = inst.d[x][y];
            lp.constraints.push_back(fwd);
            fwd.coeffs[x] = -1.0;
            fwd.coeffs[y] = 1.0;
            lp.constraints.push_back(std::move(fwd));
        }
    }
    if (parity) {
        LpConstraint mean_gap;
        mean_gap.coeffs.assign(n, 0.0);
        double n_s = 0.0, n_t = 0.0;
        for (int g : parity->group) (g == 0 ? n_s : n_t) += 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean_gap.coeffs[i] = parity->group[i] == 0 ? 1.0 / n_s : -1.0 / n_t;
        }
        mean_gap.rhs = parity->epsilon;
        lp.constraints.push_back(mean_gap);
        for (auto& c : mean_gap.coeffs) c = -c;
        lp.constraints.push_back(std::move(mean_gap));
    }
    const LpSolution sol = simplex_solve(lp);
    if (sol.status != LpStatus::optimal) {
        throw Error("Lipschitz LP did not solve");  // constant p is always feasible
    }
    LipschitzSolution out;
    out.p = sol.x;
    for (auto& v : out.p) v = std::min(1.0, std::max(0.0, v));
    out.objective = base;
    for (std::size_t i = 0; i < n; ++i) {
        out.objective += out.p[i] * (inst.loss[i][1] - inst.loss[i][0]);
    }
    return out;
}

}  // namespace detail

// Exact optimum of min sum_x expected loss subject to |p_x - p_y| <= d(x, y).
inline LipschitzSolution solve_lipschitz_lp(const LipschitzInstance& inst) {
    validate(inst);
    return detail::solve_outcome_lp(inst, nullptr);
}

// Fair affirmative action: Lipschitz constraints within groups only, plus
// demographic parity of group mean outcomes up to epsilon.
inline LipschitzSolution solve_fair_affirmative(const LipschitzInstance& inst,
                                                const ParitySpec& parity) {
    validate(inst);
    validate(parity, inst.size());
    return detail::solve_outcome_lp(inst, &parity);
}

inline bool triangle_inequality_holds(const Matrix& d, double tol = 1e-9) {
    const std::size_t n = d.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                if (d[i][j] > d[i][k] + d[k][j] + tol) return false;
            }
        }
    }
    return true;
}

// Default metric when no distance matrix is supplied: Euclidean distance on
// standardized features, rescaled so the median pairwise distance is 0.5.
inline Matrix distance_matrix_from_features(const Dataset& ds) {
    const std::size_t n = ds.n_records();
    if (n < 2) throw ValidationError("need at least 2 records for a distance matrix");
    const Dataset std_ds = fit_standardizer(ds).apply(ds);
    Matrix d(n, std::vector<double>(n, 0.0));
    std::vector<double> offdiag;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t f = 0; f < std_ds.n_features(); ++f) {
                const double c = std_ds.features[i][f] - std_ds.features[j][f];
                s += c * c;
            }
            d[i][j] = d[j][i] = std::sqrt(s);
            offdiag.push_back(d[i][j]);
        }
    }
    std::sort(offdiag.begin(), offdiag.end());
    const std::size_t m = offdiag.size();
    const double median =
        m % 2 == 1 ? offdiag[m / 2] : (offdiag[m / 2 - 1] + offdiag[m / 2]) / 2.0;
    if (median > 0.0) {
        const double scale = 0.5 / median;
        for (auto& row : d) {
            for (auto& v : row) v *= scale;
        }
    }
    return d;
}

// Violation statistics restricted to within-group pairs (the constraint set of
// the relaxed program).
inline std::size_t within_group_violation_count(const std::vector<double>& p, const Matrix& d,
                                                const std::vector<int>& group) {
    std::size_t count = 0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        for (std::size_t y = x + 1; y < p.size(); ++y) {
            if (group[x] != group[y]) continue;
            if (std::abs(p[x] - p[y]) > d[x][y] + 1e-9) ++count;
        }
    }
    return count;
}

}  // namespace fairaudit
