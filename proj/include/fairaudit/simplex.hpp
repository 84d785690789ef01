#pragma once
// Dense two-phase simplex for desk-scale linear programs. Bland's rule
// throughout, so the pivot sequence cannot cycle. Shared by the Lipschitz
// solver and equalized-odds mixing.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fairaudit/errors.hpp"

namespace fairaudit {

enum class Relation { le, ge, eq };

struct LpConstraint {
    std::vector<double> coeffs;
    Relation rel = Relation::le;
    double rhs = 0.0;
};

struct LpProblem {
    std::size_t n_vars = 0;
    std::vector<double> objective;  // minimized unless maximize is set
    bool maximize = false;
    std::vector<LpConstraint> constraints;
    std::vector<double> lower;  // -inf for free below
    std::vector<double> upper;  // +inf for free above
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> x;
    double value = 0.0;
};

namespace detail {

constexpr double kPivotTol = 1e-9;

class SimplexTableau {
public:
    std::size_t n_cols = 0;              // structural + slack + artificial
    std::vector<std::vector<double>> a;  // m rows
    std::vector<double> rhs;
    std::vector<std::size_t> basis;
    std::vector<bool> barred;            // columns excluded from entering

    std::vector<double> obj;
    double obj_shift = 0.0;  // current objective value is -obj_shift

    void set_objective(const std::vector<double>& c) {
        obj = c;
        obj.resize(n_cols, 0.0);
        obj_shift = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double cb = obj[basis[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < n_cols; ++j) obj[j] -= cb * a[i][j];
            obj_shift -= cb * rhs[i];
        }
        for (std::size_t i = 0; i < a.size(); ++i) obj[basis[i]] = 0.0;
    }

    void pivot(std::size_t row, std::size_t col) {
        const double p = a[row][col];
        for (std::size_t j = 0; j < n_cols; ++j) a[row][j] /= p;
        rhs[row] /= p;
        a[row][col] = 1.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i == row || a[i][col] == 0.0) continue;
            const double f = a[i][col];
            for (std::size_t j = 0; j < n_cols; ++j) a[i][j] -= f * a[row][j];
            a[i][col] = 0.0;
            rhs[i] -= f * rhs[row];
            if (rhs[i] < 0.0 && rhs[i] > -1e-11) rhs[i] = 0.0;
        }
        if (obj[col] != 0.0) {
            const double f = obj[col];
            for (std::size_t j = 0; j < n_cols; ++j) obj[j] -= f * a[row][j];
            obj[col] = 0.0;
            obj_shift -= f * rhs[row];
        }
        basis[row] = col;
    }

    // Bland: entering = lowest eligible column, leaving = min ratio with the
    // lowest basis index on ties. Returns false at optimality.
    bool iterate(LpStatus& status) {
        std::size_t enter = n_cols;
        for (std::size_t j = 0; j < n_cols; ++j) {
            if (!barred[j] && obj[j] < -kPivotTol) {
                enter = j;
                break;
            }
        }
        if (enter == n_cols) {
            status = LpStatus::optimal;
            return false;
        }
        std::size_t leave = a.size();
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i][enter] <= kPivotTol) continue;
            const double ratio = rhs[i] / a[i][enter];
            if (ratio < best_ratio - 1e-12 ||
                (ratio < best_ratio + 1e-12 && (leave == a.size() || basis[i] < basis[leave]))) {
                best_ratio = ratio;
                leave = i;
            }
        }
        if (leave == a.size()) {
            status = LpStatus::unbounded;
            return false;
        }
        pivot(leave, enter);
        return true;
    }

    LpStatus optimize() {
        LpStatus status = LpStatus::optimal;
        while (iterate(status)) {
        }
        return status;
    }
};

}  // namespace detail

inline LpSolution simplex_solve(const LpProblem& prob) {
    const std::size_t n = prob.n_vars;
    if (prob.objective.size() != n) throw ValidationError("objective dimension mismatch");
    if (prob.lower.size() != n || prob.upper.size() != n) {
        throw ValidationError("bound vectors must cover every variable");
    }
    for (const auto& c : prob.constraints) {
        if (c.coeffs.size() != n) throw ValidationError("constraint dimension mismatch");
    }
    const double inf = std::numeric_limits<double>::infinity();

    // Map each variable onto non-negative internal columns.
    struct VarMap {
        std::size_t col = 0;       // primary column
        std::size_t neg_col = 0;   // second column for free variables
        bool split = false;
        double offset = 0.0;
        double sign = 1.0;         // x = offset + sign * u
    };
    std::vector<VarMap> vars(n);
    std::size_t n_int = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (prob.lower[j] > prob.upper[j]) {
            return {LpStatus::infeasible, {}, 0.0};
        }
        if (prob.lower[j] > -inf) {
            vars[j] = {n_int++, 0, false, prob.lower[j], 1.0};
        } else if (prob.upper[j] < inf) {
            vars[j] = {n_int++, 0, false, prob.upper[j], -1.0};
        } else {
            vars[j] = {n_int, n_int + 1, true, 0.0, 1.0};
            n_int += 2;
        }
    }

    struct Row {
        std::vector<double> coeffs;
        Relation rel;
        double rhs;
    };
    std::vector<Row> rows;
    auto add_row = [&](const std::vector<double>& user_coeffs, Relation rel, double rhs) {
        Row r;
        r.coeffs.assign(n_int, 0.0);
        r.rel = rel;
        r.rhs = rhs;
        for (std::size_t j = 0; j < n; ++j) {
            const double c = user_coeffs[j];
            if (c == 0.0) continue;
            if (vars[j].split) {
                r.coeffs[vars[j].col] += c;
                r.coeffs[vars[j].neg_col] -= c;
            } else {
                r.coeffs[vars[j].col] += c * vars[j].sign;
                r.rhs -= c * vars[j].offset;
            }
        }
        if (r.rhs < 0.0) {
            for (auto& v : r.coeffs) v = -v;
            r.rhs = -r.rhs;
            r.rel = r.rel == Relation::le ? Relation::ge
                    : r.rel == Relation::ge ? Relation::le
                                            : Relation::eq;
        }
        rows.push_back(std::move(r));
    };
    for (const auto& c : prob.constraints) add_row(c.coeffs, c.rel, c.rhs);
    for (std::size_t j = 0; j < n; ++j) {
        if (!vars[j].split && prob.lower[j] > -inf && prob.upper[j] < inf) {
            std::vector<double> unit(n, 0.0);
            unit[j] = 1.0;
            add_row(unit, Relation::le, prob.upper[j]);
        }
    }

    const std::size_t m = rows.size();
    std::size_t n_slack = 0, n_art = 0;
    for (const auto& r : rows) {
        if (r.rel != Relation::eq) ++n_slack;
        if (r.rel != Relation::le) ++n_art;
    }

    detail::SimplexTableau t;
    t.n_cols = n_int + n_slack + n_art;
    t.a.assign(m, std::vector<double>(t.n_cols, 0.0));
    t.rhs.resize(m);
    t.basis.resize(m);
    t.barred.assign(t.n_cols, false);

    std::size_t slack_at = n_int, art_at = n_int + n_slack;
    std::vector<std::size_t> art_cols;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n_int; ++j) t.a[i][j] = rows[i].coeffs[j];
        t.rhs[i] = rows[i].rhs;
        if (rows[i].rel == Relation::le) {
            t.a[i][slack_at] = 1.0;
            t.basis[i] = slack_at++;
        } else if (rows[i].rel == Relation::ge) {
            t.a[i][slack_at] = -1.0;
            ++slack_at;
            t.a[i][art_at] = 1.0;
            t.basis[i] = art_at;
            art_cols.push_back(art_at++);
        } else {
            t.a[i][art_at] = 1.0;
            t.basis[i] = art_at;
            art_cols.push_back(art_at++);
        }
    }

    if (!art_cols.empty()) {
        std::vector<double> phase1(t.n_cols, 0.0);
        for (std::size_t j : art_cols) phase1[j] = 1.0;
        t.set_objective(phase1);
        if (t.optimize() != LpStatus::optimal) {
            return {LpStatus::infeasible, {}, 0.0};  // phase 1 is always bounded below by 0
        }
        if (-t.obj_shift > 1e-7) {
            return {LpStatus::infeasible, {}, 0.0};
        }
        for (std::size_t j : art_cols) t.barred[j] = true;
        // Drive artificials out of the basis where possible; leftover rows are
        // redundant and harmless with the column barred.
        for (std::size_t i = 0; i < m; ++i) {
            if (!t.barred[t.basis[i]]) continue;
            for (std::size_t j = 0; j < n_int + n_slack; ++j) {
                if (std::abs(t.a[i][j]) > detail::kPivotTol) {
                    t.pivot(i, j);
                    break;
                }
            }
        }
    }

    std::vector<double> cost(t.n_cols, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double c = prob.objective[j];
        if (prob.maximize) c = -c;
        if (vars[j].split) {
            cost[vars[j].col] += c;
            cost[vars[j].neg_col] -= c;
        } else {
            cost[vars[j].col] += c * vars[j].sign;
        }
    }
    t.set_objective(cost);
    const LpStatus status = t.optimize();
    if (status == LpStatus::unbounded) {
        return {LpStatus::unbounded, {}, 0.0};
    }

    std::vector<double> internal(t.n_cols, 0.0);
    for (std::size_t i = 0; i < m; ++i) internal[t.basis[i]] = t.rhs[i];
    LpSolution sol;
    sol.status = LpStatus::optimal;
    sol.x.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (vars[j].split) {
            sol.x[j] = internal[vars[j].col] - internal[vars[j].neg_col];
        } else {
            sol.x[j] = vars[j].offset + vars[j].sign * internal[vars[j].col];
        }
        sol.value += prob.objective[j] * sol.x[j];
    }
    return sol;
}

}  // namespace fairaudit
