#pragma once
// Individual-fairness measures: kNN label inconsistency, empirical 1-D
// Wasserstein distance between group feature distributions, and Lipschitz
// violation counting for outcome probabilities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"

namespace fairaudit {

struct KnnSpec {
    std::size_t k = 5;  // distance is Euclidean on standardized non-sensitive features
};

// Mean over records of |value(x) - mean value over the k nearest neighbors|.
// Neighbors exclude the record itself; distance ties break on lowest index.
// Callers standardize features and drop sensitive columns beforehand.
inline double knn_inconsistency(const std::vector<double>& values, const Dataset& ds,
                                const KnnSpec& spec) {
    const std::size_t n = ds.n_records();
    if (values.size() != n) throw ValidationError("value vector length mismatch");
    if (spec.k < 1 || spec.k >= n) {
        throw ValidationError("k must satisfy 1 <= k < n_records");
    }
    std::vector<std::pair<double, std::size_t>> dist(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double d2 = 0.0;
            for (std::size_t f = 0; f < ds.n_features(); ++f) {
                const double c = ds.features[i][f] - ds.features[j][f];
                d2 += c * c;
            }
            dist[j] = {d2, j};
        }
        dist[i].first = std::numeric_limits<double>::infinity();  // exclude self
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(spec.k),
                          dist.end());
        double neighbor_mean = 0.0;
        for (std::size_t m = 0; m < spec.k; ++m) neighbor_mean += values[dist[m].second];
        neighbor_mean /= static_cast<double>(spec.k);
        total += std::abs(values[i] - neighbor_mean);
    }
    return total / static_cast<double>(n);
}

// Empirical W1 between two 1-D samples via step quantile functions. For equal
// sizes this reduces to the mean absolute difference of sorted samples.
inline double wasserstein1(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ValidationError("wasserstein1 requires non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t na = a.size(), nb = b.size();
    if (na == nb) {
        double total = 0.0;
        for (std::size_t i = 0; i < na; ++i) total += std::abs(a[i] - b[i]);
        return total / static_cast<double>(na);
    }
    double total = 0.0, q = 0.0;
    std::size_t i = 0, j = 0;
    while (i < na && j < nb) {
        const double qa = static_cast<double>(i + 1) / static_cast<double>(na);
        const double qb = static_cast<double>(j + 1) / static_cast<double>(nb);
        const double qn = std::min(qa, qb);
        total += (qn - q) * std::abs(a[i] - b[j]);
        if (qa <= qn) ++i;
        if (qb <= qn) ++j;
        q = qn;
    }
    return total;
}

struct GroupDistance {
    std::vector<double> per_feature;
    double mean = 0.0;
};

// Per-feature W1 between the two groups' feature distributions, plus the mean
// across features as the scalar distance. Expects comparable feature scales.
inline GroupDistance group_feature_distance(const Dataset& ds, const GroupIndex& gi) {
    if (gi.n_groups() != 2) {
        throw ValidationError("group_feature_distance supports exactly 2 groups");
    }
    GroupDistance out;
    for (std::size_t f = 0; f < ds.n_features(); ++f) {
        std::vector<double> a, b;
        for (std::size_t i : gi.members[0]) a.push_back(ds.features[i][f]);
        for (std::size_t i : gi.members[1]) b.push_back(ds.features[i][f]);
        out.per_feature.push_back(wasserstein1(std::move(a), std::move(b)));
    }
    out.mean = std::accumulate(out.per_feature.begin(), out.per_feature.end(), 0.0) /
               static_cast<double>(out.per_feature.size());
    return out;
}

struct ViolationStats {
    std::size_t count = 0;      // pairs with |p_x - p_y| > d(x,y) + 1e-9
    double max_excess = 0.0;    // max over pairs of (|p_x - p_y| - d(x,y))+
};

// For binary outcomes the statistical distance between the two outcome
// distributions collapses to |p_x - p_y|, so that is what is checked.
inline ViolationStats lipschitz_violations(const std::vector<double>& p, const Matrix& d) {
    const std::size_t n = p.size();
    if (d.size() != n) throw ValidationError("distance matrix dimension mismatch");
    ViolationStats out;
    for (std::size_t x = 0; x < n; ++x) {
        if (d[x].size() != n) throw ValidationError("distance matrix is not square");
        for (std::size_t y = x + 1; y < n; ++y) {
            const double excess = std::abs(p[x] - p[y]) - d[x][y];
            if (excess > 1e-9) ++out.count;
            if (excess > out.max_excess) out.max_excess = excess;
        }
    }
    return out;
}

}  // namespace fairaudit
