#pragma once
// Logistic-regression scorer trained by full-batch gradient descent from a
// zero start, with an optional squared mean-score-gap fairness penalty.
// Training is a pure function of its inputs: repeated runs are bit-identical.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"

namespace fairaudit {

struct TrainSpec {
    double learning_rate = 0.1;
    std::size_t iterations = 1000;
    double lambda_fair = 0.0;  // weight of the squared group mean-score gap
    double l2 = 0.0;           // coefficient penalty, excludes the intercept
};

inline void validate(const TrainSpec& spec) {
    if (!(spec.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (spec.iterations == 0) throw ValidationError("iterations must be positive");
    if (spec.lambda_fair < 0.0) throw ValidationError("lambda_fair must be non-negative");
    if (spec.l2 < 0.0) throw ValidationError("l2 must be non-negative");
}

struct Model {
    std::vector<double> coefficients;
    double intercept = 0.0;
    TrainSpec trained_with;
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Objective {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
};

// J(w, b) = weighted-mean BCE + l2*||w||^2 + lambda_fair*(mean score A - mean score B)^2
inline Objective objective_and_gradient(const Dataset& ds, const GroupIndex& gi,
                                        const TrainSpec& spec, const std::vector<double>& w,
                                        double b, const std::vector<double>& weights = {}) {
    validate(spec);
    const std::size_t n = ds.n_records();
    const std::size_t d = ds.n_features();
    if (w.size() != d) throw ValidationError("coefficient dimension mismatch");
    if (!weights.empty() && weights.size() != n) {
        throw ValidationError("record weight vector length mismatch");
    }
    if (spec.lambda_fair > 0.0 && gi.n_groups() != 2) {
        throw ValidationError("lambda_fair > 0 requires exactly 2 groups");
    }
    auto record_weight = [&](std::size_t i) {
        return !weights.empty() ? weights[i] : ds.weight(i);
    };

    Objective out;
    out.grad_w.assign(d, 0.0);
    std::vector<double> score(n);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = b;
        for (std::size_t f = 0; f < d; ++f) z += w[f] * ds.features[i][f];
        score[i] = sigmoid(z);
        const double rw = record_weight(i);
        wsum += rw;
        // numerically stable BCE: max(z,0) - y*z + log(1 + exp(-|z|))
        const double y = static_cast<double>(ds.labels[i]);
        out.loss += rw * (std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z))));
        const double residual = rw * (score[i] - y);
        for (std::size_t f = 0; f < d; ++f) out.grad_w[f] += residual * ds.features[i][f];
        out.grad_b += residual;
    }
    out.loss /= wsum;
    for (std::size_t f = 0; f < d; ++f) out.grad_w[f] /= wsum;
    out.grad_b /= wsum;

    for (std::size_t f = 0; f < d; ++f) {
        out.loss += spec.l2 * w[f] * w[f];
        out.grad_w[f] += 2.0 * spec.l2 * w[f];
    }

    if (spec.lambda_fair > 0.0) {
        double mean[2] = {0.0, 0.0};
        for (std::size_t g = 0; g < 2; ++g) {
            for (std::size_t i : gi.members[g]) mean[g] += score[i];
            mean[g] /= static_cast<double>(gi.members[g].size());
        }
        const double gap = mean[0] - mean[1];
        out.loss += spec.lambda_fair * gap * gap;
        const double scale = 2.0 * spec.lambda_fair * gap;
        for (std::size_t g = 0; g < 2; ++g) {
            const double sign = g == 0 ? 1.0 : -1.0;
            const double inv = sign / static_cast<double>(gi.members[g].size());
            for (std::size_t i : gi.members[g]) {
                const double ds_dz = score[i] * (1.0 - score[i]);
                for (std::size_t f = 0; f < d; ++f) {
                    out.grad_w[f] += scale * inv * ds_dz * ds.features[i][f];
                }
                out.grad_b += scale * inv * ds_dz;
            }
        }
    }
    return out;
}

inline Model train_logreg(const Dataset& ds, const GroupIndex& gi, const TrainSpec& spec,
                          const std::vector<double>& weights = {}) {
    validate(spec);
    Model m;
    m.trained_with = spec;
    m.coefficients.assign(ds.n_features(), 0.0);
    for (std::size_t it = 0; it < spec.iterations; ++it) {
        const Objective obj =
            objective_and_gradient(ds, gi, spec, m.coefficients, m.intercept, weights);
        if (!std::isfinite(obj.loss)) {
            throw ValidationError("training diverged at iteration " + std::to_string(it) +
                                  "; reduce the learning rate");
        }
        for (std::size_t f = 0; f < m.coefficients.size(); ++f) {
            m.coefficients[f] -= spec.learning_rate * obj.grad_w[f];
        }
        m.intercept -= spec.learning_rate * obj.grad_b;
    }
    return m;
}

inline std::vector<double> predict_scores(const Model& m, const Dataset& ds) {
    if (m.coefficients.size() != ds.n_features()) {
        throw ValidationError("model feature dimension does not match dataset");
    }
    std::vector<double> out(ds.n_records());
    for (std::size_t i = 0; i < ds.n_records(); ++i) {
        double z = m.intercept;
        for (std::size_t f = 0; f < m.coefficients.size(); ++f) {
            z += m.coefficients[f] * ds.features[i][f];
        }
        out[i] = sigmoid(z);
    }
    return out;
}

}  // namespace fairaudit
