#pragma once

#include "cil/sparse_vector.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace cil::synthetic {

struct ImbalancedSpec {
    std::size_t rows = 1000;
    std::size_t features = 50;
    /// Probability that a feature is present in a row; present values are U(0, 1).
    double density = 0.1;
    double positive_fraction = 0.1;
    /// Rows whose score lies within this distance of the threshold are redrawn.
    double margin = 0.0;
    /// Probability of flipping a label after generation.
    double label_noise = 0.0;
    /// Append a constant 1 feature after the generated ones.
    bool intercept = true;
    /// Scale every row to unit L2 norm, as in normalized text corpora.
    bool unit_rows = true;
    std::uint64_t seed = 0;
};

struct LabeledSet {
    std::vector<LabeledInstance> rows;
    std::vector<double> true_w;  ///< generating direction (without intercept)
    double threshold = 0.0;      ///< score cut separating the classes
};

/// Sparse non-negative rows labelled by a thresholded random hyperplane:
/// y = +1 iff w*.x > t, with t the (1 - positive_fraction) quantile of the
/// score. With the intercept column, (w*, -t) separates the set exactly.
inline LabeledSet imbalanced_linear(const ImbalancedSpec& spec)
{
    if (spec.features == 0) throw std::invalid_argument("imbalanced_linear: need features");
    if (!(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0)) {
        throw std::invalid_argument("imbalanced_linear: positive_fraction must lie in (0, 1)");
    }
    if (!(spec.density > 0.0 && spec.density <= 1.0)) {
        throw std::invalid_argument("imbalanced_linear: density must lie in (0, 1]");
    }
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    LabeledSet out;
    out.true_w.resize(spec.features);
    for (double& v : out.true_w) v = normal(rng);

    std::vector<double> x(spec.features);
    auto draw = [&] {
        for (double& v : x) v = unif(rng) < spec.density ? unif(rng) : 0.0;
    };

    // empirical quantile of the score from a calibration sample
    constexpr std::size_t calibration = 20000;
    std::vector<double> scores(calibration);
    for (double& s : scores) {
        draw();
        s = vec::dot(out.true_w, x);
    }
    std::sort(scores.begin(), scores.end());
    out.threshold = scores[std::size_t((1.0 - spec.positive_fraction) * double(calibration))];

    out.rows.reserve(spec.rows);
    std::vector<double> row;
    while (out.rows.size() < spec.rows) {
        draw();
        const double s = vec::dot(out.true_w, x) - out.threshold;
        if (std::abs(s) < spec.margin || s == 0.0) continue;
        Label y = s > 0.0 ? Label::positive : Label::negative;
        if (spec.label_noise > 0.0 && unif(rng) < spec.label_noise) {
            y = y == Label::positive ? Label::negative : Label::positive;
        }
        row = x;
        if (spec.intercept) row.push_back(1.0);
        if (spec.unit_rows) {
            const double nrm = vec::norm2(row);
            if (nrm > 0.0) {
                for (double& v : row) v /= nrm;
            }
        }
        out.rows.push_back({SparseVector::from_dense(row), y});
    }
    return out;
}

/// Isotropic Gaussian cloud around `center`.
inline std::vector<SparseVector> gaussian_cloud(std::size_t n, std::span<const double> center,
                                                double stddev, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, stddev);
    std::vector<SparseVector> out;
    out.reserve(n);
    std::vector<double> x(center.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = center[j] + normal(rng);
        out.push_back(SparseVector::from_dense(x));
    }
    return out;
}

/// Points at exactly `radius` from `center` in uniformly random directions.
inline std::vector<SparseVector> ring(std::size_t n, std::span<const double> center, double radius,
                                      std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<SparseVector> out;
    out.reserve(n);
    std::vector<double> dir(center.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (double& v : dir) v = normal(rng);
        const double nrm = vec::norm2(dir);
        for (std::size_t j = 0; j < dir.size(); ++j) dir[j] = center[j] + radius * dir[j] / nrm;
        out.push_back(SparseVector::from_dense(dir));
    }
    return out;
}

}  // namespace cil::synthetic
