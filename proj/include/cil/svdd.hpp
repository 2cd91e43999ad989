#pragma once

#include "cil/metrics.hpp"
#include "cil/sparse_vector.hpp"

#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace cil {

/// ||a - b||^2 for sparse rows.
inline double squared_distance(const SparseVector& a, const SparseVector& b) noexcept
{
    return a.squared_norm() + b.squared_norm() - 2.0 * dot(a, b);
}

/// Gaussian kernel exp(-||x - z||^2 / (2 sigma^2)).
inline double rbf_kernel(const SparseVector& x, const SparseVector& z, double sigma)
{
    if (!(sigma > 0.0)) throw std::invalid_argument("rbf_kernel: sigma must be > 0");
    // clamp tiny negative round-off from the expanded form
    const double d2 = std::max(0.0, squared_distance(x, z));
    return std::exp(-d2 / (2.0 * sigma * sigma));
}

/// Deviation bound of the empirical kernel centre of mass for kernels with
/// k(x, x) <= 1, holding with probability 1 - delta:
/// (2 / sqrt(m)) * (1 + sqrt(ln(1/delta) / 2)).
inline double com_estimation_error(std::size_t m, double delta)
{
    if (m == 0) throw std::invalid_argument("com_estimation_error: m must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    return 2.0 / std::sqrt(double(m)) * (1.0 + std::sqrt(std::log(1.0 / delta) / 2.0));
}

/// Centre-of-mass hypersphere in RBF feature space.
struct SvddModel {
    std::vector<SparseVector> train_rows;
    double sigma = 1.0;
    double delta = 0.01;
    std::vector<double> kernel_row_mean;  ///< (1/m) sum_j k(x_i, x_j)
    double kernel_grand_mean = 0.0;       ///< mean over all m^2 kernel entries
    std::vector<double> train_distance_sq;
    double threshold = 0.0;

    /// Squared feature-space distance from phi(y) to the centre of mass.
    [[nodiscard]] double distance_sq(const SparseVector& y) const
    {
        double s = 0.0;
        for (const auto& x : train_rows) s += rbf_kernel(y, x, sigma);
        return 1.0 - 2.0 * s / double(train_rows.size()) + kernel_grand_mean;
    }
};

inline SvddModel svdd_fit(std::vector<SparseVector> train, double sigma = 1.0, double delta = 0.01)
{
    if (train.empty()) throw std::invalid_argument("svdd_fit: empty training set");
    if (!(sigma > 0.0)) throw std::invalid_argument("svdd_fit: sigma must be > 0");
    const double err = com_estimation_error(train.size(), delta);

    SvddModel model;
    model.train_rows = std::move(train);
    model.sigma = sigma;
    model.delta = delta;
    const std::size_t m = model.train_rows.size();

    // symmetric kernel: fill the upper triangle and mirror the row sums
    std::vector<double> row_sum(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        row_sum[i] += 1.0;
        for (std::size_t j = i + 1; j < m; ++j) {
            const double k = rbf_kernel(model.train_rows[i], model.train_rows[j], sigma);
            row_sum[i] += k;
            row_sum[j] += k;
        }
    }
    double total = 0.0;
    model.kernel_row_mean.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        model.kernel_row_mean[i] = row_sum[i] / double(m);
        total += row_sum[i];
    }
    model.kernel_grand_mean = total / (double(m) * double(m));

    double max_d2 = 0.0;
    model.train_distance_sq.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double d2 = 1.0 - 2.0 * model.kernel_row_mean[i] + model.kernel_grand_mean;
        model.train_distance_sq[i] = d2;
        max_d2 = std::max(max_d2, d2);
    }
    model.threshold = max_d2 + err;
    return model;
}

struct DetectionResult {
    std::vector<std::size_t> flagged;
    std::vector<double> distance_sq;
};

/// Flags every test row whose squared distance exceeds the model threshold.
inline DetectionResult svdd_detect(const SvddModel& model, std::span<const SparseVector> test)
{
    DetectionResult out;
    out.distance_sq.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double d2 = model.distance_sq(test[i]);
        out.distance_sq.push_back(d2);
        if (d2 > model.threshold) out.flagged.push_back(i);
    }
    return out;
}

/// Restricts rows to one feature, re-indexed as feature 0.
inline std::vector<SparseVector> select_feature(std::span<const SparseVector> rows, FeatureIndex j)
{
    std::vector<SparseVector> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        SparseVector v;
        for (const auto& e : r) {
            if (e.index == j) v.push_back(0, e.value);
        }
        out.push_back(std::move(v));
    }
    return out;
}

/// Independent one-dimensional detectors, one per feature channel.
inline std::vector<DetectionResult> svdd_detect_per_feature(std::span<const SparseVector> train,
                                                            std::span<const SparseVector> test,
                                                            std::size_t num_features,
                                                            double sigma = 1.0, double delta = 0.01)
{
    std::vector<DetectionResult> out;
    out.reserve(num_features);
    for (std::size_t j = 0; j < num_features; ++j) {
        const auto model = svdd_fit(select_feature(train, FeatureIndex(j)), sigma, delta);
        const auto test_j = select_feature(test, FeatureIndex(j));
        out.push_back(svdd_detect(model, test_j));
    }
    return out;
}

inline void write_detection_csv(std::ostream& out, const DetectionResult& r)
{
    out << "row_index,distance_sq,flagged\n";
    std::size_t next = 0;
    for (std::size_t i = 0; i < r.distance_sq.size(); ++i) {
        const bool flagged = next < r.flagged.size() && r.flagged[next] == i;
        if (flagged) ++next;
        out << i << ',' << csv::number(r.distance_sq[i]) << ',' << (flagged ? 1 : 0) << '\n';
    }
}

}  // namespace cil
