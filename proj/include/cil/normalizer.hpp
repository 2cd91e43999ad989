#pragma once

#include "cil/sparse_vector.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace cil {

/// Column statistics used to scale every feature into [-1, 1].
/// Immutable once fitted; safe to share read-only.
struct DatasetStats {
    std::size_t num_features = 0;
    std::map<FeatureIndex, double> per_feature_max_abs;  // only features seen at fit time
    std::size_t positive_count = 0;
    std::size_t negative_count = 0;

    [[nodiscard]] std::size_t rows() const noexcept { return positive_count + negative_count; }
};

inline DatasetStats fit_normalizer(std::span<const LabeledInstance> data)
{
    if (data.empty()) throw std::invalid_argument("fit_normalizer: empty dataset");
    DatasetStats stats;
    for (const auto& row : data) {
        (row.label == Label::positive ? stats.positive_count : stats.negative_count) += 1;
        stats.num_features = std::max(stats.num_features, row.features.dimension());
        for (const auto& e : row.features) {
            auto& m = stats.per_feature_max_abs[e.index];
            m = std::max(m, std::abs(e.value));
        }
    }
    return stats;
}

/// Divides each value by its feature's fitted max-abs. Features unseen at fit
/// time (or with max-abs 0) pass through unchanged.
inline SparseVector apply_normalizer(const DatasetStats& stats, const SparseVector& x)
{
    SparseVector out;
    for (const auto& e : x) {
        double v = e.value;
        if (auto it = stats.per_feature_max_abs.find(e.index);
            it != stats.per_feature_max_abs.end() && it->second > 0.0) {
            v /= it->second;
        }
        out.push_back(e.index, v);
    }
    return out;
}

inline std::vector<LabeledInstance> apply_normalizer(const DatasetStats& stats,
                                                     std::span<const LabeledInstance> rows)
{
    std::vector<LabeledInstance> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({apply_normalizer(stats, r.features), r.label});
    return out;
}

}  // namespace cil
