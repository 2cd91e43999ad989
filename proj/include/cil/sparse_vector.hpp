#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cil {

using FeatureIndex = std::uint32_t;

struct SparseEntry {
    FeatureIndex index;
    double value;

    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Sparse feature row. Entries are kept sorted by strictly increasing index
/// and never hold an explicit zero.
class SparseVector {
public:
    SparseVector() = default;

    /// Builds from arbitrary-order entries. Zeros are dropped; duplicate
    /// indices and non-finite values are rejected.
    static SparseVector from_entries(std::vector<SparseEntry> entries)
    {
        std::sort(entries.begin(), entries.end(),
                  [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
        SparseVector out;
        out.entries_.reserve(entries.size());
        for (std::size_t k = 0; k < entries.size(); ++k) {
            if (!std::isfinite(entries[k].value)) {
                throw std::invalid_argument("non-finite value at feature " +
                                            std::to_string(entries[k].index));
            }
            if (k > 0 && entries[k].index == entries[k - 1].index) {
                throw std::invalid_argument("duplicate feature index " +
                                            std::to_string(entries[k].index));
            }
            if (entries[k].value != 0.0) out.entries_.push_back(entries[k]);
        }
        return out;
    }

    /// Builds from a dense array, keeping the non-zero coordinates.
    static SparseVector from_dense(std::span<const double> dense)
    {
        SparseVector out;
        for (std::size_t j = 0; j < dense.size(); ++j) {
            if (dense[j] != 0.0) out.entries_.push_back({static_cast<FeatureIndex>(j), dense[j]});
        }
        return out;
    }

    // Appends an entry whose index exceeds every stored index. Zero values are skipped.
    void push_back(FeatureIndex index, double value)
    {
        if (!entries_.empty() && index <= entries_.back().index) {
            throw std::invalid_argument("push_back requires increasing indices");
        }
        if (value != 0.0) entries_.push_back({index, value});
    }

    [[nodiscard]] std::span<const SparseEntry> entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t nnz() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

    /// One past the largest stored index (0 when empty).
    [[nodiscard]] std::size_t dimension() const noexcept
    {
        return entries_.empty() ? 0 : static_cast<std::size_t>(entries_.back().index) + 1;
    }

    [[nodiscard]] double squared_norm() const noexcept
    {
        double s = 0.0;
        for (const auto& e : entries_) s += e.value * e.value;
        return s;
    }

    [[nodiscard]] std::vector<double> to_dense(std::size_t dim) const
    {
        std::vector<double> out(std::max(dim, dimension()), 0.0);
        for (const auto& e : entries_) out[e.index] = e.value;
        return out;
    }

    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    friend bool operator==(const SparseVector&, const SparseVector&) = default;

private:
    std::vector<SparseEntry> entries_;
};

/// Merge-style sparse-sparse dot product.
inline double dot(const SparseVector& a, const SparseVector& b) noexcept
{
    auto ia = a.begin();
    auto ib = b.begin();
    double s = 0.0;
    while (ia != a.end() && ib != b.end()) {
        if (ia->index < ib->index) {
            ++ia;
        } else if (ib->index < ia->index) {
            ++ib;
        } else {
            s += ia->value * ib->value;
            ++ia;
            ++ib;
        }
    }
    return s;
}

/// Dense-sparse dot product. Coordinates past the end of `w` count as zero.
inline double dot(std::span<const double> w, const SparseVector& x) noexcept
{
    double s = 0.0;
    for (const auto& e : x) {
        if (e.index < w.size()) s += w[e.index] * e.value;
    }
    return s;
}

/// w += alpha * x. `w` must already cover x.dimension().
inline void axpy(double alpha, const SparseVector& x, std::span<double> w) noexcept
{
    for (const auto& e : x) w[e.index] += alpha * e.value;
}

enum class Label : int { negative = -1, positive = 1 };

inline constexpr double sign_of(Label y) noexcept { return static_cast<double>(static_cast<int>(y)); }

struct LabeledInstance {
    SparseVector features;
    Label label = Label::negative;

    [[nodiscard]] double y() const noexcept { return sign_of(label); }

    friend bool operator==(const LabeledInstance&, const LabeledInstance&) = default;
};

/// Largest feature dimension over a set of rows.
inline std::size_t max_dimension(std::span<const LabeledInstance> rows) noexcept
{
    std::size_t d = 0;
    for (const auto& r : rows) d = std::max(d, r.features.dimension());
    return d;
}

// Dense vector helpers shared by the solvers.
namespace vec {

inline double norm_inf(std::span<const double> v) noexcept
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double norm1(std::span<const double> v) noexcept
{
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

inline double squared_norm2(std::span<const double> v) noexcept
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double norm2(std::span<const double> v) noexcept { return std::sqrt(squared_norm2(v)); }

inline double dot(std::span<const double> a, std::span<const double> b) noexcept
{
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) noexcept
{
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

inline bool all_finite(std::span<const double> v) noexcept
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace vec

}  // namespace cil
