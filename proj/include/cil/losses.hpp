#pragma once

#include "cil/sparse_vector.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cil {

/// Running class counts of an online stream: positives P, negatives N and
/// false negatives committed so far.
struct ClassState {
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t false_negatives = 0;

    void record(Label y_true, Label y_pred) noexcept
    {
        if (y_true == Label::positive) {
            ++positives;
            if (y_pred == Label::negative) ++false_negatives;
        } else {
            ++negatives;
        }
    }

    friend bool operator==(const ClassState&, const ClassState&) = default;
};

/// Penalty for a mistake on class `y`: N/P for positives, (P - Fn)/P for
/// negatives. Falls back to 1 while no positive has been seen.
inline double rho(const ClassState& s, Label y) noexcept
{
    if (s.positives == 0) return 1.0;
    const double p = double(s.positives);
    if (y == Label::positive) return double(s.negatives) / p;
    return double(s.positives - s.false_negatives) / p;
}

/// Per-class weights of the batch objective.
class CostPair {
public:
    CostPair() = default;
    CostPair(double positive, double negative)
        : positive_(positive)
        , negative_(negative)
    {
        if (!(positive > 0.0 && positive < 1.0 && negative > 0.0 && negative < 1.0)) {
            throw std::invalid_argument("costs must lie in (0, 1)");
        }
        if (std::abs(positive + negative - 1.0) > 1e-12) {
            throw std::invalid_argument("costs must sum to 1");
        }
    }

    [[nodiscard]] double positive() const noexcept { return positive_; }
    [[nodiscard]] double negative() const noexcept { return negative_; }
    [[nodiscard]] double weight(Label y) const noexcept
    {
        return y == Label::positive ? positive_ : negative_;
    }

private:
    double positive_ = 0.9;
    double negative_ = 0.1;
};

/// max(0, rho - margin)
inline double hinge_cs(double margin, double rho) noexcept { return std::max(0.0, rho - margin); }

/// (rho/2) * max(0, 1 - margin)^2
inline double smooth_hinge_cs(double margin, double rho) noexcept
{
    const double h = std::max(0.0, 1.0 - margin);
    return 0.5 * rho * h * h;
}

/// d/dmargin of smooth_hinge_cs.
inline double smooth_hinge_derivative(double margin, double rho) noexcept
{
    return -rho * std::max(0.0, 1.0 - margin);
}

/// Gradient in w of smooth_hinge_cs(y * w.x, rho). Its support is contained
/// in the support of x.
inline SparseVector smooth_hinge_grad(std::span<const double> w, const SparseVector& x, Label y,
                                      double rho)
{
    const double yy = sign_of(y);
    const double coeff = smooth_hinge_derivative(yy * dot(w, x), rho) * yy;
    SparseVector g;
    if (coeff == 0.0) return g;
    for (const auto& e : x) g.push_back(e.index, coeff * e.value);
    return g;
}

// Unscaled per-row sums. Workers of the distributed runtime evaluate these
// over their slice and reduce; the centralized path calls them on the full set.

inline double smooth_hinge_loss_sum(std::span<const LabeledInstance> rows,
                                    std::span<const double> w, const CostPair& costs) noexcept
{
    double s = 0.0;
    for (const auto& r : rows) s += smooth_hinge_cs(r.y() * dot(w, r.features), costs.weight(r.label));
    return s;
}

inline void add_smooth_hinge_gradient(std::span<const LabeledInstance> rows,
                                      std::span<const double> w, const CostPair& costs,
                                      std::span<double> grad) noexcept
{
    for (const auto& r : rows) {
        const double yy = r.y();
        const double coeff =
            smooth_hinge_derivative(yy * dot(w, r.features), costs.weight(r.label)) * yy;
        if (coeff != 0.0) axpy(coeff, r.features, grad);
    }
}

/// Sum of rho_i * ||x_i||^2, the numerator of the default Lipschitz bound.
inline double weighted_squared_norm_sum(std::span<const LabeledInstance> rows,
                                        const CostPair& costs) noexcept
{
    double s = 0.0;
    for (const auto& r : rows) s += costs.weight(r.label) * r.features.squared_norm();
    return s;
}

/// (1/m) * sum_i smooth_hinge_cs(y_i w.x_i, c_{y_i}) + lambda * ||w||_1
inline double batch_objective(std::span<const LabeledInstance> rows, std::span<const double> w,
                              double lambda, const CostPair& costs)
{
    if (rows.empty()) throw std::invalid_argument("batch_objective: empty dataset");
    return smooth_hinge_loss_sum(rows, w, costs) * (1.0 / double(rows.size())) +
           lambda * vec::norm1(w);
}

/// Smooth part of the cost-weighted batch problem, optionally with a proximal
/// anchor term:
///
///   f(w) = scale * sum_i (c_i/2) max(0, 1 - y_i w.x_i)^2 + (prox/2) ||w - anchor||^2
///
/// With prox = 0 and scale = 1/m this is the centralized loss; the ADMM local
/// subproblem uses prox = rho_admm and anchor = z - u_i. Also exposes the
/// incremental coordinate interface used by random coordinate descent.
class SmoothHingeObjective {
public:
    SmoothHingeObjective(std::span<const LabeledInstance> rows, std::size_t dimension,
                         CostPair costs, double scale)
        : rows_(rows)
        , dim_(dimension)
        , costs_(costs)
        , scale_(scale)
    {}

    SmoothHingeObjective(std::span<const LabeledInstance> rows, std::size_t dimension,
                         CostPair costs)
        : SmoothHingeObjective(rows, dimension, costs, rows.empty() ? 0.0 : 1.0 / double(rows.size()))
    {}

    void set_proximal_term(double weight, std::vector<double> anchor)
    {
        prox_weight_ = weight;
        anchor_ = std::move(anchor);
        anchor_.resize(dim_, 0.0);
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }
    [[nodiscard]] const CostPair& costs() const noexcept { return costs_; }

    [[nodiscard]] double value(std::span<const double> w) const noexcept
    {
        double v = smooth_hinge_loss_sum(rows_, w, costs_) * scale_;
        if (prox_weight_ > 0.0) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) d2 += (w[j] - anchor_[j]) * (w[j] - anchor_[j]);
            v += 0.5 * prox_weight_ * d2;
        }
        return v;
    }

    void gradient(std::span<const double> w, std::span<double> g) const noexcept
    {
        std::fill(g.begin(), g.end(), 0.0);
        add_smooth_hinge_gradient(rows_, w, costs_, g);
        for (double& gj : g) gj *= scale_;
        if (prox_weight_ > 0.0) {
            for (std::size_t j = 0; j < dim_; ++j) g[j] += prox_weight_ * (w[j] - anchor_[j]);
        }
    }

    /// Upper bound on the gradient's Lipschitz constant.
    [[nodiscard]] double lipschitz() const noexcept
    {
        return weighted_squared_norm_sum(rows_, costs_) * scale_ + prox_weight_;
    }

    [[nodiscard]] double coordinate_lipschitz(std::size_t j) const
    {
        build_columns();
        double s = 0.0;
        for (const auto& [row, v] : columns_[j]) s += costs_.weight(rows_[row].label) * v * v;
        return s * scale_ + prox_weight_;
    }

    /// Caches margins at `w` for subsequent partial()/moved() calls.
    void begin_coordinates(std::span<const double> w)
    {
        build_columns();
        margins_.resize(rows_.size());
        for (std::size_t r = 0; r < rows_.size(); ++r) margins_[r] = rows_[r].y() * dot(w, rows_[r].features);
    }

    [[nodiscard]] double partial(std::span<const double> w, std::size_t j) const noexcept
    {
        double s = 0.0;
        for (const auto& [row, v] : columns_[j]) {
            const auto& r = rows_[row];
            s += smooth_hinge_derivative(margins_[row], costs_.weight(r.label)) * r.y() * v;
        }
        s *= scale_;
        if (prox_weight_ > 0.0) s += prox_weight_ * (w[j] - anchor_[j]);
        return s;
    }

    void moved(std::size_t j, double delta) noexcept
    {
        for (const auto& [row, v] : columns_[j]) margins_[row] += rows_[row].y() * delta * v;
    }

private:
    struct ColumnEntry {
        std::size_t row;
        double value;
    };

    void build_columns() const
    {
        if (columns_built_) return;
        columns_.assign(dim_, {});
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            for (const auto& e : rows_[r].features) {
                if (e.index < dim_) columns_[e.index].push_back({r, e.value});
            }
        }
        columns_built_ = true;
    }

    std::span<const LabeledInstance> rows_;
    std::size_t dim_;
    CostPair costs_;
    double scale_;
    double prox_weight_ = 0.0;
    std::vector<double> anchor_;

    mutable bool columns_built_ = false;
    mutable std::vector<std::vector<ColumnEntry>> columns_;
    std::vector<double> margins_;
};

}  // namespace cil
