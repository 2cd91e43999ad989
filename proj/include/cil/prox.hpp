#pragma once

#include "cil/losses.hpp"
#include "cil/sparse_vector.hpp"

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cil {

/// A solver could not make progress or produced non-finite values.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ============================ Problem concepts ============================

template <class P>
concept SmoothProblem = requires(const P& p, std::span<const double> x, std::span<double> g) {
    { p.dimension() } -> std::convertible_to<std::size_t>;
    { p.value(x) } -> std::convertible_to<double>;
    p.gradient(x, g);
};

template <class P>
concept LipschitzProblem = SmoothProblem<P> && requires(const P& p) {
    { p.lipschitz() } -> std::convertible_to<double>;
};

/// Problems that random coordinate descent can drive incrementally:
/// begin_coordinates(x) primes any cache, partial(x, j) returns df/dx_j at the
/// current point and moved(j, d) reports that x_j changed by d.
template <class P>
concept CoordinateProblem =
    SmoothProblem<P> && requires(P& p, std::span<const double> x, std::size_t j, double d) {
        { p.coordinate_lipschitz(j) } -> std::convertible_to<double>;
        p.begin_coordinates(x);
        { p.partial(x, j) } -> std::convertible_to<double>;
        p.moved(j, d);
    };

/// Problem assembled from callables. Coordinate access goes through the full
/// gradient, which is fine for small test problems.
struct CallbackProblem {
    std::size_t dim = 0;
    std::function<double(std::span<const double>)> value_fn;
    std::function<void(std::span<const double>, std::span<double>)> gradient_fn;
    double lipschitz_L = 0.0;
    std::vector<double> coordinate_L;

    [[nodiscard]] std::size_t dimension() const noexcept { return dim; }
    [[nodiscard]] double value(std::span<const double> x) const { return value_fn(x); }
    void gradient(std::span<const double> x, std::span<double> g) const { gradient_fn(x, g); }
    [[nodiscard]] double lipschitz() const noexcept { return lipschitz_L; }
    [[nodiscard]] double coordinate_lipschitz(std::size_t j) const { return coordinate_L.at(j); }
    void begin_coordinates(std::span<const double>) {}
    [[nodiscard]] double partial(std::span<const double> x, std::size_t j) const
    {
        std::vector<double> g(dim);
        gradient_fn(x, g);
        return g[j];
    }
    void moved(std::size_t, double) {}
};

struct SolveReport {
    std::vector<double> solution;
    double objective = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> objective_history;
    /// Per-iteration stopping quantity: step size for FISTA and RCD,
    /// gradient max-norm for L-BFGS.
    std::vector<double> residual_history;
};

// ============================ Soft-thresholding ============================

inline double soft_threshold(double v, double kappa) noexcept
{
    if (v > kappa) return v - kappa;
    if (v < -kappa) return v + kappa;
    return 0.0;
}

/// Proximal operator of kappa * ||.||_1, elementwise.
inline std::vector<double> soft_threshold(std::span<const double> v, double kappa)
{
    std::vector<double> out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = soft_threshold(v[j], kappa);
    return out;
}

// ================================== FISTA ==================================

struct FistaOptions {
    std::size_t max_iter = 5000;
    double tol = 1e-6;
    /// Step is 1/L; defaults to the problem's own Lipschitz bound.
    std::optional<double> lipschitz;
};

/// Accelerated proximal gradient for f(x) + lambda * ||x||_1 with step 1/L and
/// function-value restart: a step that raises the objective is discarded and
/// momentum is reset, so the accepted objective history never increases.
/// Stops when the accepted step satisfies ||x_{k+1} - x_k||_inf <= tol.
template <SmoothProblem P>
SolveReport fista_minimize(const P& p, double lambda, std::vector<double> x0,
                           const FistaOptions& opt = {})
{
    double L = 0.0;
    if (opt.lipschitz) {
        L = *opt.lipschitz;
    } else if constexpr (LipschitzProblem<P>) {
        L = p.lipschitz();
    }
    if (!(L > 0.0)) throw std::invalid_argument("fista_minimize: Lipschitz constant must be > 0");
    if (lambda < 0.0) throw std::invalid_argument("fista_minimize: lambda must be >= 0");

    const std::size_t n = p.dimension();
    x0.resize(n, 0.0);
    const double step = 1.0 / L;
    const double kappa = lambda * step;

    auto objective = [&](std::span<const double> x) {
        const double f = p.value(x) + lambda * vec::norm1(x);
        if (!std::isfinite(f)) throw SolverError("fista_minimize: objective diverged");
        return f;
    };

    SolveReport rep;
    std::vector<double> x = std::move(x0);
    std::vector<double> y = x;
    std::vector<double> x_new(n), g(n);
    double fx = objective(x);
    double t = 1.0;
    bool restarted = false;
    rep.objective_history.push_back(fx);

    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        rep.iterations = it;
        p.gradient(y, g);
        for (std::size_t j = 0; j < n; ++j) x_new[j] = soft_threshold(y[j] - step * g[j], kappa);
        const double f_new = objective(x_new);

        if (f_new > fx) {
            if (restarted) {
                // a plain prox-gradient step from x cannot descend further
                rep.converged = true;
                break;
            }
            t = 1.0;
            y = x;
            restarted = true;
            continue;
        }
        restarted = false;

        const double moved = vec::max_abs_diff(x_new, x);
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_new;
        for (std::size_t j = 0; j < n; ++j) y[j] = x_new[j] + beta * (x_new[j] - x[j]);
        std::swap(x, x_new);
        fx = f_new;
        t = t_new;
        rep.objective_history.push_back(fx);
        rep.residual_history.push_back(moved);
        if (moved <= opt.tol) {
            rep.converged = true;
            break;
        }
    }
    rep.solution = std::move(x);
    rep.objective = fx;
    return rep;
}

// ================================= L-BFGS =================================

struct LbfgsOptions {
    std::size_t memory = 10;
    std::size_t max_iter = 5000;
    double tol = 1e-6;  ///< on ||grad||_inf
    double armijo_c = 1e-4;
    double shrink = 0.5;
    std::size_t max_backtracks = 50;
};

/// Limited-memory BFGS: two-loop recursion for the search direction and
/// backtracking Armijo line search starting from a unit step.
template <SmoothProblem P>
SolveReport lbfgs_minimize(const P& p, std::vector<double> x0, const LbfgsOptions& opt = {})
{
    const std::size_t n = p.dimension();
    x0.resize(n, 0.0);

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> pairs;

    SolveReport rep;
    std::vector<double> x = std::move(x0);
    std::vector<double> g(n), d(n), x_new(n), g_new(n);
    std::vector<double> alpha;
    double fx = p.value(x);
    if (!std::isfinite(fx)) throw SolverError("lbfgs_minimize: non-finite objective at start");
    p.gradient(x, g);
    rep.objective_history.push_back(fx);
    rep.residual_history.push_back(vec::norm_inf(g));

    if (vec::norm_inf(g) <= opt.tol) rep.converged = true;

    for (std::size_t it = 1; it <= opt.max_iter && !rep.converged; ++it) {
        rep.iterations = it;

        // two-loop recursion: d = -H g
        for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
        alpha.assign(pairs.size(), 0.0);
        for (std::size_t k = pairs.size(); k-- > 0;) {
            alpha[k] = pairs[k].rho * vec::dot(pairs[k].s, d);
            for (std::size_t j = 0; j < n; ++j) d[j] -= alpha[k] * pairs[k].y[j];
        }
        if (!pairs.empty()) {
            const auto& last = pairs.back();
            const double h0 = 1.0 / (last.rho * vec::squared_norm2(last.y));
            for (double& dj : d) dj *= h0;
        }
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const double beta = pairs[k].rho * vec::dot(pairs[k].y, d);
            for (std::size_t j = 0; j < n; ++j) d[j] += (alpha[k] - beta) * pairs[k].s[j];
        }

        double gd = vec::dot(g, d);
        if (!(gd < 0.0)) {
            pairs.clear();
            for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
            gd = -vec::squared_norm2(g);
        }

        // allowance of a few ulps so steps at the rounding floor still count
        const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(fx);
        double step = 1.0;
        double f_new = 0.0;
        bool accepted = false;
        for (std::size_t bt = 0; bt < opt.max_backtracks; ++bt) {
            for (std::size_t j = 0; j < n; ++j) x_new[j] = x[j] + step * d[j];
            f_new = p.value(x_new);
            if (std::isfinite(f_new) && f_new <= fx + opt.armijo_c * step * gd + slack) {
                accepted = true;
                break;
            }
            step *= opt.shrink;
        }
        if (!accepted) {
            // predicted decrease is below the objective's rounding level
            if (-gd <= 1e-13 * std::max(1.0, std::abs(fx))) break;
            throw SolverError("lbfgs_minimize: line search failed " +
                              std::to_string(opt.max_backtracks) + " times at iteration " +
                              std::to_string(it));
        }
        if (x_new == x) break;  // step below floating-point resolution

        p.gradient(x_new, g_new);
        Pair pr{std::vector<double>(n), std::vector<double>(n), 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            pr.s[j] = x_new[j] - x[j];
            pr.y[j] = g_new[j] - g[j];
        }
        const double sy = vec::dot(pr.s, pr.y);
        if (sy > 1e-12 * vec::norm2(pr.s) * vec::norm2(pr.y) && sy > 0.0) {
            pr.rho = 1.0 / sy;
            pairs.push_back(std::move(pr));
            if (pairs.size() > opt.memory) pairs.pop_front();
        }

        std::swap(x, x_new);
        std::swap(g, g_new);
        fx = f_new;
        const double gnorm = vec::norm_inf(g);
        rep.objective_history.push_back(fx);
        rep.residual_history.push_back(gnorm);
        if (gnorm <= opt.tol) rep.converged = true;
    }
    rep.solution = std::move(x);
    rep.objective = fx;
    return rep;
}

// ======================== Random coordinate descent ========================

struct RcdOptions {
    std::size_t max_iter = 5000;  ///< epochs of `dimension` coordinate steps each
    double tol = 1e-6;            ///< on the largest coordinate move within an epoch
    std::uint64_t seed = 0;
};

/// Uniform random coordinate descent with per-coordinate step 1/L_j.
/// Deterministic for a given seed.
template <CoordinateProblem P>
SolveReport rcd_minimize(P& p, std::vector<double> x0, const RcdOptions& opt = {})
{
    const std::size_t n = p.dimension();
    x0.resize(n, 0.0);
    SolveReport rep;
    std::vector<double> x = std::move(x0);
    if (n == 0) {
        rep.solution = std::move(x);
        rep.objective = p.value(rep.solution);
        rep.converged = true;
        return rep;
    }

    std::vector<double> inv_L(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double Lj = p.coordinate_lipschitz(j);
        if (Lj > 0.0) inv_L[j] = 1.0 / Lj;
    }

    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    p.begin_coordinates(x);

    for (std::size_t epoch = 1; epoch <= opt.max_iter; ++epoch) {
        rep.iterations = epoch;
        double largest = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t j = pick(rng);
            if (inv_L[j] == 0.0) continue;
            const double delta = -inv_L[j] * p.partial(x, j);
            if (delta == 0.0) continue;
            x[j] += delta;
            p.moved(j, delta);
            largest = std::max(largest, std::abs(delta));
        }
        if (!std::isfinite(largest)) throw SolverError("rcd_minimize: iterate diverged");
        rep.residual_history.push_back(largest);
        if (largest <= opt.tol) {
            rep.converged = true;
            break;
        }
    }
    rep.objective = p.value(x);
    rep.objective_history.push_back(rep.objective);
    rep.solution = std::move(x);
    return rep;
}

// ============================== Lambda scales ==============================

/// (1/m) * ||X^T y~||_inf with y~_i = m_-/m for positives and -m_+/m for
/// negatives. Used for the default lambda = 0.1 * lambda_max.
inline double lambda_max(std::span<const LabeledInstance> rows)
{
    if (rows.empty()) throw std::invalid_argument("lambda_max: empty dataset");
    const double m = double(rows.size());
    std::size_t pos = 0;
    for (const auto& r : rows) pos += r.label == Label::positive ? 1 : 0;
    const double y_pos = double(rows.size() - pos) / m;
    const double y_neg = -double(pos) / m;

    std::vector<double> v(max_dimension(rows), 0.0);
    for (const auto& r : rows) axpy(r.label == Label::positive ? y_pos : y_neg, r.features, v);
    return vec::norm_inf(v) / m;
}

/// Smallest lambda for which w = 0 minimizes f + lambda * ||w||_1, i.e. ||grad f(0)||_inf.
template <SmoothProblem P>
double critical_lambda(const P& p)
{
    std::vector<double> zero(p.dimension(), 0.0), g(p.dimension());
    p.gradient(zero, g);
    return vec::norm_inf(g);
}

}  // namespace cil
