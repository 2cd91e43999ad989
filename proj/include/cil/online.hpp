#pragma once

#include "cil/libsvm.hpp"
#include "cil/losses.hpp"
#include "cil/metrics.hpp"
#include "cil/prox.hpp"
#include "cil/sparse_vector.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cil {

/// Invalid learner or experiment configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// sign(w.x), with an exact zero predicted as the negative (majority) class.
inline Label predict(std::span<const double> w, const SparseVector& x) noexcept
{
    return dot(w, x) > 0.0 ? Label::positive : Label::negative;
}

namespace detail {
inline void grow_to(std::vector<double>& v, std::size_t dim)
{
    if (v.size() < dim) v.resize(dim, 0.0);
}
}  // namespace detail

struct StepOutcome {
    Label prediction = Label::negative;
    double loss = 0.0;
};

// ============================ Passive-aggressive ============================

enum class PaVariant { pa, pa1, pa2 };

/// Step size of the passive-aggressive update.
///   PA:  loss / ||x||^2
///   PA1: min(C, loss / ||x||^2)
///   PA2: loss / (||x||^2 + 1/(2C))
inline double pa_tau(double loss, double x_norm_sq, PaVariant variant, double C) noexcept
{
    if (loss <= 0.0 || x_norm_sq <= 0.0) return 0.0;
    switch (variant) {
    case PaVariant::pa:
        return loss / x_norm_sq;
    case PaVariant::pa1:
        return std::min(C, loss / x_norm_sq);
    case PaVariant::pa2:
        return loss / (x_norm_sq + 1.0 / (2.0 * C));
    }
    return 0.0;
}

struct PaConfig {
    PaVariant variant = PaVariant::pa;
    double C = 1.0;
    /// Use the class-count penalty rho as the hinge target (PAGMEAN) instead of 1.
    bool cost_sensitive = false;
};

/// PA / PA-1 / PA-2 and their cost-sensitive PAGMEAN counterparts.
class PaLearner {
public:
    explicit PaLearner(PaConfig cfg = {})
        : cfg_(cfg)
    {
        if (!(cfg.C > 0.0)) throw ConfigError("PA aggressiveness C must be > 0");
    }

    StepOutcome step(const LabeledInstance& inst)
    {
        detail::grow_to(w_, inst.features.dimension());
        const double y = inst.y();
        const double margin = y * dot(w_, inst.features);
        const Label y_hat = predict(w_, inst.features);

        // penalty from the counts seen before this example
        const double target = cfg_.cost_sensitive ? rho(state_, inst.label) : 1.0;
        const double loss = hinge_cs(margin, target);
        const double tau = pa_tau(loss, inst.features.squared_norm(), cfg_.variant, cfg_.C);
        if (tau > 0.0) axpy(tau * y, inst.features, w_);
        state_.record(inst.label, y_hat);
        return {y_hat, loss};
    }

    [[nodiscard]] std::span<const double> weights() const noexcept { return w_; }
    [[nodiscard]] const ClassState& class_state() const noexcept { return state_; }
    [[nodiscard]] const PaConfig& config() const noexcept { return cfg_; }

    void set_weights(std::vector<double> w) { w_ = std::move(w); }

private:
    PaConfig cfg_;
    std::vector<double> w_;
    ClassState state_;
};

// ================================== ASPGD ==================================

/// Nesterov blend weight (1 - sqrt(mu*eta)) / (1 + sqrt(mu*eta)).
inline double acceleration_gamma(double mu_eta)
{
    if (!(mu_eta >= 0.0 && mu_eta < 1.0)) throw ConfigError("acceleration requires 0 <= mu*eta < 1");
    const double r = std::sqrt(mu_eta);
    return (1.0 - r) / (1.0 + r);
}

struct AspgdConfig {
    double lambda = 0.0;
    bool accelerated = true;
    /// Fixed step size. When unset, the step follows the running penalty:
    /// mu = rho of the latest example and eta = 1/(mu + 1).
    std::optional<double> eta;
    /// Strong-convexity estimate used with a fixed eta.
    double mu = 1.0;
};

/// Accelerated stochastic proximal gradient with the Euclidean mirror map, so
/// the dual accumulator theta maps to v = theta directly.
///
/// Each step: u = soft_threshold(theta, eta * lambda),
/// w = (1 - gamma) w_prev + gamma u, predict sign(w.x), and on positive
/// smooth-hinge loss theta -= eta * grad(w). Then w_prev = w.
class AspgdLearner {
public:
    explicit AspgdLearner(AspgdConfig cfg = {})
        : cfg_(cfg)
    {
        if (cfg.lambda < 0.0) throw ConfigError("lambda must be >= 0");
        if (cfg.eta) {
            if (!(*cfg.eta > 0.0)) throw ConfigError("eta must be > 0");
            if (!(cfg.mu >= 0.0)) throw ConfigError("mu must be >= 0");
            eta_ = *cfg.eta;
            if (cfg.accelerated && cfg.mu * eta_ >= 1.0) {
                throw ConfigError("accelerated ASPGD requires mu * eta < 1");
            }
            gamma_ = cfg.accelerated ? acceleration_gamma(cfg.mu * eta_) : 1.0;
        } else {
            retune(1.0);  // cold-start penalty
        }
    }

    StepOutcome step(const LabeledInstance& inst)
    {
        const std::size_t dim = std::max(theta_.size(), inst.features.dimension());
        detail::grow_to(theta_, dim);
        detail::grow_to(w_, dim);
        detail::grow_to(w_prev_, dim);

        const double kappa = eta_ * cfg_.lambda;
        for (std::size_t j = 0; j < dim; ++j) {
            const double u = soft_threshold(theta_[j], kappa);
            w_[j] = (1.0 - gamma_) * w_prev_[j] + gamma_ * u;
        }

        const Label y_hat = predict(w_, inst.features);
        const double r = rho(state_, inst.label);
        const double margin = inst.y() * dot(w_, inst.features);
        const double loss = smooth_hinge_cs(margin, r);

        if (!cfg_.eta) retune(r);
        if (loss > 0.0) {
            const auto g = smooth_hinge_grad(w_, inst.features, inst.label, r);
            for (const auto& e : g) theta_[e.index] -= eta_ * e.value;
        }
        w_prev_ = w_;
        state_.record(inst.label, y_hat);
        return {y_hat, loss};
    }

    [[nodiscard]] std::span<const double> weights() const noexcept { return w_; }
    [[nodiscard]] std::span<const double> theta() const noexcept { return theta_; }
    [[nodiscard]] double eta() const noexcept { return eta_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] const ClassState& class_state() const noexcept { return state_; }

    /// Number of non-zero coordinates of the current weights.
    [[nodiscard]] std::size_t support_size() const noexcept
    {
        return std::size_t(std::count_if(w_.begin(), w_.end(), [](double v) { return v != 0.0; }));
    }

private:
    void retune(double mu)
    {
        eta_ = 1.0 / (mu + 1.0);
        gamma_ = cfg_.accelerated ? acceleration_gamma(mu * eta_) : 1.0;
    }

    AspgdConfig cfg_;
    double eta_ = 0.0;
    double gamma_ = 1.0;
    std::vector<double> theta_;
    std::vector<double> w_;
    std::vector<double> w_prev_;
    ClassState state_;
};

// ============================== Stream driver ==============================

template <class L>
concept OnlineLearner = requires(L& l, const LabeledInstance& inst) {
    { l.step(inst) } -> std::same_as<StepOutcome>;
};

struct StreamResult {
    ConfusionCounts counts;
    MetricTrace trace;
};

/// Single pass over `instances` with predict-then-update evaluation.
template <OnlineLearner L, std::ranges::input_range R>
StreamResult run_stream(L& learner, R&& instances, std::size_t trace_every = 100)
{
    OnlineEvaluator eval(trace_every);
    for (const LabeledInstance& inst : instances) {
        eval.record(inst.label, learner.step(inst).prediction);
    }
    eval.finish();
    return {eval.counts(), eval.trace()};
}

/// Streaming overload: rows are pulled batch by batch from the reader.
template <OnlineLearner L>
StreamResult run_stream(L& learner, MinibatchReader& reader, std::size_t trace_every = 100)
{
    OnlineEvaluator eval(trace_every);
    while (auto batch = reader.next()) {
        for (const auto& inst : *batch) eval.record(inst.label, learner.step(inst).prediction);
    }
    eval.finish();
    return {eval.counts(), eval.trace()};
}

}  // namespace cil
