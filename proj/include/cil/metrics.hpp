#pragma once

#include "cil/sparse_vector.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cil {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    [[nodiscard]] std::size_t total() const noexcept { return tp + tn + fp + fn; }

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts update_confusion(ConfusionCounts c, Label y_true, Label y_pred) noexcept
{
    if (y_true == Label::positive) {
        (y_pred == Label::positive ? c.tp : c.fn) += 1;
    } else {
        (y_pred == Label::positive ? c.fp : c.tn) += 1;
    }
    return c;
}

namespace detail {
// Ratios with a zero denominator are reported as 0.
inline double safe_ratio(double num, double den) noexcept { return den > 0.0 ? num / den : 0.0; }
}  // namespace detail

inline double sensitivity(const ConfusionCounts& c) noexcept
{
    return detail::safe_ratio(double(c.tp), double(c.tp + c.fn));
}

inline double specificity(const ConfusionCounts& c) noexcept
{
    return detail::safe_ratio(double(c.tn), double(c.tn + c.fp));
}

inline double precision(const ConfusionCounts& c) noexcept
{
    return detail::safe_ratio(double(c.tp), double(c.tp + c.fp));
}

inline double gmean(const ConfusionCounts& c) noexcept
{
    return std::sqrt(sensitivity(c) * specificity(c));
}

/// Balanced accuracy: mean of sensitivity and specificity.
inline double sum_metric(const ConfusionCounts& c) noexcept
{
    return 0.5 * sensitivity(c) + 0.5 * specificity(c);
}

inline double fmeasure(const ConfusionCounts& c) noexcept
{
    const double p = precision(c);
    const double r = sensitivity(c);
    return detail::safe_ratio(2.0 * p * r, p + r);
}

inline double mistake_rate(const ConfusionCounts& c)
{
    if (c.total() == 0) throw std::domain_error("mistake_rate: no predictions scored");
    return double(c.fp + c.fn) / double(c.total());
}

inline double accuracy(const ConfusionCounts& c)
{
    if (c.total() == 0) throw std::domain_error("accuracy: no predictions scored");
    return double(c.tp + c.tn) / double(c.total());
}

struct TraceRow {
    std::size_t samples_seen = 0;
    double gmean = 0.0;
    double mistake_rate = 0.0;
    double fmeasure = 0.0;
    double sum = 0.0;

    friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

using MetricTrace = std::vector<TraceRow>;

inline TraceRow snapshot(const ConfusionCounts& c)
{
    return {c.total(), gmean(c), mistake_rate(c), fmeasure(c), sum_metric(c)};
}

/// Cumulative online evaluation. Emits a trace row every `every` predictions;
/// `finish()` adds a closing row when the stream length is not a multiple.
class OnlineEvaluator {
public:
    explicit OnlineEvaluator(std::size_t every = 100)
        : every_(every)
    {
        if (every == 0) throw std::invalid_argument("trace cadence must be >= 1");
    }

    void record(Label y_true, Label y_pred)
    {
        counts_ = update_confusion(counts_, y_true, y_pred);
        if (counts_.total() % every_ == 0) trace_.push_back(snapshot(counts_));
    }

    void finish()
    {
        if (counts_.total() == 0) return;
        if (trace_.empty() || trace_.back().samples_seen != counts_.total()) {
            trace_.push_back(snapshot(counts_));
        }
    }

    [[nodiscard]] const ConfusionCounts& counts() const noexcept { return counts_; }
    [[nodiscard]] const MetricTrace& trace() const noexcept { return trace_; }

private:
    std::size_t every_;
    ConfusionCounts counts_;
    MetricTrace trace_;
};

namespace csv {

/// Shortest round-trip decimal form, so CSV output is byte-stable.
inline std::string number(double v)
{
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

}  // namespace csv

inline void write_trace_csv(std::ostream& out, const MetricTrace& trace)
{
    out << "samples_seen,gmean,mistake_rate,fmeasure,sum\n";
    for (const auto& r : trace) {
        out << r.samples_seen << ',' << csv::number(r.gmean) << ',' << csv::number(r.mistake_rate)
            << ',' << csv::number(r.fmeasure) << ',' << csv::number(r.sum) << '\n';
    }
}

}  // namespace cil
