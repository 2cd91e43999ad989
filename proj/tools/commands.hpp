#pragma once

// Experiment commands behind the `cil` executable. Kept free of argument
// parsing so they can be driven directly from tests.

#include "cil/cil.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cil::cli {

struct OnlineConfig {
    std::string algo;
    std::string data;
    std::string trace_path;    // empty: no trace file
    std::string summary_path;  // empty: summary on stdout only
    std::size_t trace_every = 100;
    std::size_t batch_size = 256;
    double C = 1.0;
    std::optional<double> eta;
    double lambda = 0.0;
    std::uint64_t seed = 0;
};

struct DistributedConfig {
    std::string algo;
    std::string train;
    std::string test;
    std::size_t workers = 4;
    std::optional<double> lambda;
    std::vector<double> grid;
    double rho_admm = 1.0;
    CostPair costs{0.9, 0.1};
    std::size_t max_iter = 0;  // 0: algorithm default
    double tol = 1e-6;
    bool shuffle = false;
    std::string history_path;
    std::string summary_path;
    std::string timing_path;
    std::uint64_t seed = 0;
};

struct SvddConfig {
    std::string data;
    std::size_t train_size = 600;
    double sigma = 1.0;
    double delta = 0.01;
    bool per_feature = false;
    std::string out_path;
};

struct GenerateConfig {
    synthetic::ImbalancedSpec spec;
    std::string out_path;
};

inline const std::vector<std::string>& online_algorithms()
{
    static const std::vector<std::string> names{"pa",       "pa1",      "pa2",   "pagmean",
                                                "pagmean1", "pagmean2", "aspgd", "aspgdnoacc"};
    return names;
}

inline const std::vector<std::string>& distributed_algorithms()
{
    static const std::vector<std::string> names{"dscil-lbfgs", "dscil-rcd", "cilsd"};
    return names;
}

/// "c_pos,c_neg" -> CostPair; throws if the pair is malformed or does not sum to 1.
inline CostPair parse_costs(const std::string& text)
{
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw ConfigError("--costs expects c_pos,c_neg");
    std::size_t used = 0;
    const double pos = std::stod(text.substr(0, comma), &used);
    if (used != comma) throw ConfigError("--costs: malformed positive cost");
    const std::string rest = text.substr(comma + 1);
    const double neg = std::stod(rest, &used);
    if (used != rest.size()) throw ConfigError("--costs: malformed negative cost");
    try {
        return CostPair(pos, neg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("--costs: ") + e.what());
    }
}

inline void write_summary_header(std::ostream& out)
{
    out << "algo,dataset,accuracy,sensitivity,specificity,gmean,sum,mistake_rate\n";
}

inline void write_summary_row(std::ostream& out, const std::string& algo, const std::string& dataset,
                              const ConfusionCounts& c)
{
    const bool any = c.total() > 0;
    out << algo << ',' << dataset << ',' << csv::number(any ? accuracy(c) : 0.0) << ','
        << csv::number(sensitivity(c)) << ',' << csv::number(specificity(c)) << ','
        << csv::number(gmean(c)) << ',' << csv::number(sum_metric(c)) << ','
        << csv::number(any ? mistake_rate(c) : 0.0) << '\n';
}

namespace detail {

inline std::ofstream open_out(const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    return f;
}

inline void emit_summary(const std::string& path, std::ostream& out, const std::string& body)
{
    out << body;
    if (!path.empty()) open_out(path) << body;
}

}  // namespace detail

// ================================ online ================================

inline int cmd_online(const OnlineConfig& cfg, std::ostream& out)
{
    const auto& names = online_algorithms();
    if (std::find(names.begin(), names.end(), cfg.algo) == names.end()) {
        throw ConfigError("unknown online algorithm '" + cfg.algo + "'");
    }
    if (cfg.trace_every == 0) throw ConfigError("--trace-every must be >= 1");

    std::ifstream in(cfg.data, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + cfg.data);
    MinibatchReader reader(in, cfg.batch_size);

    StreamResult res;
    if (cfg.algo.starts_with("pa")) {
        PaConfig pc;
        pc.C = cfg.C;
        pc.cost_sensitive = cfg.algo.starts_with("pagmean");
        const char last = cfg.algo.back();
        pc.variant = last == '1' ? PaVariant::pa1 : last == '2' ? PaVariant::pa2 : PaVariant::pa;
        PaLearner learner(pc);
        res = run_stream(learner, reader, cfg.trace_every);
    } else {
        AspgdConfig ac;
        ac.lambda = cfg.lambda;
        ac.accelerated = cfg.algo == "aspgd";
        ac.eta = cfg.eta;
        AspgdLearner learner(ac);
        res = run_stream(learner, reader, cfg.trace_every);
    }

    if (!cfg.trace_path.empty()) {
        auto f = detail::open_out(cfg.trace_path);
        write_trace_csv(f, res.trace);
    }
    std::ostringstream summary;
    write_summary_header(summary);
    write_summary_row(summary, cfg.algo, cfg.data, res.counts);
    detail::emit_summary(cfg.summary_path, out, summary.str());
    return 0;
}

// ============================= distributed =============================

struct TrainedModel {
    std::vector<double> w;
    std::vector<ConsensusState> history;
    std::vector<WorkerTiming> timings;
};

inline TrainedModel train_distributed(const DistributedConfig& cfg,
                                      std::span<const LabeledInstance> train, double lambda)
{
    std::optional<std::uint64_t> shuffle;
    if (cfg.shuffle) shuffle = cfg.seed;
    auto parts = partition_rows(train, cfg.workers, shuffle);
    const std::size_t dim = max_dimension(train);

    TrainedModel model;
    if (cfg.algo == "cilsd") {
        CilsdOptions o;
        o.lambda = lambda;
        o.costs = cfg.costs;
        o.tol = cfg.tol;
        o.dimension = dim;
        if (cfg.max_iter) o.max_iter = cfg.max_iter;
        auto r = cilsd_train(parts, o);
        model.w = std::move(r.w);
        model.history = residual_rows(r.report);
        model.timings = std::move(r.timings);
    } else {
        DscilOptions o;
        o.lambda = lambda;
        o.rho_admm = cfg.rho_admm;
        o.subsolver = cfg.algo == "dscil-rcd" ? Subsolver::rcd : Subsolver::lbfgs;
        o.costs = cfg.costs;
        o.seed = cfg.seed;
        o.dimension = dim;
        if (cfg.max_iter) o.max_iter = cfg.max_iter;
        auto r = dscil_train(parts, o);
        model.w = std::move(r.w);
        model.history = std::move(r.history);
        model.timings = std::move(r.timings);
    }
    return model;
}

inline ConfusionCounts evaluate(std::span<const double> w, std::span<const LabeledInstance> rows)
{
    ConfusionCounts c;
    for (const auto& r : rows) c = update_confusion(c, r.label, predict(w, r.features));
    return c;
}

inline int cmd_distributed(const DistributedConfig& cfg, std::ostream& out, std::ostream& log)
{
    const auto& names = distributed_algorithms();
    if (std::find(names.begin(), names.end(), cfg.algo) == names.end()) {
        throw ConfigError("unknown distributed algorithm '" + cfg.algo + "'");
    }
    if (cfg.workers == 0) throw ConfigError("--workers must be >= 1");
    if (!(cfg.rho_admm > 0.0)) throw ConfigError("--rho-admm must be > 0");

    const auto raw_train = read_libsvm_file(cfg.train);
    const auto raw_test = read_libsvm_file(cfg.test);
    if (raw_train.empty()) throw ConfigError("training set is empty");
    const auto stats = fit_normalizer(raw_train);
    const auto train = apply_normalizer(stats, raw_train);
    const auto test = apply_normalizer(stats, raw_test);

    std::vector<double> lambdas = cfg.grid;
    if (lambdas.empty()) {
        if (cfg.lambda) {
            lambdas.push_back(*cfg.lambda);
        } else {
            const double lmax = lambda_max(train);
            lambdas.push_back(0.1 * lmax);
            log << "lambda = 0.1 * lambda_max = " << csv::number(lambdas.back())
                << " (lambda_max = " << csv::number(lmax) << ")\n";
        }
    }
    for (double l : lambdas) {
        if (l < 0.0) throw ConfigError("lambda must be >= 0");
    }

    std::ostringstream summary;
    write_summary_header(summary);
    std::ostringstream history, timing;
    for (double l : lambdas) {
        const auto model = train_distributed(cfg, train, l);
        const std::string label = cfg.grid.empty() ? cfg.algo : cfg.algo + "[lambda=" + csv::number(l) + "]";
        write_summary_row(summary, label, cfg.test, evaluate(model.w, test));
        write_residual_csv(history, model.history);
        write_timing_csv(timing, training_time_report(model.timings));
    }
    if (!cfg.history_path.empty()) detail::open_out(cfg.history_path) << history.str();
    if (!cfg.timing_path.empty()) detail::open_out(cfg.timing_path) << timing.str();
    detail::emit_summary(cfg.summary_path, out, summary.str());
    return 0;
}

// ================================= svdd =================================

inline int cmd_svdd(const SvddConfig& cfg, std::ostream& out, std::ostream& log)
{
    const auto rows = read_libsvm_file(cfg.data);
    if (cfg.train_size == 0) throw ConfigError("--train-size must be >= 1");
    if (cfg.train_size > rows.size()) {
        throw ConfigError("--train-size " + std::to_string(cfg.train_size) + " exceeds " +
                          std::to_string(rows.size()) + " rows");
    }
    std::vector<SparseVector> train, test;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        (i < cfg.train_size ? train : test).push_back(rows[i].features);
    }

    std::ostringstream body;
    if (cfg.per_feature) {
        std::size_t dim = 0;
        for (const auto& r : rows) dim = std::max(dim, r.features.dimension());
        const auto results = svdd_detect_per_feature(train, test, dim, cfg.sigma, cfg.delta);
        body << "feature,row_index,distance_sq,flagged\n";
        for (std::size_t j = 0; j < results.size(); ++j) {
            std::ostringstream one;
            write_detection_csv(one, results[j]);
            std::istringstream lines(one.str());
            std::string line;
            std::getline(lines, line);  // header
            while (std::getline(lines, line)) body << j << ',' << line << '\n';
        }
    } else {
        const auto model = svdd_fit(train, cfg.sigma, cfg.delta);
        const auto result = svdd_detect(model, test);
        log << "threshold = " << csv::number(model.threshold) << ", flagged " << result.flagged.size()
            << " of " << test.size() << '\n';
        write_detection_csv(body, result);
    }
    if (cfg.out_path.empty()) {
        out << body.str();
    } else {
        detail::open_out(cfg.out_path) << body.str();
    }
    return 0;
}

// =============================== generate ===============================

inline int cmd_generate(const GenerateConfig& cfg, std::ostream& out)
{
    const auto set = synthetic::imbalanced_linear(cfg.spec);
    std::ostringstream body;
    for (const auto& r : set.rows) body << format_libsvm_line(r) << '\n';
    if (cfg.out_path.empty()) {
        out << body.str();
    } else {
        detail::open_out(cfg.out_path) << body.str();
    }
    return 0;
}

}  // namespace cil::cli
