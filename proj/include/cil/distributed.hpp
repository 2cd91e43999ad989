#pragma once

#include "cil/losses.hpp"
#include "cil/metrics.hpp"
#include "cil/prox.hpp"
#include "cil/sparse_vector.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cil {

// ============================== Message bus ==============================

/// In-process stand-in for an MPI communicator. Collectives block until every
/// worker has arrived. Reductions add contributions in worker-index order, so
/// results are bit-identical on every worker and across runs.
class AllreduceBus {
public:
    explicit AllreduceBus(std::size_t workers)
        : workers_(workers)
        , sync_(static_cast<std::ptrdiff_t>(workers))
        , slots_(workers)
    {
        if (workers == 0) throw std::invalid_argument("AllreduceBus: need at least one worker");
    }

    AllreduceBus(const AllreduceBus&) = delete;
    AllreduceBus& operator=(const AllreduceBus&) = delete;

    [[nodiscard]] std::size_t worker_count() const noexcept { return workers_; }

    /// Replaces `data` with the elementwise sum over all workers.
    void allreduce_sum(std::size_t worker, std::span<double> data)
    {
        slots_[worker].assign(data.begin(), data.end());
        sync_.arrive_and_wait();
        for (std::size_t j = 0; j < data.size(); ++j) {
            double s = slots_[0][j];
            for (std::size_t w = 1; w < workers_; ++w) s += slots_[w][j];
            data[j] = s;
        }
        // slots stay untouched until every worker has read them
        sync_.arrive_and_wait();
    }

    void barrier() { sync_.arrive_and_wait(); }

private:
    std::size_t workers_;
    std::barrier<> sync_;
    std::vector<std::vector<double>> slots_;
};

struct WorkerTiming {
    std::size_t worker_id = 0;
    double seconds = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

/// Runs `body(worker_id)` on one thread per worker and rethrows the first
/// failure in worker order after all threads have joined.
template <class F>
std::vector<WorkerTiming> run_workers(std::size_t n, F&& body)
{
    std::vector<std::exception_ptr> errors(n);
    std::vector<WorkerTiming> timings(n);
    {
        std::vector<std::jthread> threads;
        threads.reserve(n);
        for (std::size_t id = 0; id < n; ++id) {
            threads.emplace_back([&, id] {
                const auto start = std::chrono::steady_clock::now();
                try {
                    timings[id].iterations = body(id);
                } catch (...) {
                    errors[id] = std::current_exception();
                }
                const auto stop = std::chrono::steady_clock::now();
                timings[id].worker_id = id;
                timings[id].seconds = std::max(
                    std::chrono::duration<double>(stop - start).count(), 1e-9);
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return timings;
}

}  // namespace detail

// ============================ Data partitioning ============================

struct WorkerPartition {
    std::size_t worker_id = 0;
    std::vector<LabeledInstance> rows;
    std::vector<double> w_local;
    std::vector<double> u_dual;
};

/// Splits rows into contiguous chunks whose sizes differ by at most one, the
/// first `m % n` chunks taking the extra row. With a seed, rows are shuffled
/// first.
inline std::vector<WorkerPartition> partition_rows(std::span<const LabeledInstance> data,
                                                   std::size_t n_workers,
                                                   std::optional<std::uint64_t> shuffle_seed = {})
{
    if (n_workers == 0) throw std::invalid_argument("partition_rows: need at least one worker");
    if (n_workers > data.size()) {
        throw std::invalid_argument("partition_rows: more workers (" + std::to_string(n_workers) +
                                    ") than rows (" + std::to_string(data.size()) + ")");
    }
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle_seed) {
        std::mt19937_64 rng(*shuffle_seed);
        std::shuffle(order.begin(), order.end(), rng);
    }

    std::vector<WorkerPartition> parts(n_workers);
    const std::size_t base = data.size() / n_workers;
    const std::size_t extra = data.size() % n_workers;
    std::size_t next = 0;
    for (std::size_t w = 0; w < n_workers; ++w) {
        parts[w].worker_id = w;
        const std::size_t count = base + (w < extra ? 1 : 0);
        parts[w].rows.reserve(count);
        for (std::size_t k = 0; k < count; ++k) parts[w].rows.push_back(data[order[next++]]);
    }
    return parts;
}

namespace detail {

inline std::size_t total_rows(std::span<const WorkerPartition> parts) noexcept
{
    std::size_t m = 0;
    for (const auto& p : parts) m += p.rows.size();
    return m;
}

inline std::size_t partition_dimension(std::span<const WorkerPartition> parts) noexcept
{
    std::size_t d = 0;
    for (const auto& p : parts) d = std::max(d, max_dimension(p.rows));
    return d;
}

}  // namespace detail

// ============================= DSCIL (ADMM) =============================

enum class Subsolver { lbfgs, rcd };

struct ConsensusState {
    std::size_t iteration = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double objective = 0.0;
};

struct DscilOptions {
    double lambda = 0.0;
    double rho_admm = 1.0;
    Subsolver subsolver = Subsolver::lbfgs;
    std::size_t max_iter = 10000;
    double eps_abs = 1e-6;
    double eps_rel = 1e-4;
    CostPair costs;
    /// Local subproblem accuracy.
    double sub_tol = 1e-10;
    std::size_t sub_max_iter = 1000;
    std::uint64_t seed = 0;
    /// Feature dimension; inferred from the partitions when 0.
    std::size_t dimension = 0;
};

struct DscilResult {
    std::vector<double> w;  ///< consensus variable z
    std::vector<ConsensusState> history;
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<WorkerTiming> timings;
};

/// Consensus ADMM over sample-partitioned data. Worker i holds (w_i, u_i) and
/// minimizes its share of the cost-weighted smooth hinge plus
/// (rho/2)||w_i - z + u_i||^2 with the chosen subsolver. Then
///   z = soft_threshold(mean(w_i + u_i), lambda / (rho * N)),  u_i += w_i - z.
/// Stops once both the primal residual sqrt(sum ||w_i - z||^2) and the dual
/// residual rho * sqrt(N) * ||z - z_prev|| fall below their absolute/relative
/// tolerances.
inline DscilResult dscil_train(std::vector<WorkerPartition>& parts, const DscilOptions& opt)
{
    if (parts.empty()) throw std::invalid_argument("dscil_train: no partitions");
    if (opt.lambda < 0.0) throw std::invalid_argument("dscil_train: lambda must be >= 0");
    if (!(opt.rho_admm > 0.0)) throw std::invalid_argument("dscil_train: rho_admm must be > 0");

    const std::size_t N = parts.size();
    const std::size_t m = detail::total_rows(parts);
    if (m == 0) throw std::invalid_argument("dscil_train: empty dataset");
    const std::size_t n = opt.dimension ? opt.dimension : detail::partition_dimension(parts);
    const double scale = 1.0 / double(m);
    const double rho = opt.rho_admm;
    const double kappa = opt.lambda / (rho * double(N));
    const double sqrt_nN = std::sqrt(double(n) * double(N));

    AllreduceBus bus(N);
    DscilResult result;

    auto worker = [&](std::size_t id) -> std::size_t {
        auto& part = parts[id];
        part.w_local.assign(n, 0.0);
        part.u_dual.assign(n, 0.0);
        auto& w = part.w_local;
        auto& u = part.u_dual;
        std::vector<double> z(n, 0.0), z_prev(n), anchor(n), buf(n + 2), stats(3);
        SmoothHingeObjective local(part.rows, n, opt.costs, scale);

        std::size_t k = 0;
        while (k < opt.max_iter) {
            ++k;
            for (std::size_t j = 0; j < n; ++j) anchor[j] = z[j] - u[j];
            local.set_proximal_term(rho, anchor);

            std::exception_ptr failure;
            try {
                if (opt.subsolver == Subsolver::lbfgs) {
                    LbfgsOptions lo;
                    lo.tol = opt.sub_tol;
                    lo.max_iter = opt.sub_max_iter;
                    w = lbfgs_minimize(local, w, lo).solution;
                } else {
                    RcdOptions ro;
                    ro.tol = opt.sub_tol;
                    ro.max_iter = opt.sub_max_iter;
                    ro.seed = opt.seed ^ (0x9E3779B97F4A7C15ULL * (id + 1) + k);
                    w = rcd_minimize(local, w, ro).solution;
                }
            } catch (const SolverError&) {
                failure = std::current_exception();
            }

            for (std::size_t j = 0; j < n; ++j) buf[j] = w[j] + u[j];
            buf[n] = vec::squared_norm2(w);
            buf[n + 1] = failure ? 1.0 : 0.0;
            bus.allreduce_sum(id, buf);
            if (buf[n + 1] > 0.0) {
                if (failure) {
                    try {
                        std::rethrow_exception(failure);
                    } catch (const SolverError& e) {
                        throw SolverError("worker " + std::to_string(id) + ": " + e.what());
                    }
                }
                return k;  // another worker failed; it reports the error
            }
            const double w_norm = std::sqrt(buf[n]);

            z_prev = z;
            for (std::size_t j = 0; j < n; ++j) z[j] = soft_threshold(buf[j] / double(N), kappa);
            for (std::size_t j = 0; j < n; ++j) u[j] += w[j] - z[j];

            double local_primal = 0.0;
            for (std::size_t j = 0; j < n; ++j) local_primal += (w[j] - z[j]) * (w[j] - z[j]);
            stats[0] = local_primal;
            stats[1] = vec::squared_norm2(u);
            stats[2] = smooth_hinge_loss_sum(part.rows, z, opt.costs);
            bus.allreduce_sum(id, stats);

            ConsensusState st;
            st.iteration = k;
            st.primal_residual = std::sqrt(stats[0]);
            double dz = 0.0;
            for (std::size_t j = 0; j < n; ++j) dz += (z[j] - z_prev[j]) * (z[j] - z_prev[j]);
            st.dual_residual = rho * std::sqrt(double(N)) * std::sqrt(dz);
            st.objective = stats[2] * scale + opt.lambda * vec::norm1(z);
            if (!std::isfinite(st.objective)) throw SolverError("dscil_train: objective diverged");

            const double eps_pri =
                sqrt_nN * opt.eps_abs + opt.eps_rel * std::max(w_norm, std::sqrt(double(N)) * vec::norm2(z));
            const double eps_dual = sqrt_nN * opt.eps_abs + opt.eps_rel * rho * std::sqrt(stats[1]);
            const bool done = st.primal_residual <= eps_pri && st.dual_residual <= eps_dual;

            if (id == 0) {
                result.history.push_back(st);
                result.w = z;
                result.converged = done;
                result.iterations = k;
            }
            if (done) break;
        }
        return k;
    };

    result.timings = detail::run_workers(N, worker);
    return result;
}

// ============================ CILSD (FISTA) ============================

/// Smooth-hinge loss whose value and gradient are assembled by allreduce over
/// the workers' partial sums. Every worker holds one and they are evaluated
/// in lockstep.
class DistributedSmoothHinge {
public:
    DistributedSmoothHinge(AllreduceBus& bus, std::size_t worker,
                           std::span<const LabeledInstance> rows, std::size_t dimension,
                           CostPair costs, double scale)
        : bus_(&bus)
        , worker_(worker)
        , rows_(rows)
        , dim_(dimension)
        , costs_(costs)
        , scale_(scale)
    {}

    [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }

    [[nodiscard]] double value(std::span<const double> w) const
    {
        double s = smooth_hinge_loss_sum(rows_, w, costs_);
        bus_->allreduce_sum(worker_, std::span<double>(&s, 1));
        return s * scale_;
    }

    void gradient(std::span<const double> w, std::span<double> g) const
    {
        std::fill(g.begin(), g.end(), 0.0);
        add_smooth_hinge_gradient(rows_, w, costs_, g);
        bus_->allreduce_sum(worker_, g);
        for (double& gj : g) gj *= scale_;
    }

    /// (1/m) * sum_i c_i ||x_i||^2 over all workers.
    [[nodiscard]] double lipschitz() const
    {
        double s = weighted_squared_norm_sum(rows_, costs_);
        bus_->allreduce_sum(worker_, std::span<double>(&s, 1));
        return s * scale_;
    }

private:
    AllreduceBus* bus_;
    std::size_t worker_;
    std::span<const LabeledInstance> rows_;
    std::size_t dim_;
    CostPair costs_;
    double scale_;
};

struct CilsdOptions {
    double lambda = 0.0;
    std::size_t max_iter = 5000;
    double tol = 1e-6;
    CostPair costs;
    std::size_t dimension = 0;
};

struct CilsdResult {
    std::vector<double> w;
    SolveReport report;
    std::vector<WorkerTiming> timings;
};

/// Distributed FISTA: every worker runs the same accelerated prox-gradient
/// iteration, with the full gradient formed by one allreduce per step and the
/// step size 1/L taken from the allreduced Lipschitz bound.
inline CilsdResult cilsd_train(std::span<const WorkerPartition> parts, const CilsdOptions& opt)
{
    if (parts.empty()) throw std::invalid_argument("cilsd_train: no partitions");
    if (opt.lambda < 0.0) throw std::invalid_argument("cilsd_train: lambda must be >= 0");
    const std::size_t N = parts.size();
    const std::size_t m = detail::total_rows(parts);
    if (m == 0) throw std::invalid_argument("cilsd_train: empty dataset");
    const std::size_t n = opt.dimension ? opt.dimension : detail::partition_dimension(parts);
    const double scale = 1.0 / double(m);

    AllreduceBus bus(N);
    CilsdResult result;

    auto worker = [&](std::size_t id) -> std::size_t {
        DistributedSmoothHinge f(bus, id, parts[id].rows, n, opt.costs, scale);
        FistaOptions fo;
        fo.max_iter = opt.max_iter;
        fo.tol = opt.tol;
        fo.lipschitz = f.lipschitz();
        if (!(*fo.lipschitz > 0.0)) throw SolverError("cilsd_train: all rows are zero");
        auto rep = fista_minimize(f, opt.lambda, std::vector<double>(n, 0.0), fo);
        const std::size_t iters = rep.iterations;
        if (id == 0) {
            result.w = rep.solution;
            result.report = std::move(rep);
        }
        return iters;
    };

    result.timings = detail::run_workers(N, worker);
    return result;
}

// ============================ Reporting ============================

struct TimingReport {
    std::vector<WorkerTiming> workers;
    double max_seconds = 0.0;    ///< slowest worker, the run's wall-clock
    double total_seconds = 0.0;  ///< summed worker time
    std::size_t max_iterations = 0;
};

inline TimingReport training_time_report(std::span<const WorkerTiming> timings)
{
    TimingReport rep;
    rep.workers.assign(timings.begin(), timings.end());
    for (const auto& t : timings) {
        rep.max_seconds = std::max(rep.max_seconds, t.seconds);
        rep.total_seconds += t.seconds;
        rep.max_iterations = std::max(rep.max_iterations, t.iterations);
    }
    return rep;
}

inline void write_timing_csv(std::ostream& out, const TimingReport& rep)
{
    out << "worker,seconds,iterations\n";
    for (const auto& t : rep.workers) {
        out << t.worker_id << ',' << csv::number(t.seconds) << ',' << t.iterations << '\n';
    }
    out << "all," << csv::number(rep.max_seconds) << ',' << rep.max_iterations << '\n';
}

inline void write_residual_csv(std::ostream& out, std::span<const ConsensusState> history)
{
    out << "iteration,primal_residual,dual_residual,objective\n";
    for (const auto& s : history) {
        out << s.iteration << ',' << csv::number(s.primal_residual) << ','
            << csv::number(s.dual_residual) << ',' << csv::number(s.objective) << '\n';
    }
}

/// FISTA history in the residual CSV layout: the iterate change fills the
/// primal column and the dual column is 0.
inline std::vector<ConsensusState> residual_rows(const SolveReport& rep)
{
    std::vector<ConsensusState> rows;
    for (std::size_t k = 0; k < rep.residual_history.size(); ++k) {
        rows.push_back({k + 1, rep.residual_history[k], 0.0, rep.objective_history[k + 1]});
    }
    return rows;
}

}  // namespace cil
