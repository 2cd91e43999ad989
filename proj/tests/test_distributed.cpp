#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <thread>

using namespace cil;
using namespace testing_support;

namespace {

std::vector<std::size_t> sizes(const std::vector<WorkerPartition>& parts)
{
    std::vector<std::size_t> out;
    for (const auto& p : parts) out.push_back(p.rows.size());
    return out;
}

std::vector<LabeledInstance> numbered_rows(std::size_t m)
{
    std::vector<LabeledInstance> rows;
    for (std::size_t i = 0; i < m; ++i) {
        rows.push_back({SparseVector::from_entries({{0, double(i + 1)}}), i % 3 ? Label::negative : Label::positive});
    }
    return rows;
}

double centralized_optimum(const std::vector<LabeledInstance>& rows, double lambda, const CostPair& costs)
{
    SmoothHingeObjective f(rows, max_dimension(rows), costs);
    FistaOptions opt;
    opt.tol = 1e-12;
    opt.max_iter = 200000;
    return fista_minimize(f, lambda, std::vector<double>(max_dimension(rows), 0.0), opt).objective;
}

}  // namespace

TEST(Partition, ChunkSizes)
{
    const auto rows = numbered_rows(10);
    EXPECT_EQ(sizes(partition_rows(rows, 2)), (std::vector<std::size_t>{5, 5}));
    EXPECT_EQ(sizes(partition_rows(rows, 3)), (std::vector<std::size_t>{4, 3, 3}));
    const auto one = partition_rows(rows, 1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].rows, rows);
    EXPECT_THROW(partition_rows(rows, 11), std::invalid_argument);
    EXPECT_THROW(partition_rows(rows, 0), std::invalid_argument);
}

TEST(Partition, DisjointCoverAndDeterministicShuffle)
{
    const auto rows = numbered_rows(23);
    for (std::size_t n = 1; n <= 7; ++n) {
        for (std::optional<std::uint64_t> seed : {std::optional<std::uint64_t>{}, std::optional<std::uint64_t>{42}}) {
            const auto parts = partition_rows(rows, n, seed);
            std::vector<double> seen;
            std::size_t lo = rows.size(), hi = 0;
            for (const auto& p : parts) {
                lo = std::min(lo, p.rows.size());
                hi = std::max(hi, p.rows.size());
                for (const auto& r : p.rows) seen.push_back(r.features.entries()[0].value);
            }
            EXPECT_LE(hi - lo, 1u);
            std::sort(seen.begin(), seen.end());
            for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], double(i + 1));
            EXPECT_EQ(seen.size(), rows.size());
            for (std::size_t w = 0; w < parts.size(); ++w) {
                EXPECT_EQ(parts[w].rows, partition_rows(rows, n, seed)[w].rows);
            }
        }
    }
}

TEST(AllreduceBus, SumsInWorkerOrderAndIsRepeatable)
{
    Rng rng(1);
    for (std::size_t workers : {1u, 2u, 3u, 5u, 8u}) {
        std::vector<std::vector<double>> inputs;
        for (std::size_t w = 0; w < workers; ++w) {
            auto v = random_dense(rng, 16);
            for (double& x : v) x *= std::pow(10.0, uniform(rng, -8, 8));  // mixed magnitudes
            inputs.push_back(v);
        }
        std::vector<double> expected(16, 0.0);
        for (std::size_t j = 0; j < 16; ++j) {
            double s = inputs[0][j];
            for (std::size_t w = 1; w < workers; ++w) s += inputs[w][j];
            expected[j] = s;
        }
        for (int repeat = 0; repeat < 5; ++repeat) {
            AllreduceBus bus(workers);
            std::vector<std::vector<double>> results = inputs;
            {
                std::vector<std::jthread> threads;
                for (std::size_t w = 0; w < workers; ++w) {
                    threads.emplace_back([&, w] {
                        bus.allreduce_sum(w, results[w]);
                        bus.barrier();
                        // a second collective on the same bus
                        std::vector<double> one{double(w)};
                        bus.allreduce_sum(w, one);
                        EXPECT_EQ(one[0], double(workers * (workers - 1) / 2));
                    });
                }
            }
            for (std::size_t w = 0; w < workers; ++w) EXPECT_EQ(results[w], expected);
        }
    }
    EXPECT_THROW(AllreduceBus(0), std::invalid_argument);
}

TEST(Dscil, IdenticalSingleRowPartitionsReachCentralizedMinimizer)
{
    const LabeledInstance row{SparseVector::from_entries({{0, 0.5}, {1, -0.25}}), Label::positive};
    const std::vector<LabeledInstance> rows(4, row);
    const CostPair costs(0.9, 0.1);
    for (auto sub : {Subsolver::lbfgs, Subsolver::rcd}) {
        auto parts = partition_rows(rows, 4);
        DscilOptions opt;
        opt.subsolver = sub;
        opt.costs = costs;
        const auto res = dscil_train(parts, opt);
        ASSERT_TRUE(res.converged);
        // any w with margin >= 1 is optimal when lambda = 0
        EXPECT_NEAR(batch_objective(rows, res.w, 0.0, costs), 0.0, 1e-10);
        EXPECT_LE(res.history.back().primal_residual, 1e-5);
        EXPECT_LE(res.history.back().dual_residual, 1e-5);
    }
}

TEST(Dscil, ZeroLambdaAveragesWithoutShrinkage)
{
    const auto rows = distributed_fixture();
    auto parts = partition_rows(rows, 3);
    DscilOptions opt;
    opt.max_iter = 1;
    const auto res = dscil_train(parts, opt);
    // u starts at 0, so z after one round is the plain average of the local solutions
    const std::size_t n = res.w.size();
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (const auto& p : parts) s += p.w_local[j];
        EXPECT_NEAR(res.w[j], s / 3.0, 1e-15);
    }
    EXPECT_EQ(res.iterations, 1u);
}

TEST(Dscil, MatchesCentralizedObjectiveAndConsensus)
{
    const auto rows = distributed_fixture();
    const CostPair costs(0.9, 0.1);
    const double lambda = 0.1 * lambda_max(rows);
    const double oracle = centralized_optimum(rows, lambda, costs);
    for (std::size_t workers : {2u, 4u}) {
        auto parts = partition_rows(rows, workers);
        DscilOptions opt;
        opt.lambda = lambda;
        opt.costs = costs;
        const auto res = dscil_train(parts, opt);
        ASSERT_TRUE(res.converged);
        const double obj = batch_objective(rows, res.w, lambda, costs);
        EXPECT_LE(std::abs(obj - oracle) / oracle, 1e-4);
        EXPECT_NEAR(res.history.back().objective, obj, 1e-12 * obj);

        // primal residual shrinks early on
        ASSERT_GE(res.history.size(), 20u);
        EXPECT_LT(res.history[19].primal_residual, res.history[0].primal_residual);

        // locals agree with z at convergence
        const double n = double(res.w.size());
        double w_norm_sq = 0.0;
        for (const auto& p : parts) w_norm_sq += vec::squared_norm2(p.w_local);
        const double eps_pri = std::sqrt(n * double(workers)) * opt.eps_abs +
                               opt.eps_rel * std::max(std::sqrt(w_norm_sq), std::sqrt(double(workers)) * vec::norm2(res.w));
        for (const auto& p : parts) EXPECT_LE(vec::max_abs_diff(p.w_local, res.w), 10.0 * eps_pri);

        for (const auto& st : res.history) {
            EXPECT_GE(st.primal_residual, 0.0);
            EXPECT_GE(st.dual_residual, 0.0);
        }
    }
}

TEST(Dscil, SubsolverFailureNamesWorker)
{
    auto rows = distributed_fixture();
    rows.push_back({SparseVector::from_entries({{0, 1e200}}), Label::positive});
    auto parts = partition_rows(rows, 2);
    DscilOptions opt;
    opt.lambda = 0.01;
    try {
        dscil_train(parts, opt);
        FAIL() << "expected a solver error";
    } catch (const SolverError& e) {
        EXPECT_NE(std::string(e.what()).find("worker 1"), std::string::npos) << e.what();
    }
}

TEST(Dscil, RejectsBadOptions)
{
    auto parts = partition_rows(numbered_rows(4), 2);
    DscilOptions opt;
    opt.lambda = -1.0;
    EXPECT_THROW(dscil_train(parts, opt), std::invalid_argument);
    opt.lambda = 0.0;
    opt.rho_admm = 0.0;
    EXPECT_THROW(dscil_train(parts, opt), std::invalid_argument);
    std::vector<WorkerPartition> none;
    EXPECT_THROW(dscil_train(none, DscilOptions{}), std::invalid_argument);
}

TEST(Cilsd, SingleWorkerIsCentralizedFista)
{
    const auto rows = distributed_fixture();
    const CostPair costs(0.9, 0.1);
    const double lambda = 0.1 * lambda_max(rows);
    const auto parts = partition_rows(rows, 1);
    CilsdOptions opt;
    opt.lambda = lambda;
    opt.costs = costs;
    const auto dist = cilsd_train(parts, opt);

    SmoothHingeObjective f(rows, max_dimension(rows), costs);
    const auto central = fista_minimize(f, lambda, std::vector<double>(max_dimension(rows), 0.0));
    EXPECT_EQ(dist.w, central.solution);
    EXPECT_EQ(dist.report.objective_history, central.objective_history);
    EXPECT_EQ(dist.report.iterations, central.iterations);
}

TEST(Cilsd, WorkerCountInvariantAndAccurate)
{
    const auto rows = distributed_fixture();
    const CostPair costs(0.9, 0.1);
    const double lambda = 0.1 * lambda_max(rows);
    const double oracle = centralized_optimum(rows, lambda, costs);
    CilsdOptions opt;
    opt.lambda = lambda;
    opt.costs = costs;
    const auto base = cilsd_train(partition_rows(rows, 1), opt);
    EXPECT_LE(std::abs(batch_objective(rows, base.w, lambda, costs) - oracle) / oracle, 1e-5);
    EXPECT_LE(base.report.iterations, 5000u);
    for (std::size_t workers : {2u, 4u}) {
        const auto other = cilsd_train(partition_rows(rows, workers), opt);
        EXPECT_LE(vec::max_abs_diff(base.w, other.w), 1e-10);
    }
}

TEST(Cilsd, DivergenceAndBadInputsAreErrors)
{
    const std::vector<LabeledInstance> zeros{{SparseVector{}, Label::positive}, {SparseVector{}, Label::negative}};
    CilsdOptions opt;
    opt.dimension = 2;
    EXPECT_THROW(cilsd_train(partition_rows(zeros, 2), opt), SolverError);
    opt.lambda = -1.0;
    EXPECT_THROW(cilsd_train(partition_rows(numbered_rows(3), 1), opt), std::invalid_argument);
}

TEST(Timing, ReportRowsArePositive)
{
    const auto rows = distributed_fixture();
    CilsdOptions opt;
    opt.lambda = 0.01;
    for (std::size_t workers : {1u, 3u}) {
        const auto res = cilsd_train(partition_rows(rows, workers), opt);
        const auto rep = training_time_report(res.timings);
        ASSERT_EQ(rep.workers.size(), workers);
        for (const auto& t : rep.workers) {
            EXPECT_GT(t.seconds, 0.0);
            EXPECT_EQ(t.iterations, res.report.iterations);
        }
        EXPECT_GT(rep.max_seconds, 0.0);
        std::ostringstream out;
        write_timing_csv(out, rep);
        std::istringstream in(out.str());
        std::string line;
        std::vector<std::string> lines;
        while (std::getline(in, line)) lines.push_back(line);
        ASSERT_EQ(lines.size(), workers + 2);
        EXPECT_EQ(lines.front(), "worker,seconds,iterations");
        EXPECT_EQ(lines.back().rfind("all,", 0), 0u);
    }
}

TEST(ResidualCsv, Layout)
{
    std::ostringstream out;
    const std::vector<ConsensusState> hist{{1, 0.5, 0.25, 2.0}, {2, 0.125, 0.0, 1.5}};
    write_residual_csv(out, hist);
    EXPECT_EQ(out.str(), "iteration,primal_residual,dual_residual,objective\n1,0.5,0.25,2\n2,0.125,0,1.5\n");

    SolveReport rep;
    rep.objective_history = {3.0, 2.0, 1.0};
    rep.residual_history = {0.5, 0.1};
    const auto rows = residual_rows(rep);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1].iteration, 2u);
    EXPECT_EQ(rows[1].objective, 1.0);
    EXPECT_EQ(rows[1].dual_residual, 0.0);
}
