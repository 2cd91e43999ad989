#include "support.hpp"

#include <gtest/gtest.h>

using namespace cil;
using namespace testing_support;

namespace {

ClassState state(std::size_t P, std::size_t N, std::size_t Fn)
{
    ClassState s;
    s.positives = P;
    s.negatives = N;
    s.false_negatives = Fn;
    return s;
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

}  // namespace

TEST(Rho, Examples)
{
    EXPECT_EQ(rho(state(1, 9, 0), Label::positive), 9.0);
    EXPECT_EQ(rho(state(4, 0, 2), Label::negative), 0.5);
    EXPECT_EQ(rho(state(0, 5, 0), Label::positive), 1.0);
    EXPECT_EQ(rho(state(0, 5, 0), Label::negative), 1.0);
}

TEST(ClassState, RecordsFalseNegatives)
{
    ClassState s;
    s.record(Label::positive, Label::negative);
    s.record(Label::positive, Label::positive);
    s.record(Label::negative, Label::positive);
    EXPECT_EQ(s.positives, 2u);
    EXPECT_EQ(s.negatives, 1u);
    EXPECT_EQ(s.false_negatives, 1u);
}

TEST(CostPair, Validates)
{
    const CostPair c(0.3, 0.7);
    EXPECT_EQ(c.weight(Label::positive), 0.3);
    EXPECT_EQ(c.weight(Label::negative), 0.7);
    EXPECT_THROW(CostPair(0.5, 0.6), std::invalid_argument);
    EXPECT_THROW(CostPair(0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(CostPair(1.2, -0.2), std::invalid_argument);
}

TEST(Hinge, Examples)
{
    EXPECT_EQ(hinge_cs(0.0, 9.0), 9.0);
    EXPECT_EQ(hinge_cs(3.5, 3.5), 0.0);
    EXPECT_EQ(hinge_cs(2.0, 1.0), 0.0);
}

TEST(SmoothHinge, Examples)
{
    EXPECT_EQ(smooth_hinge_cs(0.0, 2.0), 1.0);
    EXPECT_EQ(smooth_hinge_cs(1.0, 5.0), 0.0);
    EXPECT_EQ(smooth_hinge_cs(3.0, 5.0), 0.0);
    EXPECT_EQ(smooth_hinge_cs(0.5, 1.0), 0.125);
}

TEST(SmoothHinge, ZeroExactlyAboveUnitMarginAndConvex)
{
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const double r = uniform(rng, 0.01, 10);
        const double a = uniform(rng, -5, 5), b = uniform(rng, -5, 5);
        EXPECT_EQ(smooth_hinge_cs(a, r) == 0.0, a >= 1.0);
        const double t = uniform(rng, 0, 1);
        const double mid = smooth_hinge_cs(t * a + (1 - t) * b, r);
        EXPECT_LE(mid, t * smooth_hinge_cs(a, r) + (1 - t) * smooth_hinge_cs(b, r) + 1e-12);
        if (a <= 0.0) {
            EXPECT_GE(smooth_hinge_cs(a, r), r / 2.0);
        }
    }
}

TEST(SmoothHingeGrad, Examples)
{
    const std::vector<double> w{0.0};
    const auto unit = SparseVector::from_entries({{0, 1.0}});
    const auto g = smooth_hinge_grad(w, unit, Label::positive, 3.0);
    ASSERT_EQ(g.nnz(), 1u);
    EXPECT_EQ(g.entries()[0], (SparseEntry{0, -3.0}));

    const std::vector<double> far{2.0};
    EXPECT_TRUE(smooth_hinge_grad(far, unit, Label::positive, 3.0).empty());
}

TEST(SmoothHingeGrad, MatchesFiniteDifferences)
{
    Rng rng(4);
    int checked = 0;
    while (checked < 100) {
        const std::size_t dim = uniform_index(rng, 1, 12);
        auto w = random_dense(rng, dim);
        const auto x = random_sparse(rng, dim, 0.6);
        const auto y = random_label(rng);
        const double r = uniform(rng, 0.1, 5);
        const double margin = sign_of(y) * dot(w, x);
        if (x.empty() || std::abs(1.0 - margin) <= 1e-3) continue;
        const auto g = smooth_hinge_grad(w, x, y, r).to_dense(dim);
        const double h = 1e-5;
        for (std::size_t j = 0; j < dim; ++j) {
            const double keep = w[j];
            w[j] = keep + h;
            const double up = smooth_hinge_cs(sign_of(y) * dot(w, x), r);
            w[j] = keep - h;
            const double down = smooth_hinge_cs(sign_of(y) * dot(w, x), r);
            w[j] = keep;
            const double fd = (up - down) / (2 * h);
            EXPECT_LT(std::abs(fd - g[j]), 1e-6 * std::max(1.0, std::abs(g[j])));
        }
        // support of the gradient stays inside the support of x
        for (const auto& e : smooth_hinge_grad(w, x, y, r)) {
            EXPECT_NE(x.to_dense(dim)[e.index], 0.0);
        }
        ++checked;
    }
}

TEST(SmoothHingeGrad, LipschitzAlongSegments)
{
    Rng rng(6);
    for (int i = 0; i < 500; ++i) {
        const std::size_t dim = uniform_index(rng, 1, 10);
        const auto w1 = random_dense(rng, dim, 3), w2 = random_dense(rng, dim, 3);
        const auto x = random_sparse(rng, dim, 0.7);
        const auto y = random_label(rng);
        const double r = uniform(rng, 0.1, 5);
        const auto g1 = smooth_hinge_grad(w1, x, y, r).to_dense(dim);
        const auto g2 = smooth_hinge_grad(w2, x, y, r).to_dense(dim);
        std::vector<double> dg(dim), dw(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            dg[j] = g1[j] - g2[j];
            dw[j] = w1[j] - w2[j];
        }
        EXPECT_LE(vec::norm2(dg), r * x.squared_norm() * vec::norm2(dw) + 1e-12);
    }
}

TEST(BatchObjective, Examples)
{
    const CostPair half(0.5, 0.5);
    const std::vector<LabeledInstance> rows{{SparseVector::from_entries({{0, 1.0}}), Label::positive},
                                            {SparseVector::from_entries({{1, 1.0}}), Label::negative}};
    const std::vector<double> zero(2, 0.0);
    // each term is (c/2) with c = 0.5, so the mean is 0.25; doubling the costs would give 0.5
    EXPECT_DOUBLE_EQ(batch_objective(rows, zero, 0.0, half), 0.25);

    const std::vector<LabeledInstance> sep{{SparseVector::from_entries({{0, 1.0}}), Label::positive}};
    const std::vector<double> w{2.0};
    EXPECT_DOUBLE_EQ(batch_objective(sep, w, 0.3, half), 0.3 * 2.0);
    EXPECT_THROW(batch_objective(std::vector<LabeledInstance>{}, w, 0.0, half), std::invalid_argument);
}

TEST(BatchObjective, ZeroWinsAboveCriticalLambda)
{
    // one feature, one positive row: f(w) = (c/2) max(0, 1 - a w)^2
    const CostPair costs(0.9, 0.1);
    const double a = 0.7;
    const std::vector<LabeledInstance> rows{{SparseVector::from_entries({{0, a}}), Label::positive}};
    SmoothHingeObjective f(rows, 1, costs);
    const double crit = critical_lambda(f);
    EXPECT_NEAR(crit, 0.9 * a, 1e-15);
    for (double lambda : {1.05 * crit, 2.0 * crit}) {
        const std::vector<double> zero{0.0};
        const double at_zero = batch_objective(rows, zero, lambda, costs);
        for (double w = -5.0; w <= 5.0; w += 1e-3) {
            if (std::abs(w) < 1e-9) continue;
            const std::vector<double> ww{w};
            EXPECT_GT(batch_objective(rows, ww, lambda, costs), at_zero) << "w = " << w;
        }
    }
    // just below the critical value a small positive weight beats zero
    const double lambda = 0.9 * crit;
    const std::vector<double> zero{0.0}, small{0.05};
    EXPECT_LT(batch_objective(rows, small, lambda, costs), batch_objective(rows, zero, lambda, costs));
}

TEST(SmoothHingeObjective, GradientAndCoordinatesMatchFiniteDifferences)
{
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t dim = 6;
        const auto rows = random_rows(rng, 25, dim, 0.5);
        SmoothHingeObjective f(rows, dim, CostPair(0.8, 0.2));
        if (trial % 2) f.set_proximal_term(1.3, random_dense(rng, dim));
        auto w = random_dense(rng, dim, 0.5);
        std::vector<double> g(dim);
        f.gradient(w, g);
        f.begin_coordinates(w);
        for (std::size_t j = 0; j < dim; ++j) {
            const double keep = w[j];
            const double h = 1e-6;
            w[j] = keep + h;
            const double up = f.value(w);
            w[j] = keep - h;
            const double down = f.value(w);
            w[j] = keep;
            EXPECT_NEAR(g[j], (up - down) / (2 * h), 1e-6);
            EXPECT_NEAR(f.partial(w, j), g[j], 1e-12);
        }

        // moved() keeps the margin cache in step with the iterate
        const std::size_t j = uniform_index(rng, 0, dim - 1);
        w[j] += 0.25;
        f.moved(j, 0.25);
        f.gradient(w, g);
        for (std::size_t k = 0; k < dim; ++k) EXPECT_NEAR(f.partial(w, k), g[k], 1e-12);
    }
}

TEST(SmoothHingeObjective, LipschitzBoundsHold)
{
    Rng rng(9);
    const std::size_t dim = 8;
    const auto rows = random_rows(rng, 40, dim, 0.4);
    SmoothHingeObjective f(rows, dim, CostPair(0.7, 0.3));
    const double L = f.lipschitz();
    std::vector<double> g1(dim), g2(dim), d(dim), dw(dim);
    for (int i = 0; i < 300; ++i) {
        const auto w1 = random_dense(rng, dim, 2), w2 = random_dense(rng, dim, 2);
        f.gradient(w1, g1);
        f.gradient(w2, g2);
        for (std::size_t j = 0; j < dim; ++j) {
            d[j] = g1[j] - g2[j];
            dw[j] = w1[j] - w2[j];
        }
        EXPECT_LE(vec::norm2(d), L * vec::norm2(dw) * (1 + 1e-12));
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < dim; ++j) sum += f.coordinate_lipschitz(j);
    EXPECT_NEAR(sum, L, 1e-12);
    EXPECT_LT(relative_error(L, weighted_squared_norm_sum(rows, f.costs()) / 40.0), 1e-15);
}
