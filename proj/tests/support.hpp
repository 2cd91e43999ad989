#pragma once

// Seeded generators and small dense helpers shared by the test suites.

#include "cil/cil.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace testing_support {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi)
{
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline cil::Label random_label(Rng& rng, double positive_prob = 0.5)
{
    return uniform(rng, 0.0, 1.0) < positive_prob ? cil::Label::positive : cil::Label::negative;
}

/// Sparse row with each coordinate present with probability `density`.
inline cil::SparseVector random_sparse(Rng& rng, std::size_t dim, double density, double scale = 1.0)
{
    cil::SparseVector v;
    for (std::size_t j = 0; j < dim; ++j) {
        if (uniform(rng, 0.0, 1.0) < density) v.push_back(cil::FeatureIndex(j), uniform(rng, -scale, scale));
    }
    return v;
}

inline std::vector<double> random_dense(Rng& rng, std::size_t dim, double scale = 1.0)
{
    std::vector<double> v(dim);
    for (double& x : v) x = uniform(rng, -scale, scale);
    return v;
}

inline std::vector<cil::LabeledInstance> random_rows(Rng& rng, std::size_t m, std::size_t dim,
                                                     double density, double positive_prob = 0.3)
{
    std::vector<cil::LabeledInstance> rows;
    rows.reserve(m);
    for (std::size_t i = 0; i < m; ++i) rows.push_back({random_sparse(rng, dim, density), random_label(rng, positive_prob)});
    return rows;
}

/// The seeded 200 x 50 imbalanced set used by the distributed checks,
/// normalized per feature.
inline std::vector<cil::LabeledInstance> distributed_fixture(std::uint64_t seed = 7)
{
    cil::synthetic::ImbalancedSpec spec;
    spec.rows = 200;
    spec.features = 50;
    spec.positive_fraction = 0.1;
    spec.seed = seed;
    auto rows = cil::synthetic::imbalanced_linear(spec).rows;
    return cil::apply_normalizer(cil::fit_normalizer(rows), rows);
}

}  // namespace testing_support
