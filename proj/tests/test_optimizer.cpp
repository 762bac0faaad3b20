#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>

#include "oracles.hpp"
#include "pdag/evaluate.hpp"
#include "pdag/optimizer.hpp"
#include "pdag/reference.hpp"

using pdag::Matrix;

namespace {

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

// Random partition of p variables into `blocks` non-empty blocks.
pdag::Partition random_partition(std::size_t p, std::size_t blocks, std::mt19937_64& rng) {
    std::vector<std::size_t> perm(p);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> cuts(p - 1);
    std::iota(cuts.begin(), cuts.end(), 1);
    std::shuffle(cuts.begin(), cuts.end(), rng);
    cuts.resize(blocks - 1);
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(p);
    std::vector<std::vector<std::size_t>> out;
    std::size_t start = 0;
    for (std::size_t c : cuts) {
        out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start), perm.begin() + static_cast<std::ptrdiff_t>(c));
        start = c;
    }
    return pdag::Partition(out, p);
}

}  // namespace

TEST_CASE("update formulas agree with 1-D grid oracles on the documented examples") {
    // Oracle values first: minimise on a fine grid, independent of the closed forms.
    const auto diag = [](double s, double c) {
        return oracle::grid_minimum([&](double x) { return oracle::diagonal_objective(s, c, x); }, 1e-6, 3.0, 300001)
            .first;
    };
    CHECK(diag(1.0, 0.0) == doctest::Approx(0.70711).epsilon(1e-4));
    CHECK(diag(2.0, 0.0) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(diag(1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-4));

    const auto off = [](double s, double c, double lambda) {
        return oracle::grid_minimum([&](double b) { return oracle::offdiag_objective(s, c, lambda, b); }, -3.0, 3.0,
                                    600001)
            .first;
    };
    CHECK(off(1.0, -1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(std::abs(off(1.0, -0.4, 1.0)) < 1e-5);
    CHECK(std::abs(off(1.0, 0.0, 0.7)) < 1e-5);

    // Frozen values against the closed forms.
    CHECK(pdag::update_diagonal(1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(pdag::update_diagonal(2.0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pdag::update_diagonal(1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pdag::update_free_offdiagonal(1.0, -1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pdag::update_free_offdiagonal(1.0, -0.4, 1.0) == 0.0);
    CHECK(pdag::update_free_offdiagonal(3.0, 0.0, 0.0) == 0.0);
    CHECK(pdag::update_free_offdiagonal(3.0, 0.0, 2.0) == 0.0);
}

TEST_CASE("update formulas reject non-positive variances") {
    CHECK_THROWS_AS(pdag::update_diagonal(0.0, 1.0), pdag::DomainError);
    CHECK_THROWS_AS(pdag::update_free_offdiagonal(-1.0, 1.0, 0.1), pdag::DomainError);
}

TEST_CASE("soft_threshold") {
    CHECK(pdag::soft_threshold(2.0, 0.5) == 1.5);
    CHECK(pdag::soft_threshold(-2.0, 0.5) == -1.5);
    CHECK(pdag::soft_threshold(0.4, 0.5) == 0.0);
    CHECK(pdag::soft_threshold(-0.5, 0.5) == 0.0);
}

TEST_CASE("diagonal update stays accurate for large c") {
    // Rationalised form avoids cancellation: compare with long double arithmetic.
    for (double c : {1e3, 1e6, 1e8}) {
        const long double s = 0.7L;
        const long double exact = 2.0L / (2.0L * static_cast<long double>(c) +
                                          2.0L * std::sqrt(static_cast<long double>(c) * c + 2.0L * s));
        CHECK(pdag::update_diagonal(0.7, c) == doctest::Approx(static_cast<double>(exact)).epsilon(1e-12));
    }
}

TEST_CASE("block row cache matches a from-scratch recomputation") {
    const auto s = oracle::random_covariance(6, 20, 3);
    const pdag::Partition part({{0, 1}, {2, 3, 4, 5}}, 6);
    const pdag::CanonicalCovariance cs(s, part);
    pdag::BlockRowState st(cs, 2, 6);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const std::size_t i = 2 + rng() % 4;
        const std::size_t j = rng() % 6;
        st.set_value(i, j, i == j ? 0.5 + std::abs(unif(rng)) : unif(rng));
    }
    for (std::size_t i = 2; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            double c = 0.0;
            for (std::size_t k = 0; k < 6; ++k)
                if (k != j) c += cs(j, k) * st.value(i, k);
            CHECK(std::abs(st.inner(i, j) - c) < 1e-9);
        }
}

TEST_CASE("constrained pair picks the direction a 2-D exhaustive search prefers") {
    Matrix sm(2, 2);
    sm << 1.0, 0.8, 0.8, 2.0;
    const pdag::SampleCovariance s(sm);
    const auto part = pdag::Partition::single_block(2);
    const pdag::CanonicalCovariance cs(s, part);
    pdag::BlockRowState st(cs, 0, 2);
    const double d = 1.0 / std::sqrt(2.0);
    st.set_value(0, 0, d);
    st.set_value(1, 1, d);
    const double lambda = 0.1;

    // Oracle: best objective with only B_01 free, and with only B_10 free.
    const auto with = [&](Eigen::Index i, Eigen::Index j) {
        return oracle::grid_minimum(
            [&](double x) {
                Matrix b = Matrix::Identity(2, 2) * d;
                b(i, j) = x;
                return oracle::full_objective(b, sm, lambda);
            },
            -2.0, 2.0, 400001);
    };
    const auto [x01, q01] = with(0, 1);
    const auto [x10, q10] = with(1, 0);
    REQUIRE(q10 < q01);
    CHECK(x10 == doctest::Approx(-0.515685).epsilon(1e-4));

    const auto r = pdag::update_constrained_pair(st, 0, 1, lambda);
    CHECK(r.b_ij == 0.0);
    CHECK(r.b_ji == doctest::Approx(x10).epsilon(1e-4));
    CHECK(st.value(1, 0) == r.b_ji);
    CHECK(st.value(0, 1) == 0.0);
    CHECK(st.graph().has_edge(0, 1));  // B_10 != 0 is the edge 0 -> 1
    (void)x01;
}

TEST_CASE("constrained pair with both candidates zero leaves the graph alone") {
    Matrix sm(2, 2);
    sm << 1.0, 0.01, 0.01, 1.0;
    const pdag::SampleCovariance s(sm);
    const pdag::CanonicalCovariance cs(s, pdag::Partition::single_block(2));
    pdag::BlockRowState st(cs, 0, 2);
    const auto r = pdag::update_constrained_pair(st, 0, 1, 1.0);
    CHECK(r.b_ij == 0.0);
    CHECK(r.b_ji == 0.0);
    CHECK(st.graph().edge_count() == 0);
}

TEST_CASE("constrained pair pins the direction that would close a cycle") {
    Matrix sm = Matrix::Identity(3, 3);
    sm(0, 2) = sm(2, 0) = 0.9;
    const pdag::SampleCovariance s(sm);
    const pdag::CanonicalCovariance cs(s, pdag::Partition::single_block(3));
    pdag::BlockRowState st(cs, 0, 3);
    // Existing path 0 -> 1 -> 2 (B_10 and B_21 nonzero).
    st.set_value(1, 0, 0.3);
    st.graph().add_edge(0, 1);
    st.set_value(2, 1, 0.3);
    st.graph().add_edge(1, 2);

    // B_02 would add 2 -> 0 and close the cycle; B_20 (0 -> 2) is free.
    const double expected_free = pdag::update_free_offdiagonal(sm(0, 0), st.inner(2, 0), 0.1);
    REQUIRE(expected_free != 0.0);
    const auto r = pdag::update_constrained_pair(st, 0, 2, 0.1);
    CHECK(r.b_ij == 0.0);
    CHECK(r.b_ji == expected_free);
    CHECK(st.graph().has_edge(0, 2));
    CHECK_FALSE(st.graph().has_edge(2, 0));
}

TEST_CASE("fit with p = 1 gives 1/sqrt(2s)") {
    for (double sv : {0.25, 1.0, 3.0}) {
        Matrix sm(1, 1);
        sm << sv;
        pdag::FitOptions o;
        o.lambda = 5.0;
        const auto r = pdag::fit(pdag::SampleCovariance(sm), pdag::Partition::single_block(1), o);
        CHECK(r.estimate(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0 * sv)).epsilon(1e-14));
        CHECK(r.converged);
        CHECK(r.sweeps_used <= 2);
    }
}

TEST_CASE("large penalty gives an empty graph with diagonal 1/sqrt(2 S_ii)") {
    const auto s = oracle::random_covariance(6, 40, 12);
    pdag::FitOptions o;
    o.lambda = 1e3;
    const auto r = pdag::fit(s, pdag::Partition::single_block(6), o);
    CHECK(r.estimate.edge_count() == 0);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(r.estimate(i, i) == doctest::Approx(1.0 / std::sqrt(2.0 * s(i, i))).epsilon(1e-12));
}

TEST_CASE("lambda = 0 with a full ordering solves the unpenalised problem") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto s = oracle::random_covariance(5, 25, seed);
        pdag::FitOptions o;
        o.lambda = 0.0;
        o.tol = 1e-13;
        o.max_sweeps = 100000;
        const auto r = pdag::fit_cscs(s, {0, 1, 2, 3, 4}, o);
        const Matrix omega = r.estimate.values().transpose() * r.estimate.values();
        const Matrix target = s.matrix().inverse() / 2.0;
        CHECK((omega - target).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("fit is bitwise identical across thread counts") {
    const auto s = oracle::random_covariance(24, 60, 8);
    const pdag::Partition part({{0, 1, 2, 3, 4, 5}, {6, 7, 8, 9, 10, 11}, {12, 13, 14, 15, 16, 17},
                                {18, 19, 20, 21, 22, 23}},
                               24);
    pdag::FitOptions o;
    o.lambda = 0.05;
    const auto base = pdag::fit(s, part, o);
    for (int threads : {2, 8}) {
        o.thread_count = threads;
        const auto r = pdag::fit(s, part, o);
        CHECK(bitwise_equal(r.estimate.values(), base.estimate.values()));
        CHECK(bitwise_equal(r.objective_trace, base.objective_trace));
        CHECK(r.sweeps_used == base.sweeps_used);
    }
}

TEST_CASE("boundary-case wrappers") {
    const auto s = oracle::random_covariance(2, 30, 4);
    pdag::FitOptions o;
    o.lambda = 0.01;
    const auto cscs = pdag::fit_cscs(s, {0, 1}, o);
    CHECK(cscs.estimate(0, 1) == 0.0);
    CHECK(cscs.estimate.partition() == pdag::Partition::natural_singletons(2));

    const auto ccdr = pdag::fit_ccdr(s, o);
    CHECK(ccdr.estimate.edge_count() <= 1);
    CHECK(ccdr.estimate.partition().block_count() == 1);

    const auto direct = pdag::fit(s, pdag::Partition::single_block(2), o);
    CHECK(bitwise_equal(direct.estimate.values(), ccdr.estimate.values()));
}

TEST_CASE("fit rejects mismatched dimensions and bad options") {
    const auto s = oracle::random_covariance(3, 10, 1);
    CHECK_THROWS_AS(pdag::fit(s, pdag::Partition::single_block(4), {}), pdag::InputError);
    pdag::FitOptions o;
    o.tol = -1;
    CHECK_THROWS_AS(pdag::fit(s, pdag::Partition::single_block(3), o), pdag::InputError);
}

TEST_CASE("objective trace is non-increasing and starts at B = I") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t p = 3 + rng() % 12;
        const std::size_t blocks = 1 + rng() % 3;
        const auto s = oracle::random_covariance(p, 2 * p, 500 + static_cast<std::uint64_t>(trial));
        const auto part = random_partition(p, blocks, rng);
        pdag::FitOptions o;
        o.lambda = 0.02 + 0.1 * static_cast<double>(trial % 4);
        const auto r = pdag::fit(s, part, o);
        CHECK(r.objective_trace.front() ==
              doctest::Approx(pdag::objective(Matrix::Identity(static_cast<Eigen::Index>(p),
                                                               static_cast<Eigen::Index>(p)),
                                              s, o.lambda))
                  .epsilon(1e-12));
        CHECK(r.objective() == doctest::Approx(pdag::objective(r.estimate, s, o.lambda)).epsilon(1e-10));
        for (std::size_t k = 1; k < r.objective_trace.size(); ++k)
            CHECK(r.objective_trace[k] <= r.objective_trace[k - 1] + 1e-10);
        if (r.converged) CHECK(r.final_change < o.tol);
        CHECK(oracle::structural_violation(r.estimate.values(), part).empty());
    }
}

TEST_CASE("tight fits satisfy the KKT conditions") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto s = oracle::random_covariance(6, 30, 900 + seed);
        pdag::FitOptions o;
        o.lambda = 0.05 * static_cast<double>(seed);
        o.tol = 1e-12;
        o.max_sweeps = 100000;
        std::vector<std::size_t> order{5, 3, 1, 0, 2, 4};
        const auto r = pdag::fit_cscs(s, order, o);
        CHECK(r.converged);
        CHECK(r.max_kkt_residual < 1e-6);
        CHECK(pdag::kkt_residual(r.estimate, s, o.lambda) == r.max_kkt_residual);
    }
}

TEST_CASE("kkt_residual flags a non-optimal point") {
    const auto s = oracle::random_covariance(3, 20, 2);
    const pdag::CholeskyFactor eye(Matrix::Identity(3, 3), pdag::Partition::natural_singletons(3));
    CHECK(pdag::kkt_residual(eye, s, 0.0) > 1e-3);
}

TEST_CASE("block-parallel kernel matches the serial reference solver") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 15; ++trial) {
        const std::size_t p = 2 + rng() % 11;
        const std::size_t blocks = 1 + rng() % std::min<std::size_t>(3, p);
        const auto s = oracle::random_covariance(p, 3 * p, 40 + static_cast<std::uint64_t>(trial));
        const auto part = random_partition(p, blocks, rng);
        pdag::FitOptions o;
        o.lambda = 0.03 + 0.05 * static_cast<double>(trial % 3);
        o.thread_count = 2;
        const auto fast = pdag::fit(s, part, o);
        const auto slow = pdag::reference::fit_serial(s, part, o);
        CHECK(fast.sweeps_used == slow.sweeps_used);
        CHECK((fast.estimate.values() - slow.estimate.values()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(pdag::edges_of(fast.estimate).size() == pdag::edges_of(slow.estimate).size());
        CHECK(fast.objective() == doctest::Approx(slow.objective()).epsilon(1e-10));
    }
}

TEST_CASE("penalty_grid endpoints and emptiness bracket") {
    const auto s = oracle::random_covariance(8, 40, 21);
    const auto part = pdag::Partition::single_block(8);
    const auto two = pdag::penalty_grid(s, part, 2, {});
    REQUIRE(two.size() == 2);
    CHECK(two[1] == doctest::Approx(two[0] / 1e4).epsilon(1e-14));
    // The top is a power of two.
    CHECK(std::exp2(std::round(std::log2(two[0]))) == two[0]);

    pdag::FitOptions o;
    o.lambda = two[0];
    CHECK(pdag::fit(s, part, o).estimate.edge_count() == 0);
    o.lambda = two[0] / 2.0;
    CHECK(pdag::fit(s, part, o).estimate.edge_count() > 0);

    const auto grid = pdag::penalty_grid(s, part, 30, {});
    REQUIRE(grid.size() == 30);
    CHECK(grid.front() == two[0]);
    CHECK(grid.back() == two[1]);
    for (std::size_t k = 1; k < grid.size(); ++k) CHECK(grid[k] < grid[k - 1]);
    CHECK_THROWS_AS(pdag::penalty_grid(s, part, 1, {}), pdag::InputError);
}

TEST_CASE("path endpoints run from empty to near-dense") {
    const auto s = oracle::random_covariance(10, 50, 6);
    const auto part = pdag::Partition::natural_singletons(10);
    const auto grid = pdag::penalty_grid(s, part, 5, {});
    pdag::FitOptions o;
    o.thread_count = 3;
    const auto path = pdag::fit_path(s, part, grid, o);
    REQUIRE(path.fits.size() == 5);
    CHECK(path.lambdas == grid);
    CHECK(path.fits.front().estimate.edge_count() == 0);
    CHECK(pdag::edge_density(path.fits.back().estimate) >= 0.8);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        o.lambda = grid[k];
        o.thread_count = 1;
        const auto single = pdag::fit(s, part, o);
        CHECK(bitwise_equal(single.estimate.values(), path.fits[k].estimate.values()));
        CHECK(path.fits[k].lambda == grid[k]);
    }
}

TEST_CASE("density selection") {
    const auto s = oracle::random_covariance(20, 80, 15);
    const auto part = pdag::Partition::single_block(20);
    const auto zero = pdag::select_lambda_for_density(s, part, 0.0, 0.02, {});
    CHECK(zero.fit.estimate.edge_count() == 0);
    CHECK(zero.lambda == pdag::penalty_grid(s, part, 2, {}).front());
    CHECK(zero.within_tolerance);

    const auto sel = pdag::select_lambda_for_density(s, part, 0.2, 0.02, {});
    CHECK(sel.within_tolerance);
    CHECK(std::abs(sel.density - 0.2) <= 0.02);
    CHECK(sel.density == pdag::edge_density(sel.fit.estimate));
    CHECK(sel.fit.lambda == sel.lambda);

    CHECK_THROWS_AS(pdag::select_lambda_for_density(s, part, 1.0, 0.02, {}), pdag::InputError);
    CHECK_THROWS_AS(pdag::select_lambda_for_density(s, part, 0.3, 0.0, {}), pdag::InputError);
}
