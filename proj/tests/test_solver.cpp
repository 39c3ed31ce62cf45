#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ibcal/prob.hpp"
#include "ibcal/rng.hpp"
#include "ibcal/solver.hpp"

using namespace ibcal;

namespace {

SolverConfig quick_config(std::size_t t_size, std::uint64_t seed) {
    SolverConfig cfg;
    cfg.t_size = t_size;
    cfg.max_iters = 400;
    cfg.conv_tol = 1e-9;
    cfg.restarts = 2;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("classical solver: compression and informativeness limits") {
    const JointPMF src = dsbs(0.1);

    // vanishing multiplier collapses the encoder onto its feature marginal
    SolverConfig cfg = quick_config(2, 3);
    const Encoder collapsed = solve_classical(src, 1e-6, cfg);
    CHECK(exact_mi(compose(src, collapsed).xt) < 1e-3);

    // a huge multiplier with |T| = |X| recovers nearly all of I(X;Y)
    SolverConfig strong = quick_config(2, 3);
    strong.restarts = 5;
    strong.max_iters = 2000;
    const Encoder sharp = solve_classical(src, 1e3, strong);
    const double target = exact_mi(src);
    CHECK(exact_mi(compose(src, sharp).ty) > 0.98 * target);

    CHECK_THROWS_AS(solve_classical(src, 0.0, cfg), OutOfRange);
    CHECK_THROWS_AS(solve_classical(src, -1.0, cfg), OutOfRange);
}

TEST_CASE("classical objective is nonincreasing across iterations") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const JointPMF src = random_joint(4, 3, 0.8, 500 + seed);
        SolverConfig cfg = quick_config(3, seed);
        cfg.restarts = 1;
        cfg.max_iters = 200;
        const double lambda = 0.05 * std::pow(10.0, static_cast<double>(seed % 4));
        const HyperparameterPoint hp = classical_point(lambda);
        double prev = std::numeric_limits<double>::infinity();
        std::size_t checked = 0;
        solve_classical(src, lambda, cfg, [&](std::size_t, const Mat& rows) {
            const Encoder snapshot = make_encoder(rows, hp);
            const double obj = objective_value(src, snapshot, hp);
            CHECK(obj <= prev + 1e-8);
            prev = obj;
            ++checked;
        });
        CHECK(checked >= 1);
    }
}

TEST_CASE("iterates stay row-stochastic at every step") {
    const JointPMF src = random_joint(5, 4, 1.0, 321);
    SolverConfig cfg = quick_config(3, 11);
    cfg.restarts = 1;
    solve_classical(src, 2.0, cfg, [&](std::size_t, const Mat& rows) {
        for (std::size_t x = 0; x < rows.rows; ++x) {
            double sum = 0.0;
            for (std::size_t t = 0; t < rows.cols; ++t) {
                CHECK(rows(x, t) >= 0.0);
                sum += rows(x, t);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    });
}

TEST_CASE("deterministic solver: gamma=1 reproduces the classical iterates") {
    const JointPMF src = random_joint(6, 4, 1.0, 99);
    SolverConfig cfg = quick_config(3, 17);
    cfg.restarts = 3;

    const Encoder classical = solve_classical(src, 0.7, cfg);
    const Encoder general = solve_deterministic(src, 1.0, 0.7, cfg);
    REQUIRE(classical.rows.data.size() == general.rows.data.size());
    double max_diff = 0.0;
    for (std::size_t i = 0; i < classical.rows.data.size(); ++i) {
        max_diff = std::max(max_diff,
                            std::abs(classical.rows.data[i] - general.rows.data[i]));
    }
    CHECK(max_diff <= 1e-10);
    CHECK(classical.diag.restart_index == general.diag.restart_index);

    CHECK_THROWS_AS(solve_deterministic(src, 0.0, 0.7, cfg), OutOfRange);
    CHECK_THROWS_AS(solve_deterministic(src, 1.2, 0.7, cfg), OutOfRange);
}

TEST_CASE("deterministic solver: small gamma sharpens rows") {
    const JointPMF src = random_joint(8, 4, 1.0, 3);
    SolverConfig cfg = quick_config(4, 5);
    cfg.restarts = 3;
    cfg.max_iters = 1000;
    const Encoder enc = solve_deterministic(src, 0.01, 1.0, cfg);
    for (std::size_t x = 0; x < enc.nx(); ++x) {
        double row_max = 0.0;
        for (std::size_t t = 0; t < enc.nt(); ++t) row_max = std::max(row_max, enc.rows(x, t));
        CHECK(row_max >= 0.99);
    }
}

TEST_CASE("best-of-restarts beats every initialization on its own objective") {
    const JointPMF src = random_joint(5, 4, 1.0, 202);
    SolverConfig cfg = quick_config(3, 21);
    cfg.restarts = 4;
    cfg.max_iters = 300;
    const HyperparameterPoint hp = deterministic_point(0.5, 2.0);
    std::vector<double> init_objectives;
    const Encoder enc =
        solve_deterministic(src, 0.5, 2.0, cfg, [&](std::size_t iter, const Mat& rows) {
            if (iter == 0) {
                init_objectives.push_back(objective_value(src, make_encoder(rows, hp), hp));
            }
        });
    REQUIRE(init_objectives.size() == 4);
    for (double o : init_objectives) {
        CHECK(enc.diag.final_objective <= o + 1e-8);
    }
}

TEST_CASE("ibkd delegates to the classical solver at multiplier 1/lambda") {
    const JointPMF src = dsbs(0.15);
    SolverConfig cfg = quick_config(2, 8);

    const Encoder a = solve_ibkd(src, 1.0, cfg);
    const Encoder b = solve_classical(src, 1.0, cfg);
    CHECK(a.rows.data == b.rows.data);
    CHECK(a.hp.variant == IbVariant::Ibkd);

    // informativeness-dominated limit
    SolverConfig strong = quick_config(2, 8);
    strong.max_iters = 2000;
    strong.restarts = 5;
    const Encoder keen = solve_ibkd(src, 1e-3, strong);
    CHECK(exact_mi(compose(src, keen).ty) > 0.9 * exact_mi(src));

    // the trained encoder beats the uninformative one on its own objective
    const HyperparameterPoint hp = ibkd_point(1e-3);
    const Encoder blind = constant_encoder(2, {0.5, 0.5});
    CHECK(objective_value(src, keen, hp) <= objective_value(src, blind, hp) + 1e-12);
}

TEST_CASE("objective_value: closed-form spot checks") {
    const JointPMF src = dsbs(0.1);

    const HyperparameterPoint classical = classical_point(1.0);
    CHECK(objective_value(src, constant_encoder(2, {0.5, 0.5}), classical) ==
          doctest::Approx(0.0).epsilon(1e-12));

    // identity encoder: I(X;T) = H(X) = ln 2 and I(T;Y) = I(X;Y)
    const double expect = std::numbers::ln2 - exact_mi(src);
    CHECK(objective_value(src, identity_encoder(2), classical) ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(0.3251).epsilon(1e-3));

    // gamma = 1 deterministic objective equals the classical one exactly
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const JointPMF j = random_joint(4, 4, 1.0, seed);
        Rng rng(seed + 40);
        Mat rows(4, 3);
        for (std::size_t x = 0; x < 4; ++x) {
            double tot = 0.0;
            for (std::size_t t = 0; t < 3; ++t) {
                rows(x, t) = rng.gamma(1.0);
                tot += rows(x, t);
            }
            for (std::size_t t = 0; t < 3; ++t) rows(x, t) /= tot;
        }
        const Encoder enc = make_encoder(std::move(rows));
        const double beta = 0.9;
        const double cls = objective_value(j, enc, classical_point(beta));
        const double det = objective_value(j, enc, deterministic_point(1.0, beta));
        CHECK(det == doctest::Approx(cls).epsilon(1e-12));
    }
}

TEST_CASE("train_grid: shapes, tagging, determinism") {
    const JointPMF src = random_joint(4, 3, 1.0, 12);
    const CandidateGrid grid = log_spaced_grid(IbVariant::Classical, 1e-4, 1.0, 12);
    CHECK(grid.points.size() == 12);
    CHECK(grid.points.front().lambda() == doctest::Approx(1e-4));
    CHECK(grid.points.back().lambda() == doctest::Approx(1.0));

    SolverConfig cfg = quick_config(3, 77);
    cfg.restarts = 1;
    cfg.max_iters = 150;
    const std::vector<Encoder> encoders = train_grid(src, grid, cfg);
    REQUIRE(encoders.size() == grid.points.size());
    for (std::size_t i = 0; i < encoders.size(); ++i) {
        CHECK(encoders[i].hp == grid.points[i]);
        validate_encoder_rows(encoders[i].rows);
        // data processing against the source
        CHECK(exact_mi(compose(src, encoders[i]).ty) <= exact_mi(src) + 1e-10);
    }

    const std::vector<Encoder> again = train_grid(src, grid, cfg);
    for (std::size_t i = 0; i < encoders.size(); ++i) {
        CHECK(encoders[i].rows.data == again[i].rows.data);
    }

    // worker count does not change the result
    const std::vector<Encoder> parallel = train_grid(src, grid, cfg, 3);
    for (std::size_t i = 0; i < encoders.size(); ++i) {
        CHECK(encoders[i].rows.data == parallel[i].rows.data);
    }

    const CandidateGrid grid2d = log_spaced_grid_2d(1e-3, 1.0, 3, 1e-4, 1.0, 4);
    CHECK(grid2d.points.size() == 12);
    CHECK(grid2d.points[0].gamma() == doctest::Approx(1e-3));
    CHECK(grid2d.points[3].gamma() == doctest::Approx(1e-3));
    CHECK(grid2d.points[4].beta() == doctest::Approx(1e-4));

    CHECK_THROWS_AS(train_grid(src, CandidateGrid{}, cfg), EmptyInput);
}

TEST_CASE("solver determinism is bit-exact") {
    const JointPMF src = random_joint(5, 3, 1.0, 2);
    SolverConfig cfg = quick_config(3, 123);
    const Encoder a = solve_classical(src, 0.4, cfg);
    const Encoder b = solve_classical(src, 0.4, cfg);
    CHECK(a.rows.data == b.rows.data);
    CHECK(a.diag.iterations == b.diag.iterations);
    CHECK(a.diag.final_objective == b.diag.final_objective);
    CHECK(a.diag.restart_index == b.diag.restart_index);
}
