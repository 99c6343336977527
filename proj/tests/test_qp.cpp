#include <doctest.h>

#include <cmath>

#include "qp_oracle.hpp"
#include "wso_instances.hpp"
#include "wsosvm/qp.hpp"
#include "wsosvm/rng.hpp"

using namespace wsosvm;

namespace {

qp::QPInstance two_var_identity() {
    qp::QPInstance inst;
    inst.n = 2;
    inst.q = {1.0, 0.0, 0.0, 1.0};
    inst.lin = {1.0, 1.0};
    inst.lower = {0.0, 0.0};
    inst.upper = {10.0, 10.0};
    return inst;
}

}  // namespace

TEST_CASE("interior stationary point of the 2-variable identity QP") {
    auto inst = two_var_identity();
    auto sol = qp::solve(inst);
    CHECK(sol.gamma[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sol.gamma[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sol.objective == doctest::Approx(-1.0).epsilon(1e-10));

    auto oracle = qp_oracle::brute_force(inst);
    REQUIRE(oracle.found);
    CHECK(sol.objective == doctest::Approx(oracle.objective).epsilon(1e-8));

    // the analytic optimum certifies at machine precision
    auto report = qp::kkt_residuals(inst, {1.0, 1.0}, {});
    CHECK(report.stationarity_residual <= 1e-12);
    CHECK(report.primal_feas_residual <= 1e-12);
    CHECK(report.complementarity_residual <= 1e-12);
}

TEST_CASE("fully clamped boxes pin gamma to zero") {
    auto inst = two_var_identity();
    inst.upper = {0.0, 0.0};
    auto sol = qp::solve(inst);
    CHECK(sol.gamma[0] == 0.0);
    CHECK(sol.gamma[1] == 0.0);
    CHECK(sol.objective == 0.0);
}

TEST_CASE("gamma at the origin of an interior-optimum problem") {
    auto inst = two_var_identity();
    auto report = qp::kkt_residuals(inst, {0.0, 0.0}, {});
    CHECK(report.stationarity_residual == doctest::Approx(1.0));
}

TEST_CASE("feasible random points violate complementarity, not feasibility") {
    auto inst = two_var_identity();
    inst.eq = {1.0, -1.0};
    rng::Stream stream(61, "test/kkt-feasible");
    for (int trial = 0; trial < 10; ++trial) {
        double v = stream.uniform(0.5, 9.5);
        std::vector<double> gamma = {v, v};  // eq holds by construction
        auto report = qp::kkt_residuals(inst, gamma, {});
        CHECK(report.primal_feas_residual <= 1e-8);
        CHECK(report.complementarity_residual > 0.0);
    }
}

TEST_CASE("instance validation rejects broken inputs") {
    auto inst = two_var_identity();
    inst.lower = {1.0, 0.0};
    inst.upper = {0.0, 10.0};
    CHECK_THROWS_AS(qp::solve(inst), DataError);

    inst = two_var_identity();
    inst.q[1] = 0.5;  // asymmetric
    CHECK_THROWS_AS(qp::solve(inst), DataError);

    inst = two_var_identity();
    qp::SolveOptions opts;
    opts.tol = -1.0;
    CHECK_THROWS_AS(qp::solve(inst, opts), ConfigError);
}

TEST_CASE("solver matches the exhaustive active-set oracle on WSO duals") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        auto inst = wso_instances::make(seed, 6 + seed % 4);
        auto sol = qp::solve(inst.qp);
        auto oracle = qp_oracle::brute_force(inst.qp);
        REQUIRE(oracle.found);
        INFO("seed ", seed, " solver ", sol.objective, " oracle ", oracle.objective);
        CHECK(sol.objective <= oracle.objective + 1e-6);
        CHECK(sol.objective >= oracle.objective - 1e-6);
        CHECK(sol.kkt.max_residual() <= 1e-6);
        CHECK(sol.mu >= -1e-8);
        CHECK(sol.lagrange_ineq >= -1e-12);
    }
}

TEST_CASE("sequential solves are bitwise deterministic") {
    auto inst = wso_instances::make(99, 10);
    auto a = qp::solve(inst.qp);
    auto b = qp::solve(inst.qp);
    CHECK(a.gamma == b.gamma);
    CHECK(a.objective == b.objective);
    CHECK(a.lagrange_eq == b.lagrange_eq);
}

TEST_CASE("non-convergence carries the best iterate") {
    auto inst = wso_instances::make(7, 12);
    qp::SolveOptions opts;
    opts.tol = 1e-16;  // unreachable
    opts.max_iter = 2;
    try {
        qp::solve(inst.qp, opts);
        FAIL("expected NonConvergence");
    } catch (const qp::NonConvergence& err) {
        CHECK(err.best_iterate.gamma.size() == inst.qp.n);
        for (std::size_t i = 0; i < inst.qp.n; ++i) {
            CHECK(err.best_iterate.gamma[i] >= inst.qp.lower[i] - 1e-9);
            CHECK(err.best_iterate.gamma[i] <= inst.qp.upper[i] + 1e-9);
        }
        CHECK(std::isfinite(err.best_iterate.kkt.stationarity_residual));
    }
}

TEST_CASE("qp debug dump writes the CSV matrices") {
    auto inst = wso_instances::make(3, 8);
    auto sol = qp::solve(inst.qp);
    auto dir = std::filesystem::temp_directory_path() / "wsosvm-tests" / "qp-dump";
    std::filesystem::remove_all(dir);
    qp::dump_qp(inst.qp, sol.gamma, dir);
    CHECK(std::filesystem::exists(dir / "Q.csv"));
    CHECK(std::filesystem::exists(dir / "lin.csv"));
    CHECK(std::filesystem::exists(dir / "eq.csv"));
    CHECK(std::filesystem::exists(dir / "ineq.csv"));
    CHECK(std::filesystem::exists(dir / "gamma.csv"));
}
