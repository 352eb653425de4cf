#include <doctest.h>

#include "sparsedisc/errors.hpp"
#include "sparsedisc/phase.hpp"

using namespace sparsedisc;

TEST_SUITE("phase") {
    TEST_CASE("wilson interval") {
        auto [lo, hi] = wilson_interval(20, 20);
        CHECK(hi == 1.0);
        CHECK(lo == doctest::Approx(0.8388748).epsilon(1e-6));
        auto [lo2, hi2] = wilson_interval(50, 100);
        CHECK(lo2 == doctest::Approx(0.4038315).epsilon(1e-6));
        CHECK(hi2 == doctest::Approx(0.5961685).epsilon(1e-6));
        auto [lo3, hi3] = wilson_interval(0, 10);
        CHECK(lo3 == 0.0);
        CHECK(hi3 > 0.0);
    }

    TEST_CASE("large radius makes every trial a success") {
        PhaseScanConfig cfg;
        cfg.m = 3;
        cfg.n_values = {4, 8, 12};
        cfg.radius = 12;
        cfg.trials = 25;
        for (const auto& row : run_phase_scan(cfg)) {
            CHECK(row.successes == 25);
            CHECK(row.p_hat == 1.0);
        }
    }

    TEST_CASE("rows do not depend on the thread count") {
        PhaseScanConfig cfg;
        cfg.m = 4;
        cfg.n_values = {6, 10, 14};
        cfg.radius = 1;
        cfg.trials = 60;
        cfg.seed = 17;
        cfg.parity = ParityMode::even;
        cfg.threads = 1;
        auto one = to_csv(run_phase_scan(cfg));
        cfg.threads = 8;
        CHECK(to_csv(run_phase_scan(cfg)) == one);
        cfg.seed = 18;
        CHECK(to_csv(run_phase_scan(cfg)) != one);
    }

    TEST_CASE("poisson ensemble runs") {
        PhaseScanConfig cfg;
        cfg.kind = EnsembleKind::poisson;
        cfg.param = Rational(1, 2);
        cfg.m = 2;
        cfg.n_values = {8};
        cfg.trials = 10;
        auto rows = run_phase_scan(cfg);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].trials == 10);
    }

    TEST_CASE("invalid configurations are refused before any work") {
        PhaseScanConfig cfg;
        cfg.m = 2;
        cfg.n_values = {8, 42, 44};
        try {
            run_phase_scan(cfg);
            FAIL("expected a capacity error");
        } catch (const CapacityError& e) {
            std::string msg = e.what();
            CHECK(msg.find("2x42") != std::string::npos);
            CHECK(msg.find("2x44") != std::string::npos);
            CHECK(msg.find("2x8") == std::string::npos);
        }
        cfg.n_values = {7};
        CHECK_THROWS_AS(run_phase_scan(cfg), ParameterError);
        cfg.n_values = {8};
        cfg.trials = 0;
        CHECK_THROWS_AS(run_phase_scan(cfg), ParameterError);
        CHECK_THROWS_AS(parse_parity("odd"), ParameterError);
    }

    TEST_CASE("csv format") {
        std::vector<PhaseRow> rows{{8, 10, 3, 0.3, 0.1, 0.6}};
        CHECK(to_csv(rows) == "n,trials,successes,p_hat,wilson_lo,wilson_hi\n8,10,3,0.300000,0.100000,0.600000\n");
    }
}
