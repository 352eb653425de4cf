#include <doctest.h>

#include <cmath>

#include "sparsedisc/errors.hpp"
#include "sparsedisc/locallimits.hpp"

using namespace sparsedisc;
using namespace sparsedisc::lclt;

namespace {

ApproxQuery query(ApproxKind kind, long n, Rational p, long point) {
    ApproxQuery q;
    q.kind = kind;
    q.n = n;
    q.p = p;
    q.point = point;
    return q;
}

}  // namespace

TEST_SUITE("locallimits") {
    TEST_CASE("exact pmf examples") {
        auto b = exact_pmf(Binomial{4, Rational(1, 2)});
        std::vector<Rational> expect{Rational(1, 16), Rational(1, 4), Rational(3, 8), Rational(1, 4), Rational(1, 16)};
        CHECK(b.lo() == 0);
        CHECK(b.weights == expect);

        auto lw = exact_pmf(LazyWalk{2, Rational(1, 2)});
        CHECK(lw.lo() == -2);
        CHECK(lw.weights == std::vector<Rational>{Rational(1, 16), Rational(1, 4), Rational(3, 8), Rational(1, 4),
                                                  Rational(1, 16)});

        auto h = exact_pmf(Hypergeometric{2, 2, 4});
        CHECK(h.weights == std::vector<Rational>{Rational(1, 6), Rational(2, 3), Rational(1, 6)});

        CHECK_THROWS_AS(exact_pmf(Hypergeometric{2, 5, 4}), ParameterError);
    }

    TEST_CASE("exact pmfs sum to one, lazy walk is symmetric with variance 2p(1-p) r") {
        for (long r : {0L, 1L, 3L, 10L, 37L})
            for (Rational p : {Rational(1, 10), Rational(1, 3), Rational(1, 2), Rational(5, 7)}) {
                auto pmf = exact_pmf(LazyWalk{r, p});
                CHECK(pmf.total() == 1);
                for (long k = 0; k <= r; ++k) CHECK(pmf.at(k) == pmf.at(-k));
                CHECK(pmf.expect([](long k) { return Rational(k * k); }) == r * lazy_step_variance(p));
                for (long k = -r - 1; k <= r + 1; ++k) CHECK(lazy_walk_at(r, p, k) == pmf.at(k));
            }
        for (long n : {1L, 9L, 30L}) CHECK(exact_pmf(Binomial{n, Rational(2, 7)}).total() == 1);
        CHECK(exact_pmf(Hypergeometric{7, 5, 19}).total() == 1);
    }

    TEST_CASE("real pmf tracks the exact one") {
        auto e = exact_pmf(LazyWalk{50, Rational(3, 10)});
        auto r = real_pmf(LazyWalk{50, Rational(3, 10)});
        REQUIRE(r.lo() == e.lo());
        for (long k = e.lo(); k <= e.hi(); ++k)
            CHECK(r.at(k) == doctest::Approx(to_double(e.at(k))).epsilon(1e-10));
        CHECK_THROWS_AS(exact_pmf(LazyWalk{kExactCap + 1, Rational(1, 2)}), CapacityError);
    }

    TEST_CASE("demoivre at the centre of Bin(100, 1/2)") {
        auto q = query(ApproxKind::demoivre, 100, Rational(1, 2), 50);
        CHECK(approx_eval(q) == doctest::Approx(1 / std::sqrt(50 * M_PI)).epsilon(1e-9));
        CHECK(std::exp(exact_log_eval(q)) == doctest::Approx(0.0795892).epsilon(1e-6));
        CHECK(std::fabs(approx_eval(q) / std::exp(exact_log_eval(q)) - 1) < 0.01);
    }

    TEST_CASE("poisson tail bound at x = 0 is 2") {
        ApproxQuery q;
        q.kind = ApproxKind::poisson_tail;
        q.lambda = 4;
        q.deviation = 0;
        CHECK(approx_eval(q) == doctest::Approx(2.0));
        CHECK(std::exp(exact_log_eval(q)) <= 1.0);
    }

    TEST_CASE("edgeworth at r = 200, p = 0.1") {
        auto q = query(ApproxKind::edgeworth_lazy, 200, Rational(1, 10), 0);
        double exact = std::exp(exact_log_eval(q));
        CHECK(exact == doctest::Approx(to_double(lazy_walk_at(200, Rational(1, 10), 0))).epsilon(1e-12));
        double sigma2 = 2 * 0.1 * 0.9;
        CHECK(std::fabs(approx_eval(q) / exact - 1) < 5 / std::pow(200 * sigma2, 2));
    }

    TEST_CASE("edgeworth residual decays like r^-2") {
        std::vector<ApproxQuery> grid;
        for (long r : {100L, 200L, 400L, 800L}) grid.push_back(query(ApproxKind::edgeworth_lazy, r, Rational(1, 10), 0));
        auto table = error_scan(ApproxKind::edgeworth_lazy, grid);
        CHECK(table.predicted_exponent == -2);
        CHECK(table.fitted_exponent == doctest::Approx(-2).epsilon(0.1));
        for (size_t i = 1; i < table.rows.size(); ++i) {
            double f = std::fabs(table.rows[i - 1].rel_error / table.rows[i].rel_error);
            CHECK((f >= 3 && f <= 5));
        }
    }

    TEST_CASE("cramer bound dominates the binomial pmf") {
        std::vector<ApproxQuery> grid;
        for (long n : {10L, 40L, 160L})
            for (Rational p : {Rational(1, 8), Rational(1, 3), Rational(1, 2)})
                for (long k = 0; k <= n; k += std::max(1L, n / 10)) grid.push_back(query(ApproxKind::cramer_tail, n, p, k));
        auto table = error_scan(ApproxKind::cramer_tail, grid);
        CHECK(table.dominates);
        for (const auto& row : table.rows) CHECK(row.approx >= row.exact);
    }

    TEST_CASE("hypergeometric and poisson tail bounds dominate") {
        std::vector<ApproxQuery> grid;
        for (long N : {20L, 80L})
            for (long w : {N / 8, N / 4, N / 2})
                for (long succ : {N / 8, N / 2})
                    for (long x = 0; x <= w; ++x) {
                        ApproxQuery q;
                        q.kind = ApproxKind::hyp_tail;
                        q.n = w;
                        q.population = N;
                        q.successes = succ;
                        q.point = x;
                        grid.push_back(q);
                    }
        CHECK(error_scan(ApproxKind::hyp_tail, grid).dominates);

        std::vector<ApproxQuery> pgrid;
        for (Rational lam : {Rational(1, 2), Rational(4), Rational(30)})
            for (long x = 0; x <= 40; x += 3) {
                ApproxQuery q;
                q.kind = ApproxKind::poisson_tail;
                q.lambda = lam;
                q.deviation = x;
                pgrid.push_back(q);
            }
        CHECK(error_scan(ApproxKind::poisson_tail, pgrid).dominates);
    }

    TEST_CASE("stirling at the centre approaches the central binomial") {
        double prev = 1e9;
        for (long n : {10L, 20L, 40L, 80L, 160L}) {
            auto q = query(ApproxKind::stirling_binom, n, Rational(1, 2), n / 2);
            double expect = 0.5 * std::log(2 / (M_PI * n)) + n * std::log(2.0);
            CHECK(approx_log_eval(q) == doctest::Approx(expect).epsilon(1e-12));
            double err = std::fabs(std::exp(approx_log_eval(q) - exact_log_eval(q)) - 1);
            CHECK(err < prev);
            prev = err;
        }
    }

    TEST_CASE("out-of-range parameters are rejected") {
        CHECK_THROWS_AS(approx_eval(query(ApproxKind::demoivre, 10, Rational(0), 3)), ParameterError);
        CHECK_THROWS_AS(approx_eval(query(ApproxKind::edgeworth_lazy, 10, Rational(1, 2), 11)), ParameterError);
        CHECK_THROWS_AS(error_scan(ApproxKind::demoivre, {}), ParameterError);
        CHECK_THROWS_AS(parse_kind("gauss"), ParameterError);
    }

    TEST_CASE("csv layout") {
        auto table = error_scan(ApproxKind::demoivre, {query(ApproxKind::demoivre, 20, Rational(1, 2), 10)});
        auto csv = to_csv(table);
        CHECK(csv.rfind("kind,n,p,point,population,successes,lambda,deviation,exact,approx,rel_error\n", 0) == 0);
        CHECK(csv.find('\r') == std::string::npos);
    }
}
