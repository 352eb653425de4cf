#include <doctest.h>

#include "sparsedisc/errors.hpp"
#include "sparsedisc/moments.hpp"
#include "support.hpp"

using namespace sparsedisc;
using namespace testing_support;

namespace {

long dot(const std::vector<int>& u, const std::vector<int>& row) {
    long s = 0;
    for (size_t j = 0; j < u.size(); ++j) s += u[j] * row[j];
    return s;
}

/// A finite row law: (row, probability) pairs.
using RowLaw = std::vector<std::pair<std::vector<int>, Rational>>;

RowLaw dense_even_rows(int n, const Rational& p) {
    RowLaw out;
    Rational z;
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
        if (__builtin_popcount(mask) % 2) continue;
        std::vector<int> row(static_cast<size_t>(n));
        Rational pr(1);
        for (int j = 0; j < n; ++j) {
            row[static_cast<size_t>(j)] = (mask >> j) & 1U;
            pr *= row[static_cast<size_t>(j)] ? p : 1 - p;
        }
        z += pr;
        out.emplace_back(row, pr);
    }
    for (auto& [row, pr] : out) pr /= z;
    return out;
}

RowLaw weight_rows(int n, int w) {
    RowLaw out;
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask)
        if (__builtin_popcount(mask) == w) {
            std::vector<int> row(static_cast<size_t>(n));
            for (int j = 0; j < n; ++j) row[static_cast<size_t>(j)] = (mask >> j) & 1U;
            out.emplace_back(row, Rational(1));
        }
    for (auto& [row, pr] : out) pr /= static_cast<long>(out.size());
    return out;
}

RowLaw placement_rows(int n, int w) {
    RowLaw out;
    long total = 1;
    for (int i = 0; i < w; ++i) total *= n;
    std::map<std::vector<int>, long> occ;
    for (long code = 0; code < total; ++code) {
        std::vector<int> row(static_cast<size_t>(n), 0);
        long c = code;
        for (int i = 0; i < w; ++i) {
            ++row[static_cast<size_t>(c % n)];
            c /= n;
        }
        ++occ[row];
    }
    for (const auto& [row, c] : occ) out.emplace_back(row, ratio(c, total));
    return out;
}

/// E[Z^2] / E[Z]^2 with m independent rows from `law`, by enumerating all
/// m-tuples of rows.
Rational brute_ratio(const RowLaw& law, int n, int m, const SymmetricBand& band) {
    auto us = sign_vectors(n, true);
    Rational ez, ez2;
    std::vector<size_t> idx(static_cast<size_t>(m), 0);
    while (true) {
        Rational pr(1);
        for (size_t i : idx) pr *= law[i].second;
        long z = 0;
        for (const auto& u : us) {
            bool ok = true;
            for (size_t i : idx) ok = ok && band.contains(dot(u, law[i].first));
            z += ok;
        }
        ez += pr * z;
        ez2 += pr * z * z;
        size_t pos = 0;
        while (pos < idx.size() && ++idx[pos] == law.size()) idx[pos++] = 0;
        if (pos == idx.size()) break;
    }
    return ez2 / (ez * ez);
}

/// psi and phi for u, v at overlap r under `law`.
PsiPhi brute_psi_phi(const RowLaw& law, int n, int r, const SymmetricBand& band) {
    auto [u, v] = overlap_pair(n, r);
    PsiPhi out;
    for (const auto& [row, pr] : law) {
        bool a = band.contains(dot(u, row)), b = band.contains(dot(v, row));
        if (a) out.psi += pr;
        if (a && b) out.phi += pr;
    }
    return out;
}

}  // namespace

TEST_SUITE("moments") {
    TEST_CASE("parity probability") {
        CHECK(parity_prob(5, Rational(1, 2)) == Rational(1, 2));
        CHECK(parity_prob(7, Rational(0)) == 1);
        CHECK(parity_prob(2, Rational(1, 4)) == Rational(5, 8));
    }

    TEST_CASE("bands") {
        CHECK(SymmetricBand().members() == std::set<long>{0});
        CHECK(SymmetricBand::radius(2).members() == std::set<long>{-2, -1, 0, 1, 2});
        CHECK_THROWS_AS(SymmetricBand(std::set<long>{0, 1}), ParameterError);
        CHECK_THROWS_AS(SymmetricBand(std::set<long>{}), ParameterError);
    }

    TEST_CASE("dense psi and phi examples") {
        auto pp = psi_phi_dense(4, Rational(1, 2), 1);
        CHECK(pp.psi == Rational(3, 4));
        CHECK(pp.phi == Rational(1, 2));
        for (long n : {4L, 6L, 10L}) {
            auto full = psi_phi_dense(n, Rational(1, 3), n / 2);
            CHECK(full.phi == full.psi);
        }
    }

    TEST_CASE("dense psi and phi match enumeration, general bands") {
        for (int n : {2, 4, 6, 8})
            for (Rational p : {Rational(1, 2), Rational(1, 3), Rational(1, 8)})
                for (long rad : {0L, 1L, 2L}) {
                    auto band = SymmetricBand::radius(rad);
                    auto law = dense_even_rows(n, p);
                    for (int r = 0; r <= n / 2; ++r) {
                        auto got = psi_phi_dense(n, p, r, band);
                        auto want = brute_psi_phi(law, n, r, band);
                        CHECK(got.psi == want.psi);
                        CHECK(got.phi == want.phi);
                    }
                }
    }

    TEST_CASE("fixed-weight examples") {
        OverlapScenario b{MomentCase::bernoulli_fixed_weight, 4, 2, {}, Rational(1, 2)};
        auto pb = psi_phi_fixed_weight(b);
        CHECK(pb.psi == Rational(2, 3));
        CHECK(pb.phi == Rational(1, 3));
        b.beta = 1;
        CHECK(psi_phi_fixed_weight(b).phi == Rational(2, 3));
        b.beta = Rational(1, 3);
        CHECK_THROWS_AS(psi_phi_fixed_weight(b), ParameterError);

        for (Rational beta : {Rational(0), Rational(1, 5), Rational(1, 2), Rational(7, 9), Rational(1)}) {
            OverlapScenario p{MomentCase::poisson_fixed_weight, 4, 2, {}, beta};
            auto pp = psi_phi_fixed_weight(p);
            CHECK(pp.psi == Rational(1, 2));
            CHECK(pp.phi == (beta * beta + (1 - beta) * (1 - beta)) / 2);
        }
    }

    TEST_CASE("fixed-weight psi and phi match enumeration") {
        for (int n : {4, 6, 8})
            for (int w = 0; w <= n; w += 2) {
                auto law = weight_rows(n, w);
                for (int r = 0; r <= n / 2; ++r) {
                    OverlapScenario sc{MomentCase::bernoulli_fixed_weight, n, w, {}, ratio(2 * r, n)};
                    auto got = psi_phi_fixed_weight(sc);
                    auto want = brute_psi_phi(law, n, r, {});
                    CHECK(got.psi == want.psi);
                    CHECK(got.phi == want.phi);
                }
            }
        for (int w = 0; w <= 4; ++w) {
            auto law = placement_rows(8, w);
            for (long rad : {0L, 1L, 2L, 3L}) {
                auto band = SymmetricBand::radius(rad);
                for (int r = 0; r <= 4; ++r) {
                    OverlapScenario sc{MomentCase::poisson_fixed_weight, 8, w, band, ratio(r, 4)};
                    auto got = psi_phi_fixed_weight(sc);
                    auto want = brute_psi_phi(law, 8, r, band);
                    CHECK(got.psi == want.psi);
                    CHECK(got.phi == want.phi);
                }
            }
        }
    }

    TEST_CASE("phi is symmetric under beta -> 1 - beta") {
        for (long rad : {0L, 1L, 2L}) {
            auto band = SymmetricBand::radius(rad);
            for (long r = 0; r <= 8; ++r)
                CHECK(psi_phi_dense(16, Rational(1, 5), r, band).phi == psi_phi_dense(16, Rational(1, 5), 8 - r, band).phi);
            for (long w : {3L, 4L, 7L})
                for (Rational beta : {Rational(1, 7), Rational(2, 5)}) {
                    OverlapScenario a{MomentCase::poisson_fixed_weight, 10, w, band, beta};
                    OverlapScenario b = a;
                    b.beta = 1 - beta;
                    CHECK(psi_phi_fixed_weight(a).phi == psi_phi_fixed_weight(b).phi);
                }
        }
        for (long r = 0; r <= 6; ++r) {
            OverlapScenario a{MomentCase::bernoulli_fixed_weight, 12, 4, {}, ratio(r, 6)};
            OverlapScenario b{MomentCase::bernoulli_fixed_weight, 12, 4, {}, ratio(6 - r, 6)};
            CHECK(psi_phi_fixed_weight(a).phi == psi_phi_fixed_weight(b).phi);
        }
    }

    TEST_CASE("sparse bernoulli: phi / psi^2 dips below one at the centre") {
        for (long w : {2L, 4L, 6L}) {
            auto rel = [&](long r) {
                OverlapScenario sc{MomentCase::bernoulli_fixed_weight, 16, w, {}, ratio(r, 8)};
                auto pp = psi_phi_fixed_weight(sc);
                return Rational(pp.phi / (pp.psi * pp.psi));
            };
            Rational centre = rel(4);
            CHECK(centre < 1);
            for (long r = 0; r <= 8; ++r) {
                CHECK(rel(r) == rel(8 - r));
                CHECK(rel(r) >= centre);
            }
        }
    }

    TEST_CASE("first moment") {
        MomentParams pois{MomentCase::poisson_fixed_weight, 1, 4, Rational(1, 2), {2}, {}};
        CHECK(expected_solution_count(pois).exact == Rational(3));
        MomentParams dense{MomentCase::bernoulli_parity_dense, 1, 4, Rational(1, 2), {}, {}};
        CHECK(expected_solution_count(dense).exact == Rational(9, 2));
        MomentParams trivial{MomentCase::bernoulli_fixed_weight, 3, 10, Rational(1, 2), {0, 0, 0}, {}};
        auto ev = expected_solution_count(trivial);
        CHECK(ev.exact == Rational(252));
        CHECK(ev.log_value == doctest::Approx(std::log(252.0)));
        MomentParams wide{MomentCase::bernoulli_parity_dense, 2, 200, Rational(1, 2), {}, {}};
        auto big = expected_solution_count(wide);
        CHECK_FALSE(big.exact);
        CHECK(std::isfinite(big.log_value));
    }

    TEST_CASE("ratio worked example and Vandermonde closure") {
        MomentParams dense{MomentCase::bernoulli_parity_dense, 1, 4, Rational(1, 2), {}, {}};
        auto rr = second_moment_ratio(dense);
        REQUIRE(rr.ratio.exact);
        CHECK(*rr.ratio.exact == Rational(28, 27));
        CHECK(rr.profile.size() == 3);

        for (long n : {2L, 8L, 20L, 40L}) {
            Integer sum;
            for (long r = 0; r <= n / 2; ++r) sum += binomial(n / 2, r) * binomial(n / 2, r);
            CHECK(sum == binomial(n, n / 2));
        }
        // psi = phi = 1 at w = 0, so every overlap term is 1
        MomentParams flat{MomentCase::bernoulli_fixed_weight, 2, 12, Rational(1, 2), {0, 0}, {}};
        CHECK(*second_moment_ratio(flat).ratio.exact == 1);
    }

    TEST_CASE("ratio equals brute force over conditioned matrices") {
        for (int n : {2, 4, 6, 8})
            for (Rational p : {Rational(1, 2), Rational(1, 3), Rational(1, 8)}) {
                MomentParams mp{MomentCase::bernoulli_parity_dense, 1, n, p, {}, {}};
                CHECK(*second_moment_ratio(mp).ratio.exact == brute_ratio(dense_even_rows(n, p), n, 1, {}));
            }
        MomentParams two{MomentCase::bernoulli_parity_dense, 2, 4, Rational(1, 3), {}, SymmetricBand::radius(2)};
        CHECK(*second_moment_ratio(two).ratio.exact == brute_ratio(dense_even_rows(4, Rational(1, 3)), 4, 2, two.band));
        MomentParams fw{MomentCase::bernoulli_fixed_weight, 2, 6, Rational(1, 2), {2, 2}, {}};
        CHECK(*second_moment_ratio(fw).ratio.exact == brute_ratio(weight_rows(6, 2), 6, 2, {}));
        MomentParams pw{MomentCase::poisson_fixed_weight, 1, 6, Rational(1, 2), {3}, SymmetricBand::radius(1)};
        CHECK(*second_moment_ratio(pw).ratio.exact == brute_ratio(placement_rows(6, 3), 6, 1, pw.band));
    }

    TEST_CASE("log mode agrees with exact mode") {
        MomentParams mp{MomentCase::bernoulli_parity_dense, 4, 32, Rational(1, 4), {}, {}};
        auto exact = second_moment_ratio(mp);
        auto logm = second_moment_ratio(mp, MomentMode::log);
        CHECK(logm.ratio.log_value == doctest::Approx(log_of(*exact.ratio.exact)).epsilon(1e-10));
        MomentLimits tight{16, 8};
        CHECK_THROWS_AS(second_moment_ratio(mp, MomentMode::exact, tight), CapacityError);
    }

    TEST_CASE("dense regime direction") {
        MomentParams half{MomentCase::bernoulli_parity_dense, 4, 32, Rational(1, 2), {}, {}};
        MomentParams sparse = half;
        sparse.p = Rational(1, 16);
        CHECK(*second_moment_ratio(half).ratio.exact < *second_moment_ratio(sparse).ratio.exact);
    }

    TEST_CASE("second-moment conditions") {
        MomentParams flat{MomentCase::bernoulli_fixed_weight, 1, 32, Rational(1, 2), {0}, {}};
        auto rep = moment_report(flat);
        auto flags = check_smm_conditions(rep, 1, Rational(1, 8), Rational(1, 4));
        CHECK(flags.first_moment_holds);
        CHECK(flags.weak_bound_holds);
        CHECK(flags.strong_bound_holds);
        CHECK(flags.c_delta == doctest::Approx(1.0));
        CHECK(flags.c_fit == doctest::Approx(0.0));

        MomentParams fw{MomentCase::bernoulli_fixed_weight, 1, 32, Rational(1, 2), {8}, {}};
        auto f2 = check_smm_conditions(moment_report(fw), 1, Rational(1, 8), Rational(1, 4));
        CHECK(f2.weak_bound_holds);
        CHECK(std::isfinite(f2.c_delta));

        MomentParams dense{MomentCase::bernoulli_parity_dense, 2, 32, Rational(1, 2), {}, {}};
        auto f3 = check_smm_conditions(moment_report(dense), 2, Rational(1, 8), Rational(1, 4));
        REQUIRE(f3.central_deviation);
        CHECK(*f3.central_deviation < 1.0 / 20);
        CHECK(f3.strong_bound_holds);

        MomentParams coarse{MomentCase::bernoulli_parity_dense, 1, 4, Rational(1, 2), {}, {}};
        CHECK_THROWS_AS(check_smm_conditions(moment_report(coarse), 1, Rational(1, 8), Rational(1, 4)), ParameterError);
    }

    TEST_CASE("report json") {
        MomentParams dense{MomentCase::bernoulli_parity_dense, 1, 4, Rational(1, 2), {}, {}};
        auto js = to_json(moment_report(dense), std::nullopt);
        CHECK(js.find("\"ratio\":\"28/27\"") != std::string::npos);
        CHECK(js.find("\"psi\":\"3/4\"") != std::string::npos);
        CHECK(js.find("[1,2,\"1/2\"]") != std::string::npos);
    }

    TEST_CASE("parameter validation") {
        MomentParams odd{MomentCase::bernoulli_parity_dense, 1, 5, Rational(1, 2), {}, {}};
        CHECK_THROWS_AS(second_moment_ratio(odd), ParameterError);
        MomentParams missing{MomentCase::poisson_fixed_weight, 2, 4, Rational(1, 2), {2}, {}};
        CHECK_THROWS_AS(second_moment_ratio(missing), ParameterError);
        MomentParams unequal{MomentCase::poisson_fixed_weight, 2, 4, Rational(1, 2), {2, 4}, {}};
        CHECK_THROWS_AS(moment_report(unequal), ParameterError);
        CHECK_THROWS_AS(parse_moment_case("gauss"), ParameterError);
    }
}
