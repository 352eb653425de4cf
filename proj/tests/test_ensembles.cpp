#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "sparsedisc/errors.hpp"
#include "sparsedisc/locallimits.hpp"
#include "support.hpp"

using namespace sparsedisc;
using testing_support::chi_square_p;

namespace {

Rational t_at(const CouplingTable& table, long j) {
    auto it = table.t.find(j);
    return it == table.t.end() ? Rational(0) : it->second;
}

void check_table(const CouplingTable& table) {
    std::map<long, Rational> left, right;
    for (const auto& [xy, mass] : table.joint) {
        CHECK(sgn(mass) >= 0);
        CHECK(std::labs(xy.first - xy.second) <= 1);
        CHECK(xy.second % 2 == 0);
        left[xy.first] += mass;
        right[xy.second] += mass;
    }
    for (long x = table.base.lo(); x <= table.base.hi(); ++x) CHECK(left[x] == table.base.at(x));
    auto even = table.base.condition([](long k) { return k % 2 == 0; });
    for (long x = even.lo(); x <= even.hi(); ++x) {
        CHECK(right[x] == even.at(x));
        CHECK(table.even_marginal.at(x) == even.at(x));
    }
    for (const auto& [j, t] : table.t) {
        CHECK(sgn(t) >= 0);
        CHECK(t <= table.base.at(j - 1));
    }
}

}  // namespace

TEST_SUITE("ensembles") {
    TEST_CASE("sampling examples") {
        auto zero = sample({EnsembleKind::bernoulli, 2, 4, Rational(0), 7});
        CHECK(zero.rows() == 2);
        CHECK(zero.cols() == 4);
        CHECK(zero.sum() == 0);

        EnsembleSpec spec{EnsembleKind::bernoulli, 3, 8, Rational(1, 3), 99};
        CHECK(sample(spec) == sample(spec));
        EnsembleSpec pspec{EnsembleKind::poisson, 3, 8, Rational(3, 2), 99};
        CHECK(sample(pspec) == sample(pspec));
        CHECK(sample(pspec).minCoeff() >= 0);

        auto wide = sample({EnsembleKind::bernoulli, 1, 10000, parse_rational("0.3"), 5});
        CHECK(wide.maxCoeff() <= 1);
        double mean = wide.cast<double>().mean();
        CHECK(std::fabs(mean - 0.3) < 4 * std::sqrt(0.3 * 0.7 / 10000));
    }

    TEST_CASE("poisson sampling matches the pmf") {
        auto a = sample({EnsembleKind::poisson, 1, 40000, Rational(2), 11});
        std::vector<long> counts(8, 0);
        for (Eigen::Index j = 0; j < a.cols(); ++j) ++counts[static_cast<size_t>(std::min(a(0, j), 7))];
        std::vector<double> probs;
        double tail = 1;
        for (int k = 0; k < 7; ++k) {
            probs.push_back(std::exp(-2.0) * std::pow(2.0, k) / std::tgamma(k + 1));
            tail -= probs.back();
        }
        probs.push_back(tail);
        CHECK(chi_square_p(counts, probs) > 0.001);
    }

    TEST_CASE("invalid specs") {
        CHECK_THROWS_AS(sample({EnsembleKind::bernoulli, 1, 3, Rational(1, 4), 0}), ParameterError);
        CHECK_THROWS_AS(sample({EnsembleKind::bernoulli, 1, 4, Rational(3, 4), 0}), ParameterError);
        CHECK_THROWS_AS(sample({EnsembleKind::poisson, 1, 4, Rational(-1), 0}), ParameterError);
        CHECK_THROWS_AS(parse_ensemble("gaussian"), ParameterError);
    }

    TEST_CASE("coupling of Bin(2, 1/2)") {
        auto table = pinelis_joint(lclt::exact_pmf(lclt::Binomial{2, Rational(1, 2)}));
        CHECK(t_at(table, 0) == 0);
        CHECK(t_at(table, 2) == Rational(1, 4));
        CHECK(t_at(table, 4) == 0);
        std::map<std::pair<long, long>, Rational> expect{
            {{0, 0}, Rational(1, 4)}, {{1, 0}, Rational(1, 4)}, {{1, 2}, Rational(1, 4)}, {{2, 2}, Rational(1, 4)}};
        CHECK(table.joint == expect);
        CHECK(table.up_probability(1) == doctest::Approx(0.5));
    }

    TEST_CASE("even-supported laws couple diagonally") {
        ExactPmf mu(0, {Rational(1, 3), 0, Rational(1, 2), 0, Rational(1, 6)});
        auto table = pinelis_joint(mu);
        for (const auto& [xy, mass] : table.joint) CHECK(xy.first == xy.second);
        check_table(table);
    }

    TEST_CASE("coupling marginals for binomial and truncated poisson laws") {
        for (long n = 1; n <= 12; ++n)
            for (long d = 2; d <= 8; ++d) check_table(pinelis_joint(lclt::exact_pmf(lclt::Binomial{n, ratio(1, d)})));

        std::vector<Rational> w;
        Rational term(1);
        for (long k = 0; k <= 12; ++k) {
            if (k > 0) term *= Rational(1, 2) / k;
            w.push_back(term);
        }
        Rational z;
        for (auto& q : w) z += q;
        for (auto& q : w) q /= z;
        check_table(pinelis_joint(ExactPmf(0, w)));

        for (Rational lam : {Rational(1, 4), Rational(1), Rational(5, 2), Rational(4)}) {
            auto mu = truncated_poisson(lam);
            CHECK(mu.total() == 1);
            check_table(pinelis_joint(mu));
        }
    }

    TEST_CASE("coupling rejects unsupported inputs") {
        CHECK_THROWS_AS(pinelis_joint(ExactPmf(0, {0, Rational(1)})), ParameterError);
        // not log-concave: t leaves its range
        CHECK_THROWS_AS(pinelis_joint(ExactPmf(0, {Rational(1, 10), Rational(1, 10), Rational(1, 10), Rational(7, 10)})),
                        InvariantError);
    }

    TEST_CASE("even-parity coupling of a row") {
        IntMatrix a(1, 3);
        a << 1, 0, 0;
        std::set<std::vector<int>> seen;
        for (std::uint64_t seed = 0; seed < 400; ++seed) {
            IntMatrix b = couple_even_parity(a, EnsembleKind::bernoulli, Rational(1, 3), seed);
            long weight = b.sum();
            CHECK((weight == 0 || weight == 2));
            CHECK((b - a).cwiseAbs().sum() == 1);
            seen.insert({b(0, 0), b(0, 1), b(0, 2)});
        }
        CHECK(seen.size() == 3);  // (0,0,0), (1,1,0), (1,0,1)

        auto big = sample({EnsembleKind::poisson, 20, 10, Rational(3, 2), 3});
        auto even = couple_even_parity(big, EnsembleKind::poisson, Rational(3, 2), 3);
        for (Eigen::Index i = 0; i < big.rows(); ++i) {
            CHECK(even.row(i).sum() % 2 == 0);
            CHECK((even.row(i) - big.row(i)).cwiseAbs().sum() <= 1);
            CHECK(even.row(i).minCoeff() >= 0);
        }
    }

    TEST_CASE("even-parity row sums follow the conditioned binomial") {
        const long n = 6;
        const Rational p(1, 3);
        auto table = row_sum_coupling(EnsembleKind::bernoulli, n, p);
        std::vector<long> counts(n + 1, 0);
        for (std::uint64_t seed = 0; seed < 20000; ++seed) {
            auto a = sample({EnsembleKind::bernoulli, 1, n, p, seed});
            auto b = couple_even_parity(a, EnsembleKind::bernoulli, table, seed);
            ++counts[static_cast<size_t>(b.sum())];
        }
        auto law = lclt::exact_pmf(lclt::Binomial{n, p}).condition([](long k) { return k % 2 == 0; });
        std::vector<double> probs;
        for (long k = 0; k <= n; ++k) probs.push_back(to_double(law.at(k)));
        CHECK(chi_square_p(counts, probs) > 0.001);
    }

    TEST_CASE("fixed-weight rows") {
        CHECK(sample_fixed_weight(FixedWeightKind::bernoulli_without_replacement, 6, 0, 1) == std::vector<int>(6, 0));
        CHECK(sample_fixed_weight(FixedWeightKind::poisson_with_replacement, 6, 0, 1) == std::vector<int>(6, 0));
        CHECK_THROWS_AS(sample_fixed_weight(FixedWeightKind::bernoulli_without_replacement, 4, 5, 1), ParameterError);

        std::map<std::vector<int>, long> rows;
        const long draws = 60000;
        for (std::uint64_t s = 0; s < draws; ++s) {
            auto row = sample_fixed_weight(FixedWeightKind::bernoulli_without_replacement, 4, 2, s);
            long ones = 0;
            for (int x : row) ones += x;
            CHECK(ones == 2);
            ++rows[row];
        }
        CHECK(rows.size() == 6);
        double sigma = std::sqrt(draws * (1.0 / 6) * (5.0 / 6));
        for (const auto& [row, c] : rows) CHECK(std::fabs(static_cast<double>(c) - draws / 6.0) < 4 * sigma);

        std::vector<long> occ(3, 0);
        for (std::uint64_t s = 0; s < 40000; ++s) {
            auto row = sample_fixed_weight(FixedWeightKind::poisson_with_replacement, 2, 2, s);
            CHECK(row[0] + row[1] == 2);
            ++occ[static_cast<size_t>(row[0])];
        }
        CHECK(chi_square_p(occ, {0.25, 0.5, 0.25}) > 0.001);
    }

    TEST_CASE("matrix text format round trip") {
        auto a = sample({EnsembleKind::poisson, 3, 4, Rational(1), 8});
        std::stringstream ss;
        write_matrix(ss, a);
        CHECK(ss.str().find('\r') == std::string::npos);
        CHECK(read_matrix(ss) == a);

        std::stringstream ragged("2 3\n1 0 1\n1 1\n");
        CHECK_THROWS_AS(read_matrix(ragged), ParameterError);
        std::stringstream negative("1 2\n1 -1\n");
        CHECK_THROWS_AS(read_matrix(negative), ParameterError);
        CHECK_THROWS_AS(load_matrix("/nonexistent/a.mat"), ParameterError);
    }
}
