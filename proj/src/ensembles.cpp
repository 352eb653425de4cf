#include "sparsedisc/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sparsedisc/errors.hpp"
#include "sparsedisc/locallimits.hpp"
#include "sparsedisc/rng.hpp"

namespace sparsedisc {

namespace {

// Stream purposes, so that sampling and coupling never share randomness.
constexpr std::uint64_t kSampleStream = 0;
constexpr std::uint64_t kCoupleStream = 1;

/// Exact Bernoulli(num/den) draw when den fits 64 bits.
class BernoulliDraw {
   public:
    explicit BernoulliDraw(const Rational& p) {
        exact_ = p.get_den().fits_ulong_p();
        if (exact_) {
            num_ = p.get_num().get_ui();
            den_ = p.get_den().get_ui();
        }
        prob_ = to_double(p);
    }
    bool operator()(CounterRng& rng) const { return exact_ ? rng.below(den_) < num_ : rng.uniform() < prob_; }

   private:
    bool exact_ = false;
    unsigned long num_ = 0, den_ = 1;
    double prob_ = 0;
};

/// Inversion sampler for Poisson(lambda) truncated at poisson_sampling_cap.
class PoissonInversion {
   public:
    explicit PoissonInversion(double lambda) {
        long cap = poisson_sampling_cap(lambda);
        cdf_.reserve(static_cast<size_t>(cap + 1));
        long double acc = 0;
        for (long k = 0; k <= cap; ++k) {
            long double lp = lambda == 0 ? (k == 0 ? 0.0L : -INFINITY)
                                          : -static_cast<long double>(lambda) +
                                                static_cast<long double>(k) * std::log(static_cast<long double>(lambda)) -
                                                std::lgamma(static_cast<long double>(k) + 1);
            acc += std::exp(lp);
            cdf_.push_back(acc);
        }
        for (auto& c : cdf_) c /= acc;
    }
    int operator()(CounterRng& rng) const {
        long double u = rng.uniform();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) return static_cast<int>(cdf_.size() - 1);
        return static_cast<int>(it - cdf_.begin());
    }

   private:
    std::vector<long double> cdf_;
};

}  // namespace

EnsembleKind parse_ensemble(std::string_view name) {
    if (name == "bernoulli") return EnsembleKind::bernoulli;
    if (name == "poisson") return EnsembleKind::poisson;
    throw ParameterError("unknown ensemble '" + std::string(name) + "' (expected bernoulli or poisson)");
}

std::string_view ensemble_name(EnsembleKind kind) {
    return kind == EnsembleKind::bernoulli ? "bernoulli" : "poisson";
}

void EnsembleSpec::validate() const {
    require(m >= 0, "m must be nonnegative");
    require(n >= 0, "n must be nonnegative");
    require(n % 2 == 0, "n must be even, got " + std::to_string(n));
    if (kind == EnsembleKind::bernoulli) {
        require(param >= 0 && param <= Rational(1, 2),
                "bernoulli p must lie in [0, 1/2], got " + to_string(param) + "; flip explicitly for p > 1/2");
    } else {
        require(param >= 0, "poisson rate must be nonnegative, got " + to_string(param));
        require(param <= 500, "poisson rate above 500 is not supported");
    }
}

long poisson_sampling_cap(double lambda) {
    if (lambda <= 0) return 0;
    const double c = 61.0 * std::log(2.0);  // 2 e^{-c} = 2^-60
    double x = c + std::sqrt(c * c + 2 * c * lambda);
    return static_cast<long>(std::ceil(lambda + x));
}

IntMatrix sample(const EnsembleSpec& spec) {
    spec.validate();
    IntMatrix a = IntMatrix::Zero(spec.m, spec.n);
    if (spec.kind == EnsembleKind::bernoulli) {
        BernoulliDraw draw(spec.param);
        for (long i = 0; i < spec.m; ++i) {
            CounterRng rng(spec.seed, static_cast<std::uint64_t>(i), kSampleStream);
            for (long j = 0; j < spec.n; ++j) a(i, j) = draw(rng) ? 1 : 0;
        }
    } else {
        PoissonInversion draw(to_double(spec.param));
        for (long i = 0; i < spec.m; ++i) {
            CounterRng rng(spec.seed, static_cast<std::uint64_t>(i), kSampleStream);
            for (long j = 0; j < spec.n; ++j) a(i, j) = draw(rng);
        }
    }
    return a;
}

// ---------------------------------------------------------------------------

double CouplingTable::up_probability(long x) const {
    if (x % 2 == 0) return 0.0;
    Rational mass = base.at(x);
    if (mass == 0) return 0.0;
    auto it = t.find(x + 1);
    if (it == t.end()) return 0.0;
    return to_double(Rational(it->second / mass));
}

CouplingTable pinelis_joint(const ExactPmf& mu) {
    require(mu.size() > 0, "coupling needs a nonempty pmf");
    require(mu.lo() >= 0, "coupling needs a pmf on the nonnegative integers");
    for (const auto& w : mu.weights) require(w >= 0, "coupling needs nonnegative weights");
    if (mu.total() != 1) throw ParameterError("coupling needs a normalised pmf, total is " + to_string(mu.total()));

    CouplingTable table;
    table.base = mu;
    Rational q = mu.mass_if([](long k) { return k % 2 == 0; });
    if (q == 0) throw ParameterError("unsupported distribution: even mass Q is zero");
    table.even_marginal = mu.condition([](long k) { return k % 2 == 0; });

    const long top = mu.hi() + 1;
    Rational t_prev = 0;  // t_{2j} at the current j, starting from t_0 = 0
    const Rational shrink = 1 - 1 / q;
    for (long j = 0; 2 * j <= top + 1; ++j) {
        long even = 2 * j;
        if (t_prev < 0 || t_prev > mu.at(even - 1))
            throw InvariantError("coupling invariant 0 <= t_" + std::to_string(even) + " <= mu_" +
                                 std::to_string(even - 1) + " violated (t = " + to_string(t_prev) +
                                 "); input is not log-concave");
        table.t[even] = t_prev;
        t_prev = t_prev + mu.at(even) * shrink + mu.at(even + 1);
    }
    if (t_prev != 0) throw InvariantError("coupling recursion did not return to zero: " + to_string(t_prev));

    for (long x = mu.lo(); x <= mu.hi(); ++x) {
        Rational mass = mu.at(x);
        if (x % 2 == 0) {
            if (mass != 0) table.joint[{x, x}] = mass;
        } else {
            const Rational& up = table.t.at(x + 1);
            Rational down = mass - up;
            if (up != 0) table.joint[{x, x + 1}] = up;
            if (down != 0) table.joint[{x, x - 1}] = down;
        }
    }
    return table;
}

ExactPmf truncated_poisson(const Rational& lambda, double tail_tolerance) {
    require(lambda >= 0, "poisson rate must be nonnegative");
    if (lambda == 0) return ExactPmf::point(0);
    double lam = to_double(lambda);
    // Find the smallest K with P[S > K] < tail_tolerance via suffix sums.
    long limit = poisson_sampling_cap(lam) + 64;
    std::vector<long double> pm(static_cast<size_t>(limit + 1));
    for (long k = 0; k <= limit; ++k)
        pm[static_cast<size_t>(k)] = std::exp(-static_cast<long double>(lam) +
                                              static_cast<long double>(k) * std::log(static_cast<long double>(lam)) -
                                              std::lgamma(static_cast<long double>(k) + 1));
    long cut = limit;
    long double tail = 0;
    for (long k = limit; k >= 0; --k) {
        if (tail >= tail_tolerance) break;
        cut = k;
        tail += pm[static_cast<size_t>(k)];
    }
    // `cut` is the smallest K whose tail P[S > K] is still below tolerance
    ExactPmf out;
    out.offset = 0;
    Rational term = 1;
    for (long k = 0; k <= cut; ++k) {
        if (k > 0) term = term * lambda / k;
        out.weights.push_back(term);
    }
    Rational z = out.total();
    for (auto& w : out.weights) w /= z;
    return out;
}

CouplingTable row_sum_coupling(EnsembleKind kind, long n, const Rational& param) {
    if (kind == EnsembleKind::bernoulli) {
        require(param >= 0 && param <= Rational(1, 2), "bernoulli p must lie in [0, 1/2]");
        return pinelis_joint(lclt::exact_pmf(lclt::Binomial{n, param}));
    }
    CouplingTable table = pinelis_joint(truncated_poisson(param * n));
    table.truncation = table.base.hi();
    return table;
}

IntMatrix couple_even_parity(const IntMatrix& a, EnsembleKind kind, const Rational& param, std::uint64_t seed) {
    return couple_even_parity(a, kind, row_sum_coupling(kind, a.cols(), param), seed);
}

IntMatrix couple_even_parity(const IntMatrix& a, EnsembleKind kind, const CouplingTable& table,
                             std::uint64_t seed) {
    IntMatrix out = a;
    const long n = a.cols();
    for (long i = 0; i < a.rows(); ++i) {
        long x = a.row(i).sum();
        if (x % 2 == 0) continue;
        CounterRng rng(seed, static_cast<std::uint64_t>(i), kCoupleStream);
        bool up = rng.uniform() < table.up_probability(x);
        if (up) {
            if (kind == EnsembleKind::bernoulli) {
                long zeros = n - x;
                if (zeros <= 0) throw InvariantError("increment requested on an all-ones row");
                auto pick = static_cast<long>(rng.below(static_cast<std::uint64_t>(zeros)));
                for (long j = 0; j < n; ++j)
                    if (out(i, j) == 0 && pick-- == 0) {
                        out(i, j) = 1;
                        break;
                    }
            } else {
                out(i, static_cast<long>(rng.below(static_cast<std::uint64_t>(n))))++;
            }
        } else {
            if (x == 0) throw InvariantError("decrement requested on an all-zero row");
            // the pick-th unit of mass; for 0/1 rows this is a uniform one
            auto pick = static_cast<long>(rng.below(static_cast<std::uint64_t>(x)));
            for (long j = 0; j < n; ++j) {
                if (pick < out(i, j)) {
                    out(i, j)--;
                    break;
                }
                pick -= out(i, j);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<int> sample_fixed_weight(FixedWeightKind kind, long n, long w, std::uint64_t seed) {
    require(n >= 0 && w >= 0, "n and w must be nonnegative");
    std::vector<int> row(static_cast<size_t>(n), 0);
    CounterRng rng(seed, 0, 2);
    if (kind == FixedWeightKind::poisson_with_replacement) {
        if (w > 0) require(n > 0, "cannot place weight in a zero-length row");
        for (long k = 0; k < w; ++k) row[rng.below(static_cast<std::uint64_t>(n))]++;
        return row;
    }
    require(w <= n, "weight " + std::to_string(w) + " exceeds row length " + std::to_string(n) +
                        " for sampling without replacement");
    // partial Fisher-Yates over the index set
    std::vector<long> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0L);
    for (long k = 0; k < w; ++k) {
        long j = k + static_cast<long>(rng.below(static_cast<std::uint64_t>(n - k)));
        std::swap(idx[static_cast<size_t>(k)], idx[static_cast<size_t>(j)]);
        row[static_cast<size_t>(idx[static_cast<size_t>(k)])] = 1;
    }
    return row;
}

// ---------------------------------------------------------------------------

void write_matrix(std::ostream& out, const IntMatrix& a) {
    out << a.rows() << ' ' << a.cols() << '\n';
    for (long i = 0; i < a.rows(); ++i) {
        for (long j = 0; j < a.cols(); ++j) {
            if (j) out << ' ';
            out << a(i, j);
        }
        out << '\n';
    }
}

IntMatrix read_matrix(std::istream& in) {
    std::string line;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") != std::string::npos) return true;
        }
        return false;
    };
    if (!next_line()) throw ParameterError("matrix file: missing header line");
    long m = -1, n = -1;
    {
        std::istringstream hs(line);
        std::string extra;
        if (!(hs >> m >> n) || (hs >> extra) || m < 0 || n < 0)
            throw ParameterError("matrix file: header must be 'm n' with nonnegative integers");
    }
    IntMatrix a(m, n);
    for (long i = 0; i < m; ++i) {
        if (!next_line()) throw ParameterError("matrix file: expected " + std::to_string(m) + " rows, got " + std::to_string(i));
        std::istringstream rs(line);
        long j = 0;
        std::string tok;
        while (rs >> tok) {
            if (j >= n) throw ParameterError("matrix file: row " + std::to_string(i + 1) + " has more than " + std::to_string(n) + " entries");
            if (tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 9)
                throw ParameterError("matrix file: bad entry '" + tok + "' in row " + std::to_string(i + 1));
            a(i, j++) = std::stoi(tok);
        }
        if (j != n)
            throw ParameterError("matrix file: row " + std::to_string(i + 1) + " has " + std::to_string(j) +
                                 " entries, expected " + std::to_string(n));
    }
    if (next_line()) throw ParameterError("matrix file: trailing data after " + std::to_string(m) + " rows");
    return a;
}

void save_matrix(const std::string& path, const IntMatrix& a) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("cannot open '" + path + "' for writing");
    write_matrix(out, a);
    if (!out) throw ParameterError("failed writing '" + path + "'");
}

IntMatrix load_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("cannot open matrix file '" + path + "'");
    return read_matrix(in);
}

}  // namespace sparsedisc
