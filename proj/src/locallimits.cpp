#include "sparsedisc/locallimits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <tuple>

#include "sparsedisc/errors.hpp"

namespace sparsedisc::lclt {

namespace {

constexpr double kPi = std::numbers::pi;

void check_probability(const Rational& p, const char* what) {
    if (p < 0 || p > 1) throw ParameterError(std::string(what) + " must lie in [0, 1], got " + to_string(p));
}

// Integer polynomial with an offset; used for the lazy-walk power.
struct IntPoly {
    long offset = 0;
    std::vector<Integer> c;
};

IntPoly multiply(const IntPoly& a, const IntPoly& b) {
    IntPoly out;
    out.offset = a.offset + b.offset;
    out.c.assign(a.c.size() + b.c.size() - 1, Integer(0));
    for (size_t i = 0; i < a.c.size(); ++i) {
        if (a.c[i] == 0) continue;
        for (size_t j = 0; j < b.c.size(); ++j) out.c[i + j] += a.c[i] * b.c[j];
    }
    return out;
}

ExactPmf binomial_exact(const Binomial& b) {
    require(b.n >= 0, "binomial n must be nonnegative");
    check_probability(b.p, "binomial p");
    const Integer& a = b.p.get_num();
    const Integer& d = b.p.get_den();
    Integer rest = d - a;
    std::vector<Integer> apow(static_cast<size_t>(b.n + 1)), rpow(static_cast<size_t>(b.n + 1));
    apow[0] = 1;
    rpow[0] = 1;
    for (long k = 1; k <= b.n; ++k) {
        apow[static_cast<size_t>(k)] = apow[static_cast<size_t>(k - 1)] * a;
        rpow[static_cast<size_t>(k)] = rpow[static_cast<size_t>(k - 1)] * rest;
    }
    Integer den;
    mpz_pow_ui(den.get_mpz_t(), d.get_mpz_t(), static_cast<unsigned long>(b.n));
    ExactPmf out;
    out.offset = 0;
    out.weights.reserve(static_cast<size_t>(b.n + 1));
    for (long k = 0; k <= b.n; ++k) {
        Rational w(binomial(b.n, k) * apow[static_cast<size_t>(k)] * rpow[static_cast<size_t>(b.n - k)], den);
        w.canonicalize();
        out.weights.push_back(std::move(w));
    }
    return out;
}

void check_hypergeometric(const Hypergeometric& h) {
    require(h.population >= 0, "hypergeometric population must be nonnegative");
    require(h.successes >= 0 && h.successes <= h.population,
            "hypergeometric successes must lie in [0, population]");
    require(h.draws >= 0 && h.draws <= h.population, "hypergeometric draws must lie in [0, population]");
}

ExactPmf hypergeometric_exact(const Hypergeometric& h) {
    check_hypergeometric(h);
    long lo = std::max(0L, h.draws - (h.population - h.successes));
    long hi = std::min(h.draws, h.successes);
    Integer total = binomial(h.population, h.draws);
    ExactPmf out;
    out.offset = lo;
    for (long k = lo; k <= hi; ++k) {
        Rational w(binomial(h.successes, k) * binomial(h.population - h.successes, h.draws - k), total);
        w.canonicalize();
        out.weights.push_back(std::move(w));
    }
    return out;
}

// Step polynomial numerators over the common denominator den^2.
void lazy_step(const Rational& p, Integer& side, Integer& centre, Integer& den2) {
    const Integer& a = p.get_num();
    const Integer& d = p.get_den();
    Integer rest = d - a;
    side = a * rest;
    centre = a * a + rest * rest;
    den2 = d * d;
}

ExactPmf lazy_walk_exact(const LazyWalk& lw) {
    require(lw.steps >= 0, "lazy walk steps must be nonnegative");
    check_probability(lw.p, "lazy walk p");
    Integer side, centre, den2;
    lazy_step(lw.p, side, centre, den2);

    IntPoly result{0, {Integer(1)}};
    IntPoly base{-1, {side, centre, side}};
    // doubling schedule: square the base, multiply into the result per bit
    for (unsigned long e = static_cast<unsigned long>(lw.steps); e > 0; e >>= 1) {
        if (e & 1UL) result = multiply(result, base);
        if (e > 1) base = multiply(base, base);
    }
    Integer den;
    mpz_pow_ui(den.get_mpz_t(), den2.get_mpz_t(), static_cast<unsigned long>(lw.steps));
    ExactPmf out;
    out.offset = result.offset;
    out.weights.reserve(result.c.size());
    for (auto& c : result.c) {
        Rational w(c, den);
        w.canonicalize();
        out.weights.push_back(std::move(w));
    }
    return out;
}

long family_size(const Family& f) {
    return std::visit(
        [](const auto& x) -> long {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Binomial>) return x.n;
            else if constexpr (std::is_same_v<T, Hypergeometric>) return x.population;
            else return x.steps;
        },
        f);
}

double log_choose(long n, long k) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
           std::lgamma(static_cast<double>(n - k) + 1);
}

double xlogy(double x, double y) { return x == 0 ? 0.0 : x * std::log(y); }

double log_binomial_pmf(long n, double p, long k) {
    return log_choose(n, k) + xlogy(static_cast<double>(k), p) + xlogy(static_cast<double>(n - k), 1 - p);
}

}  // namespace

ExactPmf exact_pmf(const Family& family) {
    if (family_size(family) > kExactCap)
        throw CapacityError("exact pmf size " + std::to_string(family_size(family)) + " exceeds cap " +
                            std::to_string(kExactCap) + "; use log mode");
    return std::visit(
        [](const auto& x) -> ExactPmf {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Binomial>) return binomial_exact(x);
            else if constexpr (std::is_same_v<T, Hypergeometric>) return hypergeometric_exact(x);
            else return lazy_walk_exact(x);
        },
        family);
}

RealPmf real_pmf(const Family& family) {
    return std::visit(
        [](const auto& x) -> RealPmf {
            using T = std::decay_t<decltype(x)>;
            RealPmf out;
            if constexpr (std::is_same_v<T, Binomial>) {
                require(x.n >= 0, "binomial n must be nonnegative");
                check_probability(x.p, "binomial p");
                double p = to_double(x.p);
                for (long k = 0; k <= x.n; ++k) out.weights.push_back(std::exp(log_binomial_pmf(x.n, p, k)));
            } else if constexpr (std::is_same_v<T, Hypergeometric>) {
                check_hypergeometric(x);
                long lo = std::max(0L, x.draws - (x.population - x.successes));
                long hi = std::min(x.draws, x.successes);
                out.offset = lo;
                double lt = log_choose(x.population, x.draws);
                for (long k = lo; k <= hi; ++k)
                    out.weights.push_back(std::exp(log_choose(x.successes, k) +
                                                   log_choose(x.population - x.successes, x.draws - k) - lt));
            } else {
                require(x.steps >= 0, "lazy walk steps must be nonnegative");
                check_probability(x.p, "lazy walk p");
                double p = to_double(x.p);
                double side = p * (1 - p);
                RealPmf result = RealPmf::point(0);
                RealPmf base(-1, {side, 1 - 2 * side, side});
                for (unsigned long e = static_cast<unsigned long>(x.steps); e > 0; e >>= 1) {
                    if (e & 1UL) result = convolve(result, base);
                    if (e > 1) base = convolve(base, base);
                }
                out = std::move(result);
            }
            return out;
        },
        family);
}

Rational lazy_walk_at(long steps, const Rational& p, long k) {
    require(steps >= 0, "lazy walk steps must be nonnegative");
    check_probability(p, "lazy walk p");
    long a = std::labs(k);
    if (a > steps) return 0;
    Integer side, centre, den2;
    lazy_step(p, side, centre, den2);
    Integer num = 0;
    for (long j = 0; 2 * j + a <= steps; ++j) {
        Integer sp, cp;
        mpz_pow_ui(sp.get_mpz_t(), side.get_mpz_t(), static_cast<unsigned long>(2 * j + a));
        mpz_pow_ui(cp.get_mpz_t(), centre.get_mpz_t(), static_cast<unsigned long>(steps - 2 * j - a));
        num += binomial(steps, j) * binomial(steps - j, j + a) * sp * cp;
    }
    Integer den;
    mpz_pow_ui(den.get_mpz_t(), den2.get_mpz_t(), static_cast<unsigned long>(steps));
    Rational out(num, den);
    out.canonicalize();
    return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::pair<ApproxKind, std::string_view> kKindNames[] = {
    {ApproxKind::demoivre, "demoivre"},         {ApproxKind::stirling_binom, "stirling_binom"},
    {ApproxKind::cramer_tail, "cramer_tail"},   {ApproxKind::hyp_tail, "hyp_tail"},
    {ApproxKind::poisson_tail, "poisson_tail"}, {ApproxKind::edgeworth_lazy, "edgeworth_lazy"},
};

void check_binomial_point(const ApproxQuery& q, const char* kind) {
    if (q.n < 1) throw ParameterError(std::string(kind) + ": requires n >= 1");
    if (q.p <= 0 || q.p >= 1) throw ParameterError(std::string(kind) + ": requires p strictly inside (0, 1)");
    if (q.point < 0 || q.point > q.n) throw ParameterError(std::string(kind) + ": requires 0 <= r <= n");
}

void check_hyp_point(const ApproxQuery& q) {
    if (q.population < 2) throw ParameterError("hyp_tail: requires population >= 2");
    if (q.successes <= 0 || q.successes >= q.population)
        throw ParameterError("hyp_tail: requires 0 < successes < population");
    if (q.n < 1 || q.n >= q.population) throw ParameterError("hyp_tail: requires 1 <= draws < population");
    if (q.point < 0 || q.point > q.n) throw ParameterError("hyp_tail: requires 0 <= x <= draws");
}

void check_poisson_point(const ApproxQuery& q) {
    if (q.lambda <= 0) throw ParameterError("poisson_tail: requires lambda > 0");
    if (q.deviation < 0) throw ParameterError("poisson_tail: requires x >= 0");
}

void check_edgeworth_point(const ApproxQuery& q) {
    if (q.n < 1) throw ParameterError("edgeworth_lazy: requires r >= 1");
    if (q.p <= 0 || q.p >= 1) throw ParameterError("edgeworth_lazy: requires p strictly inside (0, 1)");
    if (std::labs(q.point) > q.n) throw ParameterError("edgeworth_lazy: requires |k| <= r");
}

// log P[|S - lambda| > x] for S ~ Poisson(lambda), summed in long double.
double poisson_two_sided_log_tail(double lambda, double x) {
    auto log_pmf = [lambda](long s) {
        return -static_cast<long double>(lambda) + static_cast<long double>(s) * std::log(static_cast<long double>(lambda)) -
               std::lgamma(static_cast<long double>(s) + 1);
    };
    long double total = 0;
    double lower_cut = lambda - x;  // S < lower_cut
    for (long s = 0; static_cast<double>(s) < lower_cut; ++s) total += std::exp(log_pmf(s));
    long start = static_cast<long>(std::floor(lambda + x)) + 1;
    for (long s = std::max(0L, start);; ++s) {
        long double term = std::exp(log_pmf(s));
        total += term;
        if (static_cast<double>(s) > lambda && term < total * 1e-22L) break;
        if (s > start + 100000) break;
    }
    return static_cast<double>(std::log(total));
}

}  // namespace

ApproxKind parse_kind(std::string_view name) {
    for (auto [k, n] : kKindNames)
        if (n == name) return k;
    throw ParameterError("unknown approximation kind '" + std::string(name) + "'");
}

std::string_view kind_name(ApproxKind kind) {
    for (auto [k, n] : kKindNames)
        if (k == kind) return n;
    return "?";
}

bool is_tail_bound(ApproxKind kind) {
    return kind == ApproxKind::cramer_tail || kind == ApproxKind::hyp_tail || kind == ApproxKind::poisson_tail;
}

double approx_log_eval(const ApproxQuery& q) {
    switch (q.kind) {
        case ApproxKind::demoivre: {
            check_binomial_point(q, "demoivre");
            double p = to_double(q.p), n = static_cast<double>(q.n);
            double v = n * p * (1 - p), k = static_cast<double>(q.point) - n * p;
            return -0.5 * std::log(2 * kPi * v) - k * k / (2 * v);
        }
        case ApproxKind::stirling_binom: {
            if (q.n < 1 || q.point < 0 || q.point > q.n)
                throw ParameterError("stirling_binom: requires n >= 1 and 0 <= r <= n");
            double n = static_cast<double>(q.n), d = static_cast<double>(q.point) - n / 2;
            return 0.5 * std::log(2 / (kPi * n)) + n * std::log(2.0) - 2 * d * d / n;
        }
        case ApproxKind::cramer_tail: {
            check_binomial_point(q, "cramer_tail");
            double p = to_double(q.p), n = static_cast<double>(q.n);
            double v = n * p * (1 - p), k = static_cast<double>(q.point) - n * p;
            return std::log(kCramerConstant) - 0.5 * std::log(v) - k * k / (4 * v);
        }
        case ApproxKind::hyp_tail: {
            check_hyp_point(q);
            double w = static_cast<double>(q.n), big_n = static_cast<double>(q.population);
            double frac = static_cast<double>(q.successes) / big_n;
            double lam = std::fabs(static_cast<double>(q.point) - frac * w) / std::sqrt(w);
            double ratio = w / (big_n - w);
            double quartic = (0.25 + ratio * ratio * ratio / 3.0) * std::pow(lam, 4) / big_n;
            return std::log(kHypergeometricConstant) - 0.5 * std::log(w) - 2 * lam * lam / (1 - w / big_n) - quartic;
        }
        case ApproxKind::poisson_tail: {
            check_poisson_point(q);
            double lam = to_double(q.lambda), x = to_double(q.deviation);
            return std::log(2.0) - x * x / (2 * (lam + x));
        }
        case ApproxKind::edgeworth_lazy: {
            check_edgeworth_point(q);
            double p = to_double(q.p), r = static_cast<double>(q.n), k = static_cast<double>(q.point);
            double s2 = 2 * p * (1 - p);
            double v = r * s2;
            double corr = 1 + (k * k * k * k - 6 * k * k + 3) * (1 / s2 - 3) / (24 * r);
            if (corr <= 0)
                throw ParameterError("edgeworth_lazy: correction factor is non-positive; k too large for r");
            return -k * k / (2 * v) - 0.5 * std::log(2 * kPi * v) + std::log(corr);
        }
    }
    throw ParameterError("unknown approximation kind");
}

double approx_eval(const ApproxQuery& q) { return std::exp(approx_log_eval(q)); }

double exact_log_eval(const ApproxQuery& q) {
    switch (q.kind) {
        case ApproxKind::demoivre:
        case ApproxKind::cramer_tail: {
            check_binomial_point(q, kind_name(q.kind).data());
            const Integer& a = q.p.get_num();
            const Integer& d = q.p.get_den();
            Integer ap, rp, dp;
            mpz_pow_ui(ap.get_mpz_t(), a.get_mpz_t(), static_cast<unsigned long>(q.point));
            Integer rest = d - a;
            mpz_pow_ui(rp.get_mpz_t(), rest.get_mpz_t(), static_cast<unsigned long>(q.n - q.point));
            mpz_pow_ui(dp.get_mpz_t(), d.get_mpz_t(), static_cast<unsigned long>(q.n));
            Rational v(binomial(q.n, q.point) * ap * rp, dp);
            v.canonicalize();
            return log_of(v);
        }
        case ApproxKind::stirling_binom:
            if (q.n < 1 || q.point < 0 || q.point > q.n)
                throw ParameterError("stirling_binom: requires n >= 1 and 0 <= r <= n");
            return log_of(binomial(q.n, q.point));
        case ApproxKind::hyp_tail: {
            check_hyp_point(q);
            Integer num = binomial(q.successes, q.point) * binomial(q.population - q.successes, q.n - q.point);
            if (num == 0) return -std::numeric_limits<double>::infinity();
            return log_of(num) - log_of(binomial(q.population, q.n));
        }
        case ApproxKind::poisson_tail:
            check_poisson_point(q);
            return poisson_two_sided_log_tail(to_double(q.lambda), to_double(q.deviation));
        case ApproxKind::edgeworth_lazy:
            check_edgeworth_point(q);
            return log_of(lazy_walk_at(q.n, q.p, q.point));
    }
    throw ParameterError("unknown approximation kind");
}

ScanTable error_scan(ApproxKind kind, std::vector<ApproxQuery> grid) {
    if (grid.empty()) throw ParameterError("error_scan: empty parameter grid");
    for (auto& q : grid) q.kind = kind;
    std::sort(grid.begin(), grid.end(), [](const ApproxQuery& a, const ApproxQuery& b) {
        return std::tie(a.n, a.p, a.point, a.population, a.successes, a.lambda, a.deviation) <
               std::tie(b.n, b.p, b.point, b.population, b.successes, b.lambda, b.deviation);
    });

    ScanTable table;
    table.kind = kind;
    for (const auto& q : grid) {
        ScanRow row;
        row.query = q;
        double la = approx_log_eval(q), le = exact_log_eval(q);
        row.exact = std::exp(le);
        row.approx = std::exp(la);
        row.rel_error = std::isinf(le) ? std::numeric_limits<double>::infinity() : std::expm1(la - le);
        if (is_tail_bound(kind) && la < le) table.dominates = false;
        table.rows.push_back(row);
    }

    switch (kind) {
        case ApproxKind::demoivre:
        case ApproxKind::stirling_binom: table.predicted_exponent = -1; break;
        case ApproxKind::edgeworth_lazy: table.predicted_exponent = -2; break;
        default: table.predicted_exponent = std::numeric_limits<double>::quiet_NaN();
    }

    table.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
    if (!is_tail_bound(kind)) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        for (const auto& r : table.rows) {
            if (r.rel_error == 0 || !std::isfinite(r.rel_error)) continue;
            double x = std::log(static_cast<double>(r.query.n)), y = std::log(std::fabs(r.rel_error));
            sx += x, sy += y, sxx += x * x, sxy += x * y;
            ++cnt;
        }
        double den = cnt * sxx - sx * sx;
        if (cnt >= 2 && den > 0) table.fitted_exponent = (cnt * sxy - sx * sy) / den;
    }
    return table;
}

std::string to_csv(const ScanTable& table) {
    std::ostringstream out;
    out << "kind,n,p,point,population,successes,lambda,deviation,exact,approx,rel_error\n";
    char buf[64];
    auto g = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : table.rows) {
        const auto& q = r.query;
        out << kind_name(table.kind) << ',' << q.n << ',' << to_string(q.p) << ',' << q.point << ','
            << q.population << ',' << q.successes << ',' << to_string(q.lambda) << ',' << to_string(q.deviation)
            << ',' << g(r.exact) << ',' << g(r.approx) << ',' << g(r.rel_error) << '\n';
    }
    return out.str();
}

}  // namespace sparsedisc::lclt
