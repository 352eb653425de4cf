#include "sparsedisc/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "sparsedisc/errors.hpp"
#include "sparsedisc/locallimits.hpp"

namespace sparsedisc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_even(long k) { return k % 2 == 0; }

double log_or_neg_inf(const Rational& q) { return sgn(q) > 0 ? log_of(q) : kNegInf; }

double log_sum_exp(const std::vector<double>& xs) {
    double top = kNegInf;
    for (double x : xs) top = std::max(top, x);
    if (top == kNegInf) return kNegInf;
    double s = 0;
    for (double x : xs) s += std::exp(x - top);
    return top + std::log(s);
}

}  // namespace

SymmetricBand::SymmetricBand(std::set<long> members) : members_(std::move(members)) {
    require(!members_.empty(), "band K must be nonempty");
    for (long k : members_) require(members_.count(-k) != 0, "band K must be symmetric about 0");
}

SymmetricBand SymmetricBand::radius(long r) {
    require(r >= 0, "band radius must be nonnegative");
    std::set<long> ks;
    for (long k = -r; k <= r; ++k) ks.insert(k);
    return SymmetricBand(std::move(ks));
}

MomentCase parse_moment_case(std::string_view name) {
    if (name == "dense" || name == "bernoulli_parity_dense") return MomentCase::bernoulli_parity_dense;
    if (name == "bernoulli" || name == "bernoulli_fixed_weight") return MomentCase::bernoulli_fixed_weight;
    if (name == "poisson" || name == "poisson_fixed_weight") return MomentCase::poisson_fixed_weight;
    throw ParameterError("unknown moment case '" + std::string(name) + "' (dense, bernoulli, poisson)");
}

std::string_view moment_case_name(MomentCase c) {
    switch (c) {
        case MomentCase::bernoulli_parity_dense: return "bernoulli_parity_dense";
        case MomentCase::bernoulli_fixed_weight: return "bernoulli_fixed_weight";
        case MomentCase::poisson_fixed_weight: return "poisson_fixed_weight";
    }
    return "?";
}

long OverlapScenario::overlap() const {
    Rational r = beta * n / 2;
    if (r.get_den() != 1) throw ParameterError("beta n / 2 must be an integer overlap count");
    return r.get_num().get_si();
}

void OverlapScenario::validate() const {
    require(n >= 0 && is_even(n), "n must be a nonnegative even integer");
    require(w >= 0, "row weight must be nonnegative");
    require(beta >= 0 && beta <= 1, "beta must lie in [0, 1]");
    if (ensemble_case == MomentCase::bernoulli_fixed_weight) {
        require(w <= n, "bernoulli row weight exceeds n");
        overlap();
    }
}

Rational parity_prob(long n, const Rational& p) {
    require(n >= 0, "n must be nonnegative");
    require(p >= 0 && p <= Rational(1, 2), "p must lie in [0, 1/2]");
    return Rational(1, 2) + pow(1 - 2 * p, static_cast<unsigned long>(n)) / 2;
}

PsiPhi psi_phi_dense(long n, const Rational& p, long overlap_r, const SymmetricBand& band) {
    require(n >= 0 && is_even(n), "n must be a nonnegative even integer");
    require(overlap_r >= 0 && overlap_r <= n / 2, "overlap r must lie in [0, n/2]");
    const long half = n / 2;
    const Rational parity = parity_prob(n, p);
    auto in_band = [&](long k) { return is_even(k) && band.contains(k); };

    PsiPhi out;
    for (long k : band.members())
        if (in_band(k)) out.psi += lclt::lazy_walk_at(half, p, k);
    out.psi /= parity;

    const long reach = band.max_abs();
    const long rest = half - overlap_r;
    std::vector<Rational> va, vb;
    for (long a = -reach; a <= reach; ++a) va.push_back(lclt::lazy_walk_at(overlap_r, p, a));
    for (long b = -reach; b <= reach; ++b) vb.push_back(lclt::lazy_walk_at(rest, p, b));
    for (long a = -reach; a <= reach; ++a)
        for (long b = -reach; b <= reach; ++b)
            if (in_band(a + b) && in_band(a - b))
                out.phi += va[static_cast<size_t>(a + reach)] * vb[static_cast<size_t>(b + reach)];
    out.phi /= parity;
    return out;
}

namespace {

PsiPhi bernoulli_fixed(const OverlapScenario& s) {
    const long n = s.n, w = s.w, half = n / 2;
    const long r = s.overlap();
    const long h = half - r;
    BinomialTable binom;
    Rational total(binomial(n, w));

    PsiPhi out;
    for (long k : s.band.members()) {
        if (!is_even(w + k)) continue;
        out.psi += Rational(binom(half, (w + k) / 2) * binom(half, (w - k) / 2));
    }
    out.psi /= total;

    // a1: agree +, a2: agree -, b1: (u+, v-), b2: (u-, v+)
    Integer acc = 0;
    for (long a1 = 0; a1 <= std::min(r, w); ++a1)
        for (long a2 = 0; a2 <= std::min(r, w - a1); ++a2)
            for (long b1 = 0; b1 <= std::min(h, w - a1 - a2); ++b1) {
                long b2 = w - a1 - a2 - b1;
                if (b2 > h) continue;
                long ku = 2 * (a1 + b1) - w;
                long kv = 2 * (a1 + b2) - w;
                if (!s.band.contains(ku) || !s.band.contains(kv)) continue;
                acc += binom(r, a1) * binom(r, a2) * binom(h, b1) * binom(h, b2);
            }
    out.phi = Rational(acc) / total;
    return out;
}

PsiPhi poisson_fixed(const OverlapScenario& s) {
    const long w = s.w;
    const Rational beta = s.beta, gamma = s.gamma();
    const Rational scale(Integer(1), Integer(1) << static_cast<mp_bitcnt_t>(w));
    BinomialTable binom;

    PsiPhi out;
    for (long k : s.band.members())
        if (is_even(w + k) && std::labs(k) <= w) out.psi += Rational(binom(w, (w + k) / 2));
    out.psi *= scale;

    for (long k : s.band.members()) {
        if (!is_even(w + k) || std::labs(k) > w) continue;
        const long up = (w + k) / 2, down = (w - k) / 2;
        Rational inner;
        for (long kp : s.band.members()) {
            if (!is_even(w + kp) || std::labs(kp) > w) continue;
            for (long c = 0; c <= down; ++c) {
                Integer ways = binom(up, (w + kp) / 2 - c) * binom(down, c);
                if (ways == 0) continue;
                long eb = 2 * c + (k - kp) / 2;
                long eg = w + (kp - k) / 2 - 2 * c;
                if (eb < 0 || eg < 0) throw InvariantError("negative exponent in the Poisson pair density");
                inner += Rational(ways) * pow(beta, static_cast<unsigned long>(eb)) *
                         pow(gamma, static_cast<unsigned long>(eg));
            }
        }
        out.phi += Rational(binom(w, up)) * inner;
    }
    out.phi *= scale;
    return out;
}

}  // namespace

PsiPhi psi_phi_fixed_weight(const OverlapScenario& scenario) {
    scenario.validate();
    switch (scenario.ensemble_case) {
        case MomentCase::bernoulli_fixed_weight: return bernoulli_fixed(scenario);
        case MomentCase::poisson_fixed_weight: return poisson_fixed(scenario);
        case MomentCase::bernoulli_parity_dense: break;
    }
    throw ParameterError("psi_phi_fixed_weight needs a fixed-weight case");
}

// ---------------------------------------------------------------------------

void MomentParams::validate() const {
    require(m >= 1, "m must be at least 1");
    require(n >= 0 && is_even(n), "n must be a nonnegative even integer");
    if (ensemble_case == MomentCase::bernoulli_parity_dense) {
        require(p >= 0 && p <= Rational(1, 2), "p must lie in [0, 1/2]");
    } else {
        require(static_cast<long>(weights.size()) == m, "need exactly one row weight per row");
        for (long w : weights) {
            require(w >= 0, "row weights must be nonnegative");
            if (ensemble_case == MomentCase::bernoulli_fixed_weight) require(w <= n, "bernoulli row weight exceeds n");
        }
    }
}

PsiPhi MomentParams::row(long i, long overlap_r) const {
    if (ensemble_case == MomentCase::bernoulli_parity_dense) return psi_phi_dense(n, p, overlap_r, band);
    OverlapScenario s;
    s.ensemble_case = ensemble_case;
    s.n = n;
    s.w = weights[static_cast<size_t>(i)];
    s.band = band;
    s.beta = n == 0 ? Rational(1) : ratio(2 * overlap_r, n);
    s.beta.canonicalize();
    return psi_phi_fixed_weight(s);
}

namespace {

/// Row classes sharing the same psi/phi: dense rows are all alike;
/// fixed-weight rows group by weight. Returns (representative row, count).
std::vector<std::pair<long, long>> row_classes(const MomentParams& params) {
    if (params.ensemble_case == MomentCase::bernoulli_parity_dense) return {{0, params.m}};
    std::map<long, std::pair<long, long>> by_w;
    for (long i = 0; i < params.m; ++i) {
        auto [it, fresh] = by_w.try_emplace(params.weights[static_cast<size_t>(i)], i, 0);
        ++it->second.second;
    }
    std::vector<std::pair<long, long>> out;
    for (const auto& [w, rc] : by_w) out.push_back(rc);
    return out;
}

}  // namespace

MomentValue expected_solution_count(const MomentParams& params, const MomentLimits& limits) {
    params.validate();
    const Integer central = binomial(params.n, params.n / 2);
    MomentValue out;
    out.log_value = log_of(central);
    bool exact = params.n <= limits.exact_max_n;
    Rational prod(1);
    for (auto [rep, count] : row_classes(params)) {
        Rational psi = params.row(rep, params.n / 2).psi;
        out.log_value += static_cast<double>(count) * log_or_neg_inf(psi);
        if (exact) prod *= pow(psi, static_cast<unsigned long>(count));
    }
    if (exact) out.exact = Rational(central) * prod;
    return out;
}

RatioResult second_moment_ratio(const MomentParams& params, MomentMode mode, const MomentLimits& limits) {
    params.validate();
    const bool exact = mode == MomentMode::exact;
    if (exact && (params.n > limits.exact_max_n || params.m > limits.exact_max_m))
        throw CapacityError("exact second-moment ratio needs n <= " + std::to_string(limits.exact_max_n) +
                            " and m <= " + std::to_string(limits.exact_max_m) + "; use log mode");
    const long half = params.n / 2;
    const auto classes = row_classes(params);

    std::vector<Rational> psi2;
    for (auto [rep, count] : classes) {
        Rational psi = params.row(rep, half).psi;
        if (sgn(psi) == 0) throw ParameterError("psi is zero, so E[Z] = 0 and the ratio is undefined");
        psi2.push_back(psi * psi);
    }

    RatioResult out;
    Rational sum;
    std::vector<double> logs;
    for (long r = 0; r <= half; ++r) {
        OverlapTerm term;
        term.r = r;
        term.beta = params.n == 0 ? Rational(1) : ratio(2 * r, params.n);
        term.beta.canonicalize();
        Integer c = binomial(half, r);
        term.multiplicity = c * c;
        Rational factor(1);
        double log_factor = 0;
        for (size_t j = 0; j < classes.size(); ++j) {
            auto [rep, count] = classes[j];
            Rational q = params.row(rep, r).phi / psi2[j];
            log_factor += static_cast<double>(count) * log_or_neg_inf(q);
            if (exact) factor *= pow(q, static_cast<unsigned long>(count));
        }
        term.log_factor = log_factor;
        if (exact) {
            term.factor = factor;
            sum += Rational(term.multiplicity) * factor;
        }
        logs.push_back(log_of(term.multiplicity) + log_factor);
        out.profile.push_back(std::move(term));
    }
    const Integer central = binomial(params.n, half);
    out.ratio.log_value = log_sum_exp(logs) - log_of(central);
    if (exact) out.ratio.exact = sum / Rational(central);
    return out;
}

MomentReport moment_report(const MomentParams& params, MomentMode mode, bool with_ratio,
                           const MomentLimits& limits) {
    params.validate();
    if (params.ensemble_case != MomentCase::bernoulli_parity_dense)
        for (long w : params.weights)
            require(w == params.weights.front(), "a moment report needs equal row weights");
    MomentReport rep;
    rep.n = params.n;
    rep.m = params.m;
    for (long r = 0; r <= params.n / 2; ++r) {
        PsiPhi pp = params.row(0, r);
        if (r == 0) rep.psi = pp.psi;
        Rational beta = params.n == 0 ? Rational(1) : ratio(2 * r, params.n);
        beta.canonicalize();
        rep.phi_at[beta] = pp.phi;
    }
    rep.first_moment = expected_solution_count(params, limits);
    if (with_ratio) rep.ratio = second_moment_ratio(params, mode, limits);
    return rep;
}

SmmFlags check_smm_conditions(const MomentReport& report, long m, const Rational& delta, const Rational& eps,
                              double c) {
    require(m >= 1, "m must be at least 1");
    require(delta > 0 && delta < Rational(1, 2), "delta must lie in (0, 1/2)");
    require(eps > 0, "eps must be positive");
    SmmFlags flags;
    flags.first_moment_margin = report.n > 0 ? report.first_moment.log_value / static_cast<double>(report.n) : 0;
    flags.first_moment_holds = report.first_moment.log_value > c * static_cast<double>(report.n);

    const Rational psi2 = report.psi * report.psi;
    const Rational half(1, 2);
    std::vector<std::pair<double, double>> window;  // (x, phi/psi^2)
    bool weak_seen = false;
    for (const auto& [beta, phi] : report.phi_at) {
        if (sgn(psi2) == 0) break;
        Rational q = phi / psi2;
        if (beta >= delta && beta <= 1 - delta) {
            flags.c_delta = weak_seen ? std::max(flags.c_delta, to_double(q)) : to_double(q);
            weak_seen = true;
        }
        Rational x = beta - half;
        if (abs(x) < eps) {
            window.emplace_back(to_double(x), to_double(q));
            if (sgn(x) == 0) flags.central_deviation = to_double(abs(q - 1));
        }
    }
    flags.central_points = static_cast<long>(window.size());
    if (window.size() < 5)
        throw ParameterError("beta grid too coarse: " + std::to_string(window.size()) +
                             " points in the central window, need at least 5");
    flags.weak_bound_holds = weak_seen && sgn(psi2) > 0;

    double sxy = 0, sxx = 0;
    const double slack = 1.0 + 1.0 / (10.0 * static_cast<double>(m));
    for (auto [x, q] : window) {
        if (x == 0) continue;
        sxy += (q - 1) * x * x;
        sxx += x * x * x * x;
        flags.c_envelope = std::max(flags.c_envelope, (q / slack - 1) / (x * x));
    }
    flags.c_fit = sxx > 0 ? sxy / sxx : 0;
    flags.strong_bound_holds = flags.central_deviation && *flags.central_deviation < 1.0 / (10.0 * static_cast<double>(m));
    return flags;
}

std::string to_json(const MomentReport& report, const std::optional<SmmFlags>& flags) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["n"] = report.n;
    j["m"] = report.m;
    j["psi"] = to_string(report.psi);
    ordered_json phi = ordered_json::array();
    for (const auto& [beta, value] : report.phi_at)
        phi.push_back({beta.get_num().get_si(), beta.get_den().get_si(), to_string(value)});
    j["phi"] = phi;
    auto put = [&](const char* key, const char* log_key, const MomentValue& v) {
        j[key] = v.exact ? ordered_json(to_string(*v.exact)) : ordered_json(nullptr);
        j[log_key] = std::isfinite(v.log_value) ? ordered_json(v.log_value) : ordered_json(nullptr);
    };
    put("first_moment", "log_first_moment", report.first_moment);
    if (report.ratio) {
        put("ratio", "log_ratio", report.ratio->ratio);
    } else {
        j["ratio"] = nullptr;
        j["log_ratio"] = nullptr;
    }
    if (flags) {
        ordered_json f;
        f["first_moment_holds"] = flags->first_moment_holds;
        f["first_moment_margin"] = flags->first_moment_margin;
        f["weak_bound_holds"] = flags->weak_bound_holds;
        f["c_delta"] = flags->c_delta;
        f["strong_bound_holds"] = flags->strong_bound_holds;
        f["c_fit"] = flags->c_fit;
        f["c_envelope"] = flags->c_envelope;
        f["central_deviation"] =
            flags->central_deviation ? ordered_json(*flags->central_deviation) : ordered_json(nullptr);
        f["central_points"] = flags->central_points;
        j["flags"] = f;
    } else {
        j["flags"] = nullptr;
    }
    return j.dump();
}

}  // namespace sparsedisc
