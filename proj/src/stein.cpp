#include "sparsedisc/stein.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "sparsedisc/errors.hpp"
#include "sparsedisc/rng.hpp"

namespace sparsedisc::stein {

void BirthDeathSpec::validate() const {
    require(w >= 0, "birth-death size w must be nonnegative");
    const auto len = static_cast<size_t>(w + 1);
    require(a.size() == len && b.size() == len, "a and b need w + 1 entries");
    require(a[len - 1] == 0, "a_w must be 0");
    require(b[0] == 0, "b_0 must be 0");
    for (size_t s = 0; s + 1 < len; ++s) {
        require(a[s] > a[s + 1], "a must be strictly decreasing");
        require(b[s] < b[s + 1], "b must be strictly increasing");
        require(sgn(a[s]) > 0, "a_s must be positive for s < w");
        require(sgn(b[s + 1]) > 0, "b_s must be positive for s > 0");
    }
}

BirthDeathSpec BirthDeathSpec::binomial(long w) {
    require(w >= 0, "w must be nonnegative");
    BirthDeathSpec bd;
    bd.w = w;
    for (long s = 0; s <= w; ++s) {
        bd.a.emplace_back(w - s, 2);
        bd.b.emplace_back(s, 2);
    }
    for (auto& q : bd.a) q.canonicalize();
    for (auto& q : bd.b) q.canonicalize();
    return bd;
}

BirthDeathSpec BirthDeathSpec::hypergeometric(long n, long w) {
    require(n >= 0 && n % 2 == 0, "n must be even");
    require(w >= 0 && 2 * w <= n, "hypergeometric spec needs w <= n/2");
    BirthDeathSpec bd;
    bd.w = w;
    const Rational half = ratio(n, 2);
    for (long s = 0; s <= w; ++s) {
        Rational S(s);
        bd.a.push_back(Rational(w) * half - S * (w + half) + S * S);
        bd.b.push_back(S * (half - w) + S * S);
    }
    return bd;
}

ExactPmf stationary_pmf(const BirthDeathSpec& bd) {
    bd.validate();
    ExactPmf mu;
    mu.offset = 0;
    mu.weights.push_back(Rational(1));
    for (long s = 1; s <= bd.w; ++s) {
        auto i = static_cast<size_t>(s);
        mu.weights.push_back(mu.weights.back() * bd.a[i - 1] / bd.b[i]);
    }
    Rational z = mu.total();
    for (auto& q : mu.weights) q /= z;
    return mu;
}

std::vector<Rational> stein_apply(const BirthDeathSpec& bd, const std::vector<Rational>& f) {
    require(static_cast<long>(f.size()) >= bd.w + 1, "f needs w + 1 entries");
    std::vector<Rational> out(static_cast<size_t>(bd.w + 1));
    for (long s = 0; s <= bd.w; ++s) {
        auto i = static_cast<size_t>(s);
        out[i] = -bd.b[i] * f[i];
        if (s < bd.w) out[i] += bd.a[i] * f[i + 1];
    }
    return out;
}

SteinSolution stein_invert(const BirthDeathSpec& bd, long t, bool allow_boundary) {
    if (allow_boundary)
        require(t >= 0 && t <= bd.w, "target t must lie in [0, w]");
    else
        require(t >= 1 && t <= bd.w - 1, "target t must lie in [1, w-1]");
    ExactPmf mu = stationary_pmf(bd);
    const Rational& mu_t = mu.weights[static_cast<size_t>(t)];
    SteinSolution sol;
    sol.t = t;
    sol.f.assign(static_cast<size_t>(bd.w + 1), Rational(0));
    Rational below;  // mu({0..s-1})
    for (long s = 1; s <= bd.w; ++s) {
        auto i = static_cast<size_t>(s);
        below += mu.weights[i - 1];
        Rational ind = t < s ? 1 : 0;
        sol.f[i] = mu_t / (bd.b[i] * mu.weights[i]) * (ind - below);
    }
    sol.delta_f.assign(static_cast<size_t>(bd.w + 1), Rational(0));
    for (long s = 0; s < bd.w; ++s) {
        auto i = static_cast<size_t>(s);
        sol.delta_f[i] = sol.f[i + 1] - sol.f[i];
    }
    return sol;
}

InversionCheck check_inversion(const BirthDeathSpec& bd, const SteinSolution& sol) {
    InversionCheck out;
    const long w = bd.w, t = sol.t;
    ExactPmf mu = stationary_pmf(bd);
    auto tf = stein_apply(bd, sol.f);
    out.inverse = true;
    for (long s = 0; s <= w; ++s) {
        Rational expect = (s == t ? Rational(1) : Rational(0)) - mu.at(t);
        if (tf[static_cast<size_t>(s)] != expect) out.inverse = false;
    }
    const auto& df = sol.delta_f;
    out.delta_f_t = df[static_cast<size_t>(t)];
    out.monotone = sgn(out.delta_f_t) > 0;
    for (long s = 0; s < w; ++s)
        if (s != t && sgn(df[static_cast<size_t>(s)]) > 0) out.monotone = false;
    out.signs = true;
    for (long s = 0; s <= w; ++s) {
        int sg = sgn(sol.f[static_cast<size_t>(s)]);
        if ((s <= t && sg > 0) || (s > t && sg < 0)) out.signs = false;
    }
    Rational sup;
    for (long s = 0; s < w; ++s) sup = std::max(sup, Rational(abs(df[static_cast<size_t>(s)])));
    Rational cap = std::min(Rational(1 / bd.a[static_cast<size_t>(t)]), Rational(1 / bd.b[static_cast<size_t>(t)]));
    out.uniform = sup == out.delta_f_t && out.delta_f_t <= cap;
    for (const auto& d : df) out.l1_norm += abs(d);
    out.l1 = out.l1_norm <= 2 * out.delta_f_t;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

bool is_poisson(const OverlapScenario& sc) { return sc.ensemble_case == MomentCase::poisson_fixed_weight; }

void validate_pair(const OverlapScenario& sc) {
    require(sc.ensemble_case != MomentCase::bernoulli_parity_dense, "pair constructions need a fixed-weight case");
    sc.validate();
    if (!is_poisson(sc)) {
        require(sc.w % 2 == 0, "the urn construction needs an even row weight");
        require(sc.band.members() == std::set<long>{0}, "the urn construction uses K = {0}");
    }
}

Rational binom_pmf(long trials, const Rational& p, long x) {
    if (x < 0 || x > trials) return 0;
    return Rational(binomial(trials, x)) * pow(p, static_cast<unsigned long>(x)) *
           pow(1 - p, static_cast<unsigned long>(trials - x));
}

Rational hyper_pmf(long draws, long successes, long population, long x) {
    if (x < 0 || x > draws) return 0;
    Integer num = binomial(successes, x) * binomial(population - successes, draws - x);
    if (num == 0) return 0;
    Rational out(num, binomial(population, draws));
    out.canonicalize();
    return out;
}

/// beta n / 2 and gamma n / 2 for the urn
std::pair<long, long> urn_label_sizes(const OverlapScenario& sc) {
    long agree = sc.overlap();
    return {agree, sc.n / 2 - agree};
}

/// Support [lo, hi] of S under P_0 and the birth-death spec shifted onto it.
struct ShiftedSpec {
    BirthDeathSpec bd;
    long lo = 0;
};

ShiftedSpec law_spec(const OverlapScenario& sc) {
    ShiftedSpec out;
    if (is_poisson(sc)) {
        out.bd = BirthDeathSpec::binomial(sc.w);
        return out;
    }
    const long n = sc.n, w = sc.w;
    const long lo = std::max(0L, w - n / 2), hi = std::min(w, n / 2);
    const Rational half = ratio(n, 2);
    out.lo = lo;
    out.bd.w = hi - lo;
    for (long s = lo; s <= hi; ++s) {
        Rational S(s);
        out.bd.a.push_back(Rational(w) * half - S * (w + half) + S * S);
        out.bd.b.push_back(S * (half - w) + S * S);
    }
    return out;
}

}  // namespace

std::vector<long> valid_band(const OverlapScenario& sc) {
    std::vector<long> out;
    for (long k : sc.band.members())
        if ((sc.w + k) % 2 == 0 && std::labs(k) <= sc.w) out.push_back(k);
    return out;
}

Rational pair_density(const OverlapScenario& sc, long k, long s, long c) {
    validate_pair(sc);
    require(s >= 0 && s <= sc.w, "lattice point needs 0 <= s <= w");
    require((sc.w + k) % 2 == 0 && std::labs(k) <= sc.w, "k must satisfy |k| <= w and k = w (mod 2)");
    if (c < 0 || c > s) return 0;
    if (is_poisson(sc))
        return binom_pmf((sc.w + k) / 2, sc.gamma(), s - c) * binom_pmf((sc.w - k) / 2, sc.beta, c);
    require(k == 0, "the urn construction only has the slice k = 0");
    auto [agree, disagree] = urn_label_sizes(sc);
    const long half = sc.n / 2, draws = sc.w / 2;
    return hyper_pmf(draws, disagree, half, s - c) * hyper_pmf(draws, agree, half, c);
}

Rational hypergeometric_correction(const OverlapScenario& sc, long c, bool flip) {
    validate_pair(sc);
    require(sgn(sc.beta) > 0 && sc.beta < 1, "the factorization needs 0 < beta < 1");
    const long draws = sc.w / 2;
    if (c < 0 || c > draws) return 0;
    Rational own = (flip ? sc.gamma() : sc.beta) * sc.n / 2;
    Rational other = (flip ? sc.beta : sc.gamma()) * sc.n / 2;
    Rational half = ratio(sc.n, 2);
    Rational out(1);
    for (long t = 1; t <= c - 1; ++t) out *= 1 - Rational(t) / own;
    for (long t = 1; t <= draws - c - 1; ++t) out *= 1 - Rational(t) / other;
    for (long t = 1; t <= draws - 1; ++t) out /= 1 - Rational(t) / half;
    return out;
}

std::vector<Rational> slice_weights(const OverlapScenario& sc) {
    auto ks = valid_band(sc);
    require(!ks.empty(), "no k in K matches the parity of w");
    std::vector<Rational> out;
    Rational z;
    for (long k : ks) {
        out.emplace_back(binomial(sc.w, (sc.w + k) / 2));
        z += out.back();
    }
    for (auto& q : out) q /= z;
    return out;
}

PairStats conditioned_pair_stats(const OverlapScenario& sc) {
    validate_pair(sc);
    const long w = sc.w;
    PairStats st;
    st.mu0.offset = 0;
    st.muc.offset = 0;
    st.muc.weights.assign(static_cast<size_t>(w + 1), Rational(0));
    st.g1.assign(static_cast<size_t>(w + 1), Rational(0));
    st.g2.assign(static_cast<size_t>(w + 1), Rational(0));

    if (is_poisson(sc)) {
        for (long s = 0; s <= w; ++s) st.mu0.weights.push_back(binom_pmf(w, Rational(1, 2), s));
    } else {
        for (long s = 0; s <= w; ++s) st.mu0.weights.push_back(hyper_pmf(w, sc.n / 2, sc.n, s));
    }

    auto ks = valid_band(sc);
    auto weights = slice_weights(sc);
    for (size_t i = 0; i < ks.size(); ++i) {
        for (long s = 0; s <= w; ++s) {
            auto si = static_cast<size_t>(s);
            for (long c = 0; c <= s; ++c) {
                Rational g = pair_density(sc, ks[i], s, c);
                if (sgn(g) == 0) continue;
                Rational m = weights[i] * g;
                st.muc.weights[si] += m;
                st.g1[si] += (2 * c - s) * m;
                st.g2[si] += (2 * c - s) * (2 * c - s) * m;
            }
        }
    }
    for (long k : ks) {
        long s = (w - k) / 2;  // u in G  <=>  w - 2S in K  <=>  S in K_w (K symmetric)
        st.psi += st.mu0.at(s);
        st.muc_band += st.muc.at(s);
    }
    return st;
}

IdentityReport verify_identity(const OverlapScenario& sc) {
    validate_pair(sc);
    const long w = sc.w;
    PairStats st = conditioned_pair_stats(sc);
    ShiftedSpec spec = law_spec(sc);
    const long lo = spec.lo, hi = spec.lo + spec.bd.w;

    // f on [lo, hi], stored by absolute S index, with f(hi + 1) := f(hi)
    std::vector<Rational> f(static_cast<size_t>(w + 2), Rational(0));
    auto ks = valid_band(sc);
    for (long k : ks) {
        long t = (w + k) / 2 - lo;
        if (t < 0 || t > spec.bd.w) continue;  // outside the support: indicator and mass both vanish
        auto sol = stein_invert(spec.bd, t, true);
        for (long s = lo; s <= hi; ++s) f[static_cast<size_t>(s)] += sol.f[static_cast<size_t>(s - lo)];
    }
    for (long s = hi + 1; s <= w + 1; ++s) f[static_cast<size_t>(s)] = f[static_cast<size_t>(hi)];
    auto delta = [&](long s) -> Rational { return f[static_cast<size_t>(s + 1)] - f[static_cast<size_t>(s)]; };

    IdentityReport rep;
    rep.lhs = st.psi - st.muc_band;
    if (is_poisson(sc)) {
        const Rational half_gap = (sc.gamma() - sc.beta) / 2;
        for (long s = 0; s <= w; ++s) rep.rhs += half_gap * st.g1[static_cast<size_t>(s)] * delta(s);
        auto weights = slice_weights(sc);
        Rational ek;  // E_c[k f(S + 1)]
        for (size_t i = 0; i < ks.size(); ++i)
            for (long s = 0; s <= w; ++s) {
                Rational mass;
                for (long c = 0; c <= s; ++c) mass += pair_density(sc, ks[i], s, c);
                ek += weights[i] * ks[i] * mass * f[static_cast<size_t>(s + 1)];
            }
        rep.correction = half_gap * ek;
    } else {
        const Rational drift = sc.n * sc.x();
        for (long s = 0; s <= w; ++s) {
            auto si = static_cast<size_t>(s);
            rep.rhs += (st.g2[si] - drift * st.g1[si]) * delta(s);
        }
    }
    rep.residual = rep.lhs - rep.rhs;
    rep.closure = rep.residual - rep.correction;
    return rep;
}

// ---------------------------------------------------------------------------
// Chains
// ---------------------------------------------------------------------------

namespace {

/// Label sizes of the urn: a and c get beta n / 2, b and d get gamma n / 2.
std::array<long, 4> urn_sizes(const OverlapScenario& sc) {
    auto [agree, disagree] = urn_label_sizes(sc);
    return {agree, disagree, agree, disagree};
}

bool same_type(int j, int l) { return (j < 2) == (l < 2); }

void validate_sigma(const OverlapScenario& sc, const PairCounts& sigma, bool conditioned) {
    for (long v : sigma.s) require(v >= 0, "pair counts must be nonnegative");
    require(sigma.total() == sc.w, "pair counts must sum to w");
    if (!is_poisson(sc)) {
        auto sizes = urn_sizes(sc);
        for (int l = 0; l < 4; ++l) require(sigma.s[static_cast<size_t>(l)] <= sizes[static_cast<size_t>(l)], "pair counts exceed the urn");
    }
    if (conditioned) {
        auto ks = valid_band(sc);
        require(std::find(ks.begin(), ks.end(), sigma.k()) != ks.end(), "sigma is outside the conditioning event");
    }
}

/// Probability of moving one outcome from label j to label l.
std::array<std::array<Rational, 4>, 4> move_probabilities(const OverlapScenario& sc, const PairCounts& sigma,
                                                          bool conditioned) {
    std::array<std::array<Rational, 4>, 4> p{};
    const Rational w(sc.w);
    const Rational beta = sc.beta, gamma = sc.gamma();
    const std::array<Rational, 4> label_p = {beta / 2, gamma / 2, beta / 2, gamma / 2};
    const std::array<Rational, 4> within = {beta, gamma, beta, gamma};
    std::array<long, 4> unselected{};
    if (!is_poisson(sc)) {
        auto sizes = urn_sizes(sc);
        for (size_t l = 0; l < 4; ++l) unselected[l] = sizes[l] - sigma.s[l];
    }
    for (int j = 0; j < 4; ++j) {
        auto ju = static_cast<size_t>(j);
        if (sigma.s[ju] == 0) continue;
        Rational pick = Rational(sigma.s[ju]) / w;
        for (int l = 0; l < 4; ++l) {
            auto lu = static_cast<size_t>(l);
            if (conditioned && !same_type(j, l)) continue;
            Rational q;
            if (is_poisson(sc)) {
                q = conditioned ? within[lu] : label_p[lu];
            } else {
                long pool = conditioned ? sc.n / 2 - sc.w / 2 : sc.n - sc.w;
                if (pool == 0) {
                    q = j == l ? 1 : 0;
                } else {
                    q = ratio(unselected[lu], pool);
                }
            }
            p[ju][lu] = pick * q;
        }
    }
    return p;
}

}  // namespace

PairCounts pair_chain_step(const OverlapScenario& sc, const PairCounts& sigma, bool conditioned, std::uint64_t seed) {
    validate_pair(sc);
    validate_sigma(sc, sigma, conditioned);
    if (sc.w == 0) return sigma;
    CounterRng rng(seed, 0, 3);

    auto j = static_cast<long>(rng.below(static_cast<std::uint64_t>(sc.w)));
    int from = 0;
    while (j >= sigma.s[static_cast<size_t>(from)]) j -= sigma.s[static_cast<size_t>(from)], ++from;

    int to = from;
    if (is_poisson(sc)) {
        const Integer& num = sc.beta.get_num();
        const Integer& den = sc.beta.get_den();
        std::uint64_t nu = num.get_ui(), de = den.get_ui();
        if (conditioned) {
            bool agree = rng.below(de) < nu;
            int base = from < 2 ? 0 : 2;
            to = base + (agree ? 0 : 1);
        } else {
            std::uint64_t x = rng.below(2 * de);
            // a: [0, nu), b: [nu, de), c: [de, de + nu), d: rest
            to = x < nu ? 0 : x < de ? 1 : x < de + nu ? 2 : 3;
        }
    } else {
        auto sizes = urn_sizes(sc);
        std::array<long, 4> unselected{};
        for (size_t l = 0; l < 4; ++l) unselected[l] = sizes[l] - sigma.s[l];
        int first = 0, last = 4;
        if (conditioned) {
            first = from < 2 ? 0 : 2;
            last = first + 2;
        }
        long pool = 0;
        for (int l = first; l < last; ++l) pool += unselected[static_cast<size_t>(l)];
        if (pool > 0) {
            auto x = static_cast<long>(rng.below(static_cast<std::uint64_t>(pool)));
            to = first;
            while (x >= unselected[static_cast<size_t>(to)]) x -= unselected[static_cast<size_t>(to)], ++to;
        }
    }
    PairCounts out = sigma;
    --out.s[static_cast<size_t>(from)];
    ++out.s[static_cast<size_t>(to)];
    return out;
}

ChainMatrix chain_matrix(const OverlapScenario& sc, bool conditioned) {
    validate_pair(sc);
    const long w = sc.w;
    ChainMatrix cm;
    std::map<PairCounts, size_t> index;
    const auto ks = valid_band(sc);
    const std::array<Rational, 4> label_p = {sc.beta / 2, sc.gamma() / 2, sc.beta / 2, sc.gamma() / 2};

    for (long a = 0; a <= w; ++a)
        for (long b = 0; a + b <= w; ++b)
            for (long c = 0; a + b + c <= w; ++c) {
                PairCounts sigma;
                sigma.s = {a, b, c, w - a - b - c};
                bool ok = true;
                if (!is_poisson(sc)) {
                    auto sizes = urn_sizes(sc);
                    for (size_t l = 0; l < 4; ++l) ok = ok && sigma.s[l] <= sizes[l];
                }
                if (ok && conditioned) ok = std::find(ks.begin(), ks.end(), sigma.k()) != ks.end();
                if (!ok) continue;

                Rational mass;
                if (is_poisson(sc)) {
                    Integer ways = binomial(w, a) * binomial(w - a, b) * binomial(w - a - b, c);
                    mass = Rational(ways);
                    for (size_t l = 0; l < 4; ++l) mass *= pow(label_p[l], static_cast<unsigned long>(sigma.s[l]));
                } else {
                    auto sizes = urn_sizes(sc);
                    Integer ways = 1;
                    for (size_t l = 0; l < 4; ++l) ways *= binomial(sizes[l], sigma.s[l]);
                    mass = Rational(ways);
                }
                if (sgn(mass) == 0) continue;
                index[sigma] = cm.states.size();
                cm.states.push_back(sigma);
                cm.law.push_back(mass);
            }
    Rational z;
    for (const auto& q : cm.law) z += q;
    for (auto& q : cm.law) q /= z;

    const size_t count = cm.states.size();
    cm.kernel.assign(count, std::vector<Rational>(count, Rational(0)));
    for (size_t i = 0; i < count; ++i) {
        const auto& sigma = cm.states[i];
        auto p = move_probabilities(sc, sigma, conditioned);
        for (size_t j = 0; j < 4; ++j)
            for (size_t l = 0; l < 4; ++l) {
                if (sgn(p[j][l]) == 0) continue;
                PairCounts next = sigma;
                --next.s[j];
                ++next.s[l];
                auto it = index.find(next);
                if (it == index.end()) throw InvariantError("pair chain left its state space");
                cm.kernel[i][it->second] += p[j][l];
            }
    }
    return cm;
}

ChainCheck check_chain(const ChainMatrix& cm) {
    ChainCheck out;
    const size_t count = cm.states.size();
    out.rows_stochastic = true;
    for (const auto& row : cm.kernel) {
        Rational s;
        for (const auto& q : row) s += q;
        if (s != 1) out.rows_stochastic = false;
    }
    out.stationary = true;
    for (size_t j = 0; j < count; ++j) {
        Rational s;
        for (size_t i = 0; i < count; ++i) s += cm.law[i] * cm.kernel[i][j];
        if (s != cm.law[j]) out.stationary = false;
    }
    out.exchangeable = true;
    std::map<std::pair<long, long>, Rational> joint;
    for (size_t i = 0; i < count; ++i)
        for (size_t j = 0; j < count; ++j) {
            Rational m = cm.law[i] * cm.kernel[i][j];
            if (m != cm.law[j] * cm.kernel[j][i]) out.exchangeable = false;
            if (sgn(m) != 0) joint[{cm.states[i].S(), cm.states[j].S()}] += m;
        }
    out.s_exchangeable = true;
    for (const auto& [key, m] : joint) {
        auto it = joint.find({key.second, key.first});
        if (it == joint.end() || it->second != m) out.s_exchangeable = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bound scans
// ---------------------------------------------------------------------------

namespace {

EnvelopeFit fit_envelope(const std::vector<double>& values, double scale, long w, std::optional<double> fixed_c) {
    EnvelopeFit fit;
    fit.w = w;
    const double wd = static_cast<double>(w);
    auto z_of = [&](size_t s) {
        double l = static_cast<double>(s) - wd / 2;
        return l * l / wd;
    };
    if (fixed_c) {
        fit.c = *fixed_c;
    } else {
        double sz = 0, sy = 0, szz = 0, szy = 0, k = 0;
        for (size_t s = 0; s < values.size(); ++s) {
            if (!(values[s] > 0)) continue;
            double z = z_of(s), y = std::log(values[s] / scale);
            sz += z, sy += y, szz += z * z, szy += z * y, k += 1;
        }
        double den = k * szz - sz * sz;
        fit.c = den > 0 ? -(k * szy - sz * sy) / den : 0;
    }
    for (size_t s = 0; s < values.size(); ++s) {
        if (!(values[s] > 0)) continue;
        fit.C = std::max(fit.C, values[s] / (scale * std::exp(-fit.c * z_of(s))));
    }
    return fit;
}

std::vector<double> abs_values(const std::vector<Rational>& xs) {
    std::vector<double> out;
    for (const auto& q : xs) out.push_back(std::fabs(to_double(q)));
    return out;
}

double spread(const std::vector<EnvelopeFit>& fits, bool use_C) {
    double lo = INFINITY, hi = 0;
    for (const auto& f : fits) {
        double v = use_C ? f.C : f.c;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return lo > 0 ? hi / lo : INFINITY;
}

}  // namespace

BoundScan scan_bounds(MomentCase ensemble_case, const std::vector<long>& w_list, const Rational& beta, long n_per_w,
                      double reference_c) {
    require(!w_list.empty(), "scan needs at least one w");
    require(reference_c > 0, "reference c must be positive");
    require(beta != Rational(1, 2), "the g1 scan needs beta != 1/2");
    BoundScan scan;
    scan.reference_c = reference_c;
    for (long w : w_list) {
        OverlapScenario sc;
        sc.ensemble_case = ensemble_case;
        sc.w = w;
        sc.n = ensemble_case == MomentCase::bernoulli_fixed_weight ? n_per_w * w : 2 * w;
        sc.beta = beta;
        auto st = conditioned_pair_stats(sc);
        const double wd = static_cast<double>(w);
        const double x = std::fabs(to_double(sc.x()));
        auto g1 = abs_values(st.g1);
        scan.g1.push_back(fit_envelope(g1, x * std::sqrt(wd), w, std::nullopt));
        scan.g1_pinned.push_back(fit_envelope(g1, x * std::sqrt(wd), w, reference_c));

        OverlapScenario centred = sc;
        centred.beta = Rational(1, 2);
        auto st0 = conditioned_pair_stats(centred);
        EnvelopeFit g2c = fit_envelope(abs_values(st0.g2), std::sqrt(wd), w, std::nullopt);
        scan.g2.push_back(g2c);
        EnvelopeFit g2x = fit_envelope(abs_values(st.g2), 1.0, w, g2c.c);
        scan.g2_quadratic.push_back((g2x.C - g2c.C * std::sqrt(wd)) / (x * x * std::pow(wd, 1.5)));
    }
    scan.g1_C_spread = spread(scan.g1, true);
    scan.g1_c_spread = spread(scan.g1, false);
    scan.g1_pinned_C_spread = spread(scan.g1_pinned, true);
    return scan;
}

std::string to_json(const IdentityReport& r) {
    nlohmann::ordered_json j;
    j["lhs"] = to_string(r.lhs);
    j["rhs"] = to_string(r.rhs);
    j["residual"] = to_string(r.residual);
    j["correction"] = to_string(r.correction);
    j["closure"] = to_string(r.closure);
    return j.dump();
}

std::string to_json(const BoundScan& scan) {
    nlohmann::ordered_json j;
    auto fits = [](const std::vector<EnvelopeFit>& v) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& f : v) arr.push_back({{"w", f.w}, {"C", f.C}, {"c", f.c}});
        return arr;
    };
    j["g1"] = fits(scan.g1);
    j["reference_c"] = scan.reference_c;
    j["g1_pinned"] = fits(scan.g1_pinned);
    j["g2_centred"] = fits(scan.g2);
    j["g2_quadratic_C1"] = scan.g2_quadratic;
    j["g1_C_spread"] = scan.g1_C_spread;
    j["g1_c_spread"] = scan.g1_c_spread;
    j["g1_pinned_C_spread"] = scan.g1_pinned_C_spread;
    return j.dump();
}

}  // namespace sparsedisc::stein
