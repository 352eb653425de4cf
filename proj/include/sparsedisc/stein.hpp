#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sparsedisc/moments.hpp"
#include "sparsedisc/pmf.hpp"
#include "sparsedisc/rational.hpp"

namespace sparsedisc::stein {

/// Coefficients of T f(s) = a_s f(s+1) - b_s f(s) on {0, ..., w}.
struct BirthDeathSpec {
    long w = 0;
    std::vector<Rational> a;
    std::vector<Rational> b;

    /// a strictly decreasing with a_w = 0, b strictly increasing with
    /// b_0 = 0, everything else positive. ParameterError otherwise.
    void validate() const;

    /// a_s = (w - s)/2, b_s = s/2; stationary law Bin(w, 1/2).
    static BirthDeathSpec binomial(long w);
    /// a_s = wn/2 - s(w + n/2) + s^2, b_s = s(n/2 - w) + s^2; stationary law
    /// hypergeometric(w; n/2, n). Needs w <= n/2.
    static BirthDeathSpec hypergeometric(long n, long w);
};

/// mu_s proportional to prod_{i<=s} a_{i-1} / b_i.
ExactPmf stationary_pmf(const BirthDeathSpec& bd);

/// (T f)(s) for s = 0..w; f needs w + 1 entries (f(w+1) is never used).
std::vector<Rational> stein_apply(const BirthDeathSpec& bd, const std::vector<Rational>& f);

struct SteinSolution {
    long t = 0;
    std::vector<Rational> f;        // f(0..w)
    std::vector<Rational> delta_f;  // f(s+1) - f(s), s = 0..w, with f(w+1) := f(w)
};

/// f(0) = 0, f(s) = mu_t / (b_s mu_s) (1{t < s} - mu({0..s-1})). Requires
/// 1 <= t <= w - 1 unless allow_boundary, in which case t = 0 and t = w are
/// accepted too (T f = 1{s=t} - mu_t still holds there; the shape
/// guarantees do not).
SteinSolution stein_invert(const BirthDeathSpec& bd, long t, bool allow_boundary = false);

/// Each guarantee of the inverse, checked exactly.
struct InversionCheck {
    bool inverse = false;       // T f = 1{s=t} - mu_t
    bool monotone = false;      // delta_f(s) <= 0 for s != t, delta_f(t) > 0
    bool signs = false;         // f <= 0 up to t, f >= 0 after
    bool uniform = false;       // max |delta_f| = delta_f(t) <= min(1/a_t, 1/b_t)
    bool l1 = false;            // sum |delta_f| <= 2 delta_f(t)
    Rational delta_f_t;
    Rational l1_norm;

    bool all() const { return inverse && monotone && signs && uniform && l1; }
};

InversionCheck check_inversion(const BirthDeathSpec& bd, const SteinSolution& sol);

// ---------------------------------------------------------------------------
// Exchangeable pairs
// ---------------------------------------------------------------------------
//
// Outcome labels: a = (+,+), b = (+,-), c = (-,-), d = (-,+); the first sign
// is v's, the second u's. S = S_b + S_c counts the outcomes where u is
// negative, so <u, A_i> = w - 2S. E_k fixes S_a + S_b = (w + k)/2.
//
// Scenarios reuse OverlapScenario: poisson_fixed_weight is the categorical
// construction, bernoulli_fixed_weight the urn of n balls (K = {0}).

struct PairCounts {
    std::array<long, 4> s{};  // S_a, S_b, S_c, S_d

    long total() const { return s[0] + s[1] + s[2] + s[3]; }
    long S() const { return s[1] + s[2]; }
    /// k with S_a + S_b = (w + k)/2
    long k() const { return 2 * (s[0] + s[1]) - total(); }

    friend bool operator==(const PairCounts&, const PairCounts&) = default;
    friend auto operator<=>(const PairCounts&, const PairCounts&) = default;
};

/// The k in K with k = w (mod 2) and |k| <= w, in increasing order.
std::vector<long> valid_band(const OverlapScenario& sc);

/// Conditioned density at (s, c) on the slice E_k. Poisson:
/// G(k, c) = P[S_b = s - c] P[S_c = c], S_b ~ Bin((w+k)/2, gamma),
/// S_c ~ Bin((w-k)/2, beta). Bernoulli (k = 0): F(c) with
/// S_b ~ H(w/2; gamma n/2, n/2), S_c ~ H(w/2; beta n/2, n/2).
Rational pair_density(const OverlapScenario& sc, long k, long s, long c);

/// R_beta(c) of the factorization F(c) = G(0, c) R_beta(c) R_gamma(s - c);
/// needs 0 < beta < 1. `flip` evaluates R_gamma.
Rational hypergeometric_correction(const OverlapScenario& sc, long c, bool flip = false);

/// Weights P_c[E_k | E_K], proportional to C(w, (w+k)/2); keyed like valid_band.
std::vector<Rational> slice_weights(const OverlapScenario& sc);

struct PairStats {
    ExactPmf mu0;                // law of S under P_0
    ExactPmf muc;                // law of S under P_c
    std::vector<Rational> g1;    // E_c[(S_c - S_b) 1{S = s}]
    std::vector<Rational> g2;    // E_c[(S_c - S_b)^2 1{S = s}]
    Rational psi;                // mu0(K_w)
    Rational muc_band;           // muc(K_w)
};

PairStats conditioned_pair_stats(const OverlapScenario& sc);

/// Both sides of the comparison identity and their difference.
/// Poisson: mu0(K_w) - muc(K_w) vs E_c[(gamma - beta)(S_c - S_b)/2 Delta f(S)].
/// Bernoulli: mu0(w/2) - muc(w/2) vs E_c[((S_c - S_b)^2 - n (S_c - S_b)(beta - 1/2)) Delta f(S)].
/// f is the superposition of stein_invert over the band, f(w+1) := f(w).
/// `correction` is the exact leftover (gamma - beta)/2 E_c[k f(S+1)] that
/// the Poisson slice averaging leaves when K != {0}; `closure` =
/// residual - correction, which is always zero.
struct IdentityReport {
    Rational lhs;
    Rational rhs;
    Rational residual;
    Rational correction;
    Rational closure;
};

IdentityReport verify_identity(const OverlapScenario& sc);

/// One exchangeable-pair move: pick one of the w outcomes uniformly and
/// resample it (Poisson) or swap it with an unselected ball (Bernoulli).
/// conditioned restricts the replacement to the same first-sign type; for
/// Bernoulli the swap partner is a uniformly chosen unselected ball of that
/// type. ParameterError for a sigma inconsistent with the mode.
PairCounts pair_chain_step(const OverlapScenario& sc, const PairCounts& sigma, bool conditioned,
                           std::uint64_t seed);

/// Exact kernel of pair_chain_step on every reachable state.
struct ChainMatrix {
    std::vector<PairCounts> states;
    std::vector<Rational> law;                  // stationary law of sigma
    std::vector<std::vector<Rational>> kernel;  // kernel[i][j] = P(sigma_j | sigma_i)
};

ChainMatrix chain_matrix(const OverlapScenario& sc, bool conditioned);

struct ChainCheck {
    bool stationary = false;      // law * kernel == law
    bool exchangeable = false;    // law_i P_ij == law_j P_ji
    bool s_exchangeable = false;  // P(S = s, S' = s') symmetric
    bool rows_stochastic = false;
};

ChainCheck check_chain(const ChainMatrix& cm);

// ---------------------------------------------------------------------------
// Bound scans
// ---------------------------------------------------------------------------

/// Envelope fit of |g(s)| <= C scale(w) exp(-c (s - w/2)^2 / w): c by least
/// squares on log|g|, C the smallest constant valid at every s.
struct EnvelopeFit {
    long w = 0;
    double c = 0;
    double C = 0;
};

/// Free fits let c drift with w and so overstate the growth of C; the
/// pinned fits hold c at `reference_c` for every w.
struct BoundScan {
    double reference_c = 2;            // Gaussian rate of Bin(w, 1/2)
    std::vector<EnvelopeFit> g1;       // scale |x| sqrt(w)
    std::vector<EnvelopeFit> g1_pinned;
    std::vector<EnvelopeFit> g2;       // scale sqrt(w) (centred, at beta = 1/2)
    std::vector<double> g2_quadratic;  // C1 with g2 <= (C1 x^2 w^{3/2} + C2 sqrt(w)) e^{...}
    double g1_C_spread = 0;            // max/min of C across w
    double g1_c_spread = 0;
    double g1_pinned_C_spread = 0;
};

/// Scans g1, g2 for each w. Bernoulli uses n = n_per_w * w; beta must make
/// beta n / 2 integral for every w.
BoundScan scan_bounds(MomentCase ensemble_case, const std::vector<long>& w_list, const Rational& beta,
                      long n_per_w = 4, double reference_c = 2);

std::string to_json(const IdentityReport& r);
std::string to_json(const BoundScan& scan);

}  // namespace sparsedisc::stein
