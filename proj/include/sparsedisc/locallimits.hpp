#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sparsedisc/pmf.hpp"
#include "sparsedisc/rational.hpp"

namespace sparsedisc::lclt {

// ---------------------------------------------------------------------------
// Exact pmfs
// ---------------------------------------------------------------------------

struct Binomial {
    long n = 0;
    Rational p;
};

/// Successes in `draws` draws without replacement from a population of
/// `population` items, `successes` of which are marked.
struct Hypergeometric {
    long draws = 0;
    long successes = 0;
    long population = 0;
};

/// R(r, p): sum of r i.i.d. steps on {-1, 0, 1} with masses
/// p(1-p), p^2 + (1-p)^2, p(1-p).
struct LazyWalk {
    long steps = 0;
    Rational p;
};

using Family = std::variant<Binomial, Hypergeometric, LazyWalk>;

inline constexpr long kExactCap = 4096;

/// Exact pmf; CapacityError above kExactCap (use real_pmf instead).
ExactPmf exact_pmf(const Family& family);

/// Floating pmf computed in log space; no size cap.
RealPmf real_pmf(const Family& family);

/// P[V = k] for V ~ R(r, p), exact, via the trinomial sum
/// sum_j C(r, j) C(r - j, j + |k|) (pq)^(2j+|k|) (1 - 2pq)^(r - 2j - |k|).
Rational lazy_walk_at(long steps, const Rational& p, long k);

/// Step variance 2p(1-p) of the lazy walk.
inline Rational lazy_step_variance(const Rational& p) { return 2 * p * (1 - p); }

// ---------------------------------------------------------------------------
// Approximations and tail bounds
// ---------------------------------------------------------------------------

enum class ApproxKind { demoivre, stirling_binom, cramer_tail, hyp_tail, poisson_tail, edgeworth_lazy };

ApproxKind parse_kind(std::string_view name);
std::string_view kind_name(ApproxKind kind);
bool is_tail_bound(ApproxKind kind);

/// Frozen constants for the O(.) prefactors of the tail kinds. Calibrated
/// once on n <= 400, p in [1/8, 3/4] (binomial) and N <= 320, w <= N/2,
/// success fraction in [1/8, 1/2] (hypergeometric); worst observed ratios
/// were 0.45 and 1.70.
inline constexpr double kCramerConstant = 1.0;
inline constexpr double kHypergeometricConstant = 2.0;

/// One evaluation point. Which fields are read depends on the kind:
///   demoivre, cramer_tail : n, p, point (= number of successes r)
///   stirling_binom        : n, point (= r)
///   hyp_tail              : n (= draws w), population, successes, point (= x)
///   poisson_tail          : lambda, deviation (x in P[|S - lambda| > x])
///   edgeworth_lazy        : n (= steps r), p, point (= k)
struct ApproxQuery {
    ApproxKind kind = ApproxKind::demoivre;
    long n = 0;
    Rational p;
    long point = 0;
    long population = 0;
    long successes = 0;
    Rational lambda;
    Rational deviation;
};

/// Natural log of the approximation (or bound) value.
double approx_log_eval(const ApproxQuery& q);
double approx_eval(const ApproxQuery& q);

/// Natural log of the quantity the approximation targets: the exact pmf
/// value, binomial coefficient, or tail probability.
double exact_log_eval(const ApproxQuery& q);

struct ScanRow {
    ApproxQuery query;
    double exact = 0;
    double approx = 0;
    double rel_error = 0;  // approx / exact - 1
};

struct ScanTable {
    ApproxKind kind = ApproxKind::demoivre;
    std::vector<ScanRow> rows;
    /// Least-squares slope of log|rel_error| against log(size parameter);
    /// NaN for tail kinds or when fewer than two usable rows exist.
    double fitted_exponent = 0;
    /// Rate implied by the error term of the approximation, e.g. -2 for the
    /// corrected lazy-walk expansion, -1 for de Moivre-Laplace.
    double predicted_exponent = 0;
    /// For tail kinds: bound >= exact at every row.
    bool dominates = true;
};

ScanTable error_scan(ApproxKind kind, std::vector<ApproxQuery> grid);

std::string to_csv(const ScanTable& table);

}  // namespace sparsedisc::lclt
