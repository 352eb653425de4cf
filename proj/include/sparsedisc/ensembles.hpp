#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sparsedisc/pmf.hpp"
#include "sparsedisc/rational.hpp"

namespace sparsedisc {

/// m x n matrix of nonnegative integers, stored row-major.
using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class EnsembleKind { bernoulli, poisson };

EnsembleKind parse_ensemble(std::string_view name);
std::string_view ensemble_name(EnsembleKind kind);

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::bernoulli;
    long m = 0;
    long n = 0;
    /// Bernoulli: entry probability p in [0, 1/2]. Poisson: rate lambda >= 0.
    Rational param;
    std::uint64_t seed = 0;

    /// Throws ParameterError on odd n, p outside [0, 1/2], negative rate.
    void validate() const;
};

/// I.i.d. Bernoulli(p) or Poisson(lambda) entries. Row i draws from its own
/// counter-based stream, so the result depends only on (spec, seed).
IntMatrix sample(const EnsembleSpec& spec);

/// Truncation point K for Poisson(lambda) sampling: the two-sided Poisson
/// tail bound 2 exp(-x^2 / (2 (lambda + x))) at x = K - lambda is < 2^-60.
long poisson_sampling_cap(double lambda);

// ---------------------------------------------------------------------------
// Even-parity coupling
// ---------------------------------------------------------------------------

/// Joint law of (X, X') with X ~ base, X' ~ base conditioned on even, and
/// |X - X'| <= 1 almost surely.
struct CouplingTable {
    ExactPmf base;
    ExactPmf even_marginal;
    /// t_{2j}, the mass moved from 2j - 1 up to 2j; keyed by the even index.
    std::map<long, Rational> t;
    /// Nonzero joint masses keyed by (x, x').
    std::map<std::pair<long, long>, Rational> joint;
    /// Largest retained support point when base was truncated; -1 otherwise.
    long truncation = -1;

    /// P(X' = x + 1 | X = x) for odd x (zero for even x or x outside the table).
    double up_probability(long x) const;
};

/// Builds the coupling by the recursion t_{2j+2} = t_{2j} + mu_{2j}(1 - 1/Q)
/// + mu_{2j+1}, t_0 = 0, where Q is the even mass of mu. Requires mu on the
/// nonnegative integers with Q > 0 (ParameterError otherwise). Throws
/// InvariantError if some t_{2j} leaves [0, mu_{2j-1}], which happens for
/// non-log-concave inputs.
CouplingTable pinelis_joint(const ExactPmf& mu);

/// Poisson(lambda) restricted to {0, ..., K} and renormalised, with K the
/// first point whose remaining tail mass is below `tail_tolerance`. The
/// weights lambda^k / k! are rational, so the result is exact.
ExactPmf truncated_poisson(const Rational& lambda, double tail_tolerance = 1e-15);

/// Coupling table for the row-sum law of an n-column row of the ensemble.
CouplingTable row_sum_coupling(EnsembleKind kind, long n, const Rational& param);

/// Applies the coupling row by row: each row of the output has even sum and
/// differs from the input row in at most one entry by exactly one.
/// Bernoulli: a decrement flips a uniformly chosen one, an increment a
/// uniformly chosen zero. Poisson: a decrement hits entry j with probability
/// proportional to A_ij, an increment hits a uniform entry.
IntMatrix couple_even_parity(const IntMatrix& a, EnsembleKind kind, const Rational& param, std::uint64_t seed);

/// Same, reusing a precomputed row-sum table.
IntMatrix couple_even_parity(const IntMatrix& a, EnsembleKind kind, const CouplingTable& table,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Fixed-weight rows
// ---------------------------------------------------------------------------

enum class FixedWeightKind { poisson_with_replacement, bernoulli_without_replacement };

/// A length-n row summing to exactly w: multinomial occupancy of w uniform
/// draws with replacement, or a uniform 0/1 row with exactly w ones.
std::vector<int> sample_fixed_weight(FixedWeightKind kind, long n, long w, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Matrix text format: "m n" then m lines of n nonnegative integers.
// ---------------------------------------------------------------------------

void write_matrix(std::ostream& out, const IntMatrix& a);
IntMatrix read_matrix(std::istream& in);
void save_matrix(const std::string& path, const IntMatrix& a);
IntMatrix load_matrix(const std::string& path);

}  // namespace sparsedisc
