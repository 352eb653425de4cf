#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sparsedisc/rational.hpp"

namespace sparsedisc {

/// Finite set K of integers with k in K <=> -k in K.
class SymmetricBand {
   public:
    SymmetricBand() : members_{0} {}
    /// Throws ParameterError unless the set is nonempty and symmetric.
    explicit SymmetricBand(std::set<long> members);

    /// {-r, ..., r}
    static SymmetricBand radius(long r);

    bool contains(long k) const { return members_.count(k) != 0; }
    const std::set<long>& members() const { return members_; }
    long max_abs() const { return *members_.rbegin(); }

   private:
    std::set<long> members_;
};

enum class MomentCase { bernoulli_parity_dense, bernoulli_fixed_weight, poisson_fixed_weight };

MomentCase parse_moment_case(std::string_view name);  // "dense", "bernoulli", "poisson" or full names
std::string_view moment_case_name(MomentCase c);

/// A pair of balanced vectors agreeing on a beta fraction of coordinates,
/// tested against one row.
struct OverlapScenario {
    MomentCase ensemble_case = MomentCase::poisson_fixed_weight;
    long n = 0;
    long w = 0;
    SymmetricBand band;
    Rational beta = Rational(1, 2);

    Rational gamma() const { return 1 - beta; }
    Rational x() const { return beta - Rational(1, 2); }

    /// Overlap count r = beta n / 2; ParameterError unless integral.
    long overlap() const;
    void validate() const;
};

struct PsiPhi {
    Rational psi;
    Rational phi;
};

/// P[Bin(n, p) even] = 1/2 + (1 - 2p)^n / 2
Rational parity_prob(long n, const Rational& p);

/// Parity-conditioned dense Bernoulli row: psi = P[U in K, U even] / P(P1)
/// with U ~ R(n/2, p); phi at beta = 2r/n sums P[V=a] P[V'=b] over
/// a + b, a - b in K (both even), V ~ R(r, p), V' ~ R(n/2 - r, p).
PsiPhi psi_phi_dense(long n, const Rational& p, long overlap_r, const SymmetricBand& band = {});

/// Fixed-weight rows. Bernoulli: w ones placed without replacement,
/// psi = sum_K C(n/2, (w+k)/2) C(n/2, (w-k)/2) / C(n, w). Poisson: w
/// uniform draws with replacement, psi = 2^-w sum_K C(w, (w+k)/2).
PsiPhi psi_phi_fixed_weight(const OverlapScenario& scenario);

/// Exact value where representable, always a natural log.
struct MomentValue {
    std::optional<Rational> exact;
    double log_value = 0;
};

/// Instance class for the moment computations. Dense uses p; the
/// fixed-weight cases use one row weight per row.
struct MomentParams {
    MomentCase ensemble_case = MomentCase::bernoulli_parity_dense;
    long m = 1;
    long n = 0;
    Rational p = Rational(1, 2);
    std::vector<long> weights;
    SymmetricBand band;

    void validate() const;
    /// psi_i and phi_i at overlap r for row i.
    PsiPhi row(long i, long overlap_r) const;
};

struct MomentLimits {
    long exact_max_n = 64;
    long exact_max_m = 8;
};

/// E[Z] = C(n, n/2) prod_i psi_i (exact when n <= exact_max_n).
MomentValue expected_solution_count(const MomentParams& params, const MomentLimits& limits = {});

struct OverlapTerm {
    long r = 0;
    Rational beta;
    Integer multiplicity;                    // C(n/2, r)^2
    std::optional<Rational> factor;          // prod_i phi_i / psi_i^2
    double log_factor = 0;                   // -inf when some phi_i = 0
};

struct RatioResult {
    MomentValue ratio;
    std::vector<OverlapTerm> profile;
};

enum class MomentMode { exact, log };

/// E[Z^2] / E[Z]^2 = C(n, n/2)^-1 sum_r C(n/2, r)^2 prod_i phi_i(2r/n) / psi_i^2.
/// Exact mode throws CapacityError beyond the limits.
RatioResult second_moment_ratio(const MomentParams& params, MomentMode mode = MomentMode::exact,
                                const MomentLimits& limits = {});

struct MomentReport {
    long n = 0;
    long m = 0;
    Rational psi;
    std::map<Rational, Rational> phi_at;
    MomentValue first_moment;
    std::optional<RatioResult> ratio;
};

/// psi and phi over every overlap beta = 2r/n, plus the first moment and
/// (when requested) the ratio. Requires equal row weights.
MomentReport moment_report(const MomentParams& params, MomentMode mode = MomentMode::exact,
                           bool with_ratio = true, const MomentLimits& limits = {});

struct SmmFlags {
    bool first_moment_holds = false;
    double first_moment_margin = 0;  // log E[Z] / n

    bool weak_bound_holds = false;
    double c_delta = 0;  // smallest C_delta on the grid

    bool strong_bound_holds = false;
    double c_fit = 0;          // least squares C in phi/psi^2 - 1 ~ C x^2
    double c_envelope = 0;     // smallest C with phi/psi^2 <= (1 + 1/(10m))(1 + C x^2)
    std::optional<double> central_deviation;  // |phi(1/2)/psi^2 - 1|
    long central_points = 0;
};

/// Checks the three second-moment conditions on the report's beta grid:
/// first moment log E[Z] > c n; weak bound on [delta, 1 - delta]; strong
/// bound on |x| < eps, judged by |phi(1/2)/psi^2 - 1| < 1/(10m). Throws
/// ParameterError with fewer than 5 grid points in the central window.
SmmFlags check_smm_conditions(const MomentReport& report, long m, const Rational& delta, const Rational& eps,
                              double c = 0.0);

/// {"psi", "phi": [[num, den, value]...], "first_moment", "ratio", "flags"}
std::string to_json(const MomentReport& report, const std::optional<SmmFlags>& flags);

}  // namespace sparsedisc
