#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sparsedisc/ensembles.hpp"
#include "sparsedisc/solver.hpp"

namespace sparsedisc {

enum class ParityMode { none, even };

ParityMode parse_parity(std::string_view name);

/// Monte Carlo estimate of P[some balanced u has ||A u||_inf <= r] over a
/// grid of widths n with m fixed.
struct PhaseScanConfig {
    EnsembleKind kind = EnsembleKind::bernoulli;
    Rational param = Rational(1, 2);
    long m = 1;
    std::vector<long> n_values;
    long radius = 1;
    long trials = 100;
    ParityMode parity = ParityMode::none;
    unsigned threads = 1;  // 0: hardware concurrency
    std::uint64_t seed = 0;
    SolverLimits limits;

    void validate() const;
};

struct PhaseRow {
    long n = 0;
    long trials = 0;
    long successes = 0;
    double p_hat = 0;
    double wilson_lo = 0;
    double wilson_hi = 0;
};

/// 95% Wilson score interval.
std::pair<double, double> wilson_interval(long successes, long trials, double z = 1.959963984540054);

/// Trial t at grid point i samples with seed derive_key(seed, i, t), so rows
/// do not depend on the thread count. CapacityError before any work when a
/// grid point exceeds the solver caps.
std::vector<PhaseRow> run_phase_scan(const PhaseScanConfig& cfg);

/// "n,trials,successes,p_hat,wilson_lo,wilson_hi", LF endings, fixed format.
std::string to_csv(const std::vector<PhaseRow>& rows);

}  // namespace sparsedisc
