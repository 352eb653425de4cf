#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparsedisc/ensembles.hpp"

namespace sparsedisc {

/// Element of {-1, +1}^n.
struct SignVector {
    std::vector<signed char> signs;

    long size() const { return static_cast<long>(signs.size()); }
    long sum() const;
    bool balanced() const { return sum() == 0; }

    /// "+-+-..." rendering, and its inverse.
    std::string str() const;
    static SignVector parse(std::string_view text);

    Eigen::VectorXi as_vector() const;
};

/// max_i |<A_i, u>|
long sup_norm_image(const IntMatrix& a, const SignVector& u);

struct SolveResult {
    long value = 0;
    std::optional<SignVector> witness;
    std::optional<std::uint64_t> count;

    /// {"value": int, "witness": "+-..." | null, "count": int | null}
    std::string to_json() const;
};

struct SolverLimits {
    long exhaustive_max_n = 26;
    long mitm_max_n = 40;
    long mitm_max_m = 10;
    std::size_t mitm_memory_bytes = std::size_t{1} << 30;
    /// Worker threads for exhaustive enumeration; 0 means hardware concurrency.
    unsigned threads = 1;
};

/// Exact min over u (balanced or all of {-1,+1}^n) of ||A u||_inf. Ties go
/// to the lexicographically smallest witness with u_1 = +1, ordering '+'
/// before '-'. CapacityError when n exceeds the exhaustive cap.
SolveResult disc_exhaustive(const IntMatrix& a, bool balanced_only, const SolverLimits& limits = {});

/// Meet-in-the-middle test of "some (balanced) u has ||A u||_inf <= r".
/// The witness, when returned, has u_1 = +1.
struct MitmResult {
    bool feasible = false;
    std::optional<SignVector> witness;
};

MitmResult disc_exists_mitm(const IntMatrix& a, long r, bool balanced_only, const SolverLimits& limits = {});

/// Smallest r accepted by disc_exists_mitm, with its witness.
SolveResult disc_mitm(const IntMatrix& a, bool balanced_only, const SolverLimits& limits = {});

/// Z_r: the number of balanced u with ||A u||_inf <= r (u and -u both
/// counted). Exhaustive up to the exhaustive cap, meet-in-the-middle above.
std::uint64_t count_solutions(const IntMatrix& a, long r, const SolverLimits& limits = {});

/// 1 if some row sum is odd (then no u reaches 0), else 0.
long parity_lower_bound(const IntMatrix& a);

}  // namespace sparsedisc
