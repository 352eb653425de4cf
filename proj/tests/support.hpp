#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <cstdint>
#include <map>
#include <vector>

#include "sparsedisc/ensembles.hpp"
#include "sparsedisc/rational.hpp"
#include "sparsedisc/rng.hpp"

namespace testing_support {

using sparsedisc::IntMatrix;
using sparsedisc::Rational;

/// Pearson chi-square p-value of observed counts against expected
/// probabilities; cells with expected count < 5 are pooled.
inline double chi_square_p(const std::vector<long>& observed, const std::vector<double>& probs) {
    long total = 0;
    for (long o : observed) total += o;
    double stat = 0, pool_o = 0, pool_e = 0;
    int cells = 0;
    for (size_t i = 0; i < observed.size(); ++i) {
        double e = probs[i] * static_cast<double>(total);
        if (e < 5) {
            pool_o += static_cast<double>(observed[i]);
            pool_e += e;
            continue;
        }
        stat += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
        ++cells;
    }
    if (pool_e > 0) {
        stat += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
        ++cells;
    }
    if (cells < 2) return 1.0;
    boost::math::chi_squared dist(cells - 1);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

/// All u in {-1,+1}^n (or only the balanced ones), as int vectors.
inline std::vector<std::vector<int>> sign_vectors(int n, bool balanced_only) {
    std::vector<std::vector<int>> out;
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
        std::vector<int> u(static_cast<size_t>(n));
        int sum = 0;
        for (int j = 0; j < n; ++j) {
            u[static_cast<size_t>(j)] = (mask >> j) & 1U ? -1 : 1;
            sum += u[static_cast<size_t>(j)];
        }
        if (!balanced_only || sum == 0) out.push_back(std::move(u));
    }
    return out;
}

inline long sup_norm(const IntMatrix& a, const std::vector<int>& u) {
    long best = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        long s = 0;
        for (Eigen::Index j = 0; j < a.cols(); ++j) s += static_cast<long>(a(i, j)) * u[static_cast<size_t>(j)];
        best = std::max(best, std::labs(s));
    }
    return best;
}

/// u = (+^{n/2}, -^{n/2}) and a balanced v agreeing with u on exactly 2r
/// coordinates (r of u's plus block, r of its minus block).
inline std::pair<std::vector<int>, std::vector<int>> overlap_pair(int n, int r) {
    std::vector<int> u(static_cast<size_t>(n)), v(static_cast<size_t>(n));
    for (int j = 0; j < n / 2; ++j) {
        u[static_cast<size_t>(j)] = 1;
        v[static_cast<size_t>(j)] = j < r ? 1 : -1;
        u[static_cast<size_t>(n / 2 + j)] = -1;
        v[static_cast<size_t>(n / 2 + j)] = j < r ? -1 : 1;
    }
    return {u, v};
}

inline IntMatrix random_matrix(sparsedisc::EnsembleKind kind, long m, long n, const Rational& param,
                               std::uint64_t seed) {
    return sparsedisc::sample({kind, m, n, param, seed});
}

}  // namespace testing_support
