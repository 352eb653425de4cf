#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sparsedisc {

using Integer = mpz_class;
using Rational = mpq_class;

/// Parses "3", "1/3", "-2/5", "0.125" or "1e-3" into an exact rational.
/// Decimals are read as their exact decimal value (0.1 == 1/10).
Rational parse_rational(std::string_view text);

/// "num/den" with den > 0; integers are still written as "k/1" so the
/// format is uniform for consumers.
std::string to_string(const Rational& q);

/// num/den in canonical form. Prefer this to Rational(num, den), which
/// leaves common factors in place and breaks equality and GMP arithmetic.
inline Rational ratio(long num, long den) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

Integer binomial(long n, long k);  // 0 outside 0 <= k <= n

Rational pow(const Rational& base, unsigned long exponent);

inline double to_double(const Rational& q) { return q.get_d(); }

/// Natural log of a positive rational, accurate for huge numerators and
/// denominators (uses mpz_get_d_2exp on each part).
double log_of(const Rational& q);
double log_of(const Integer& z);

/// Pascal-triangle cache of exact binomial coefficients C(n, k), n <= cap.
class BinomialTable {
   public:
    explicit BinomialTable(long cap = 0) { reserve(cap); }

    void reserve(long cap);
    long cap() const { return static_cast<long>(rows_.size()) - 1; }

    /// C(n, k); zero when k < 0 or k > n. Grows the table on demand.
    const Integer& operator()(long n, long k);

   private:
    std::vector<std::vector<Integer>> rows_;
    Integer zero_ = 0;
};

}  // namespace sparsedisc
