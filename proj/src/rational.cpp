#include "sparsedisc/rational.hpp"

#include <cctype>
#include <cmath>

#include "sparsedisc/errors.hpp"

namespace sparsedisc {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

Integer parse_integer(std::string_view s, std::string_view whole) {
    bool neg = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    if (!all_digits(s))
        throw ParameterError("malformed number '" + std::string(whole) + "'");
    Integer z(std::string(s), 10);
    return neg ? Integer(-z) : z;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    std::string_view s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.empty()) throw ParameterError("empty number");

    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        Integer num = parse_integer(s.substr(0, slash), text);
        Integer den = parse_integer(s.substr(slash + 1), text);
        if (den == 0) throw ParameterError("zero denominator in '" + std::string(text) + "'");
        Rational q(num, den);
        q.canonicalize();
        return q;
    }

    // decimal with optional exponent
    long exponent = 0;
    std::string_view mant = s;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        mant = s.substr(0, e);
        Integer ez = parse_integer(s.substr(e + 1), text);
        if (!ez.fits_slong_p() || std::abs(ez.get_si()) > 4096)
            throw ParameterError("exponent out of range in '" + std::string(text) + "'");
        exponent = ez.get_si();
    }
    bool neg = false;
    if (!mant.empty() && (mant.front() == '-' || mant.front() == '+')) {
        neg = mant.front() == '-';
        mant.remove_prefix(1);
    }
    std::string digits;
    long frac_len = 0;
    if (auto dot = mant.find('.'); dot != std::string_view::npos) {
        std::string_view ip = mant.substr(0, dot), fp = mant.substr(dot + 1);
        if ((!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)) ||
            (ip.empty() && fp.empty()))
            throw ParameterError("malformed number '" + std::string(text) + "'");
        digits = std::string(ip) + std::string(fp);
        frac_len = static_cast<long>(fp.size());
    } else {
        if (!all_digits(mant)) throw ParameterError("malformed number '" + std::string(text) + "'");
        digits = std::string(mant);
    }
    Integer num(digits, 10);
    if (neg) num = -num;
    long shift = exponent - frac_len;
    Integer ten_pow;
    mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(shift)));
    Rational q = shift >= 0 ? Rational(num * ten_pow) : Rational(num, ten_pow);
    q.canonicalize();
    return q;
}

std::string to_string(const Rational& q) {
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

Integer binomial(long n, long k) {
    if (n < 0 || k < 0 || k > n) return 0;
    Integer r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return r;
}

Rational pow(const Rational& base, unsigned long exponent) {
    Rational r;
    mpz_pow_ui(r.get_num_mpz_t(), base.get_num_mpz_t(), exponent);
    mpz_pow_ui(r.get_den_mpz_t(), base.get_den_mpz_t(), exponent);
    return r;  // already canonical: gcd(a^k, b^k) = 1
}

double log_of(const Integer& z) {
    long e = 0;
    double m = mpz_get_d_2exp(&e, z.get_mpz_t());
    return std::log(std::fabs(m)) + static_cast<double>(e) * std::log(2.0);
}

double log_of(const Rational& q) { return log_of(q.get_num()) - log_of(q.get_den()); }

void BinomialTable::reserve(long cap) {
    long have = static_cast<long>(rows_.size());
    for (long n = have; n <= cap; ++n) {
        std::vector<Integer> row(static_cast<size_t>(n + 1));
        row[0] = 1;
        row[static_cast<size_t>(n)] = 1;
        for (long k = 1; k < n; ++k)
            row[static_cast<size_t>(k)] =
                rows_[static_cast<size_t>(n - 1)][static_cast<size_t>(k - 1)] +
                rows_[static_cast<size_t>(n - 1)][static_cast<size_t>(k)];
        rows_.push_back(std::move(row));
    }
}

const Integer& BinomialTable::operator()(long n, long k) {
    if (n < 0 || k < 0 || k > n) return zero_;
    if (n > cap()) reserve(n);
    return rows_[static_cast<size_t>(n)][static_cast<size_t>(k)];
}

}  // namespace sparsedisc
