#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "sparsedisc/errors.hpp"
#include "sparsedisc/rational.hpp"

namespace sparsedisc {

/// Finite pmf over the contiguous integer range [offset, offset + size).
/// Scalar is Rational for exact work or double for floating/log work.
template <class Scalar>
struct Pmf {
    long offset = 0;
    std::vector<Scalar> weights;

    Pmf() = default;
    Pmf(long off, std::vector<Scalar> w) : offset(off), weights(std::move(w)) {}

    static Pmf point(long at) { return Pmf(at, {Scalar(1)}); }

    long lo() const { return offset; }
    long hi() const { return offset + static_cast<long>(weights.size()) - 1; }
    std::size_t size() const { return weights.size(); }

    /// Mass at k; zero outside the support.
    Scalar at(long k) const {
        if (k < lo() || k > hi()) return Scalar(0);
        return weights[static_cast<std::size_t>(k - offset)];
    }

    Scalar total() const {
        Scalar s(0);
        for (const auto& w : weights) s += w;
        return s;
    }

    template <class Fn>
    Scalar expect(Fn&& fn) const {
        Scalar s(0);
        for (std::size_t i = 0; i < weights.size(); ++i)
            s += weights[i] * fn(offset + static_cast<long>(i));
        return s;
    }

    /// Mass of the event {k : pred(k)}.
    template <class Pred>
    Scalar mass_if(Pred&& pred) const {
        Scalar s(0);
        for (std::size_t i = 0; i < weights.size(); ++i)
            if (pred(offset + static_cast<long>(i))) s += weights[i];
        return s;
    }

    /// Law conditioned on pred; throws if the event is null.
    template <class Pred>
    Pmf condition(Pred&& pred) const {
        Scalar z = mass_if(pred);
        if (z == Scalar(0)) throw ParameterError("conditioning on a null event");
        Pmf out = *this;
        for (std::size_t i = 0; i < weights.size(); ++i)
            out.weights[i] = pred(offset + static_cast<long>(i)) ? weights[i] / z : Scalar(0);
        return out;
    }
};

using ExactPmf = Pmf<Rational>;
using RealPmf = Pmf<double>;

template <class Scalar>
Pmf<Scalar> convolve(const Pmf<Scalar>& a, const Pmf<Scalar>& b) {
    Pmf<Scalar> out;
    out.offset = a.offset + b.offset;
    out.weights.assign(a.size() + b.size() - 1, Scalar(0));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.weights[i] == Scalar(0)) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out.weights[i + j] += a.weights[i] * b.weights[j];
    }
    return out;
}

inline RealPmf to_real(const ExactPmf& p) {
    RealPmf out;
    out.offset = p.offset;
    out.weights.reserve(p.size());
    for (const auto& w : p.weights) out.weights.push_back(to_double(w));
    return out;
}

}  // namespace sparsedisc
