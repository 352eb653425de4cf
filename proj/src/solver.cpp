#include "sparsedisc/solver.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "sparsedisc/errors.hpp"

namespace sparsedisc {

long SignVector::sum() const {
    long s = 0;
    for (auto v : signs) s += v;
    return s;
}

std::string SignVector::str() const {
    std::string out;
    out.reserve(signs.size());
    for (auto v : signs) out.push_back(v > 0 ? '+' : '-');
    return out;
}

SignVector SignVector::parse(std::string_view text) {
    SignVector u;
    for (char c : text) {
        if (c == '+') u.signs.push_back(1);
        else if (c == '-') u.signs.push_back(-1);
        else throw ParameterError("sign vector may only contain '+' and '-'");
    }
    return u;
}

Eigen::VectorXi SignVector::as_vector() const {
    Eigen::VectorXi v(size());
    for (long j = 0; j < size(); ++j) v(j) = signs[static_cast<size_t>(j)];
    return v;
}

long sup_norm_image(const IntMatrix& a, const SignVector& u) {
    if (u.size() != a.cols()) throw ParameterError("sign vector length does not match matrix width");
    if (a.rows() == 0) return 0;
    return (a * u.as_vector()).cwiseAbs().maxCoeff();
}

std::string SolveResult::to_json() const {
    std::ostringstream out;
    out << "{\"value\": " << value << ", \"witness\": ";
    if (witness) out << '"' << witness->str() << '"';
    else out << "null";
    out << ", \"count\": ";
    if (count) out << *count;
    else out << "null";
    out << '}';
    return out.str();
}

long parity_lower_bound(const IntMatrix& a) {
    for (long i = 0; i < a.rows(); ++i)
        if (a.row(i).sum() % 2 != 0) return 1;
    return 0;
}

namespace {

// Mask convention: bit (n-1-j) set <=> u_j = -1, so numeric order on masks
// is lexicographic order on "+-" strings.
SignVector from_mask(std::uint64_t mask, long n) {
    SignVector u;
    u.signs.resize(static_cast<size_t>(n));
    for (long j = 0; j < n; ++j) u.signs[static_cast<size_t>(j)] = (mask >> (n - 1 - j)) & 1U ? -1 : 1;
    return u;
}

unsigned resolve_threads(unsigned requested) {
    if (requested == 0) requested = std::max(1U, std::thread::hardware_concurrency());
    return requested;
}

struct Best {
    long value = std::numeric_limits<long>::max();
    std::uint64_t mask = 0;
    std::uint64_t count = 0;  // assignments with value <= count_radius
    bool found = false;

    void offer(long v, std::uint64_t m) {
        if (!found || v < value || (v == value && m < mask)) {
            value = v;
            mask = m;
            found = true;
        }
    }
};

/// Enumerates u with u_1 = +1 over one chunk of the remaining n-1 bits.
/// The chunk fixes the top `prefix_bits` of those bits to `prefix`; the
/// rest are walked in Gray-code order.
Best enumerate_chunk(const IntMatrix& a, bool balanced_only, long count_radius, long prefix_bits,
                     std::uint64_t prefix) {
    const long n = a.cols();
    const long m = a.rows();
    const long free_bits = n - 1 - prefix_bits;
    const std::uint64_t base_mask = prefix << free_bits;

    std::vector<int> image(static_cast<size_t>(m), 0);
    long minus = 0;
    for (long j = 0; j < n; ++j) {
        bool neg = (base_mask >> (n - 1 - j)) & 1U;
        minus += neg;
        for (long i = 0; i < m; ++i) image[static_cast<size_t>(i)] += neg ? -a(i, j) : a(i, j);
    }
    // column of each free bit: bit b <-> coordinate n-1-b
    Best best;
    auto visit = [&](std::uint64_t mask) {
        if (balanced_only && 2 * minus != n) return;
        long v = 0;
        for (int x : image) v = std::max<long>(v, std::abs(x));
        best.offer(v, mask);
        if (v <= count_radius) ++best.count;
    };
    std::uint64_t mask = base_mask;
    visit(mask);
    const std::uint64_t total = std::uint64_t{1} << free_bits;
    for (std::uint64_t i = 1; i < total; ++i) {
        int b = __builtin_ctzll(i);
        mask ^= std::uint64_t{1} << b;
        long col = n - 1 - b;
        bool now_neg = (mask >> b) & 1U;
        minus += now_neg ? 1 : -1;
        int factor = now_neg ? -2 : 2;
        for (long r = 0; r < m; ++r) image[static_cast<size_t>(r)] += factor * a(r, col);
        visit(mask);
    }
    return best;
}

Best exhaustive(const IntMatrix& a, bool balanced_only, long count_radius, const SolverLimits& limits) {
    const long n = a.cols();
    if (n > limits.exhaustive_max_n)
        throw CapacityError("exhaustive search needs n <= " + std::to_string(limits.exhaustive_max_n) +
                            " (the exhaustive cap), got n = " + std::to_string(n));
    if (n == 0) {
        Best b;
        b.offer(0, 0);
        b.count = count_radius >= 0 ? 1 : 0;
        return b;
    }
    unsigned threads = resolve_threads(limits.threads);
    long prefix_bits = 0;
    while (prefix_bits < n - 1 && prefix_bits < 6 && (1L << prefix_bits) < 4L * threads) ++prefix_bits;
    if (threads == 1) prefix_bits = 0;
    const std::uint64_t chunks = std::uint64_t{1} << prefix_bits;

    std::vector<Best> results(chunks);
    auto work = [&](unsigned tid) {
        for (std::uint64_t c = tid; c < chunks; c += threads)
            results[c] = enumerate_chunk(a, balanced_only, count_radius, prefix_bits, c);
    };
    if (threads == 1 || chunks == 1) {
        work(0);
        if (chunks > 1)
            for (unsigned t = 1; t < threads; ++t) work(t);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < std::min<std::uint64_t>(threads, chunks); ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    Best total;
    for (const auto& r : results) {
        if (r.found) total.offer(r.value, r.mask);
        total.count += r.count;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Meet in the middle
// ---------------------------------------------------------------------------

struct HalfSignature {
    int imbalance = 0;
    std::vector<int> sums;
};

/// Signatures of every assignment of columns [begin, end); index bit k of
/// the assignment id set <=> column begin+k is negative.
std::vector<HalfSignature> half_signatures(const IntMatrix& a, long begin, long end) {
    const long width = end - begin;
    const long m = a.rows();
    const std::uint64_t total = std::uint64_t{1} << width;
    std::vector<HalfSignature> out(total);
    HalfSignature cur;
    cur.imbalance = static_cast<int>(width);
    cur.sums.assign(static_cast<size_t>(m), 0);
    for (long i = 0; i < m; ++i)
        for (long j = begin; j < end; ++j) cur.sums[static_cast<size_t>(i)] += a(i, j);
    out[0] = cur;
    // walk ids in Gray order, recording each signature under its id
    std::uint64_t id = 0;
    for (std::uint64_t step = 1; step < total; ++step) {
        int b = __builtin_ctzll(step);
        id ^= std::uint64_t{1} << b;
        bool neg = (id >> b) & 1U;
        cur.imbalance += neg ? -2 : 2;
        for (long i = 0; i < m; ++i) cur.sums[static_cast<size_t>(i)] += (neg ? -2 : 2) * a(i, begin + b);
        out[id] = cur;
    }
    return out;
}

/// Packs (imbalance, s_1, ..., s_m) into a fixed-width integer with the
/// imbalance most significant and s_m least significant, so integer order
/// equals lexicographic order on the coordinates.
class KeyCodec {
   public:
    KeyCodec(std::vector<int> bound, bool with_imbalance, int imbalance_bound) : with_imbalance_(with_imbalance) {
        if (with_imbalance) bound.insert(bound.begin(), imbalance_bound);
        bound_ = std::move(bound);
        int total = 0;
        packable_ = true;
        for (int b : bound_) {
            if (b >= (1 << 15)) packable_ = false;
            int w = 1;
            while ((1L << w) < 2L * b + 1) ++w;
            width_.push_back(w);
            total += w;
        }
        if (total > 128) packable_ = false;
    }

    bool packable() const { return packable_; }
    bool with_imbalance() const { return with_imbalance_; }
    const std::vector<int>& bound() const { return bound_; }

    unsigned __int128 pack(const int* coords) const {
        unsigned __int128 key = 0;
        for (size_t c = 0; c < bound_.size(); ++c) {
            key <<= width_[c];
            key |= static_cast<unsigned __int128>(coords[c] + bound_[c]);
        }
        return key;
    }

   private:
    bool with_imbalance_;
    bool packable_ = true;
    std::vector<int> bound_;
    std::vector<int> width_;
};

/// Left-half index: entries sorted by key, each carrying its assignment id.
/// Key is either a packed integer or the coordinate tuple itself.
template <class Key>
struct LeftIndex {
    std::vector<std::pair<Key, std::uint32_t>> entries;

    void sort() {
        std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) {
            return x.first < y.first || (x.first == y.first && x.second < y.second);
        });
    }

    /// [lo, hi] inclusive key range -> [first, last) entry range
    std::pair<size_t, size_t> range(const Key& lo, const Key& hi) const {
        auto first = std::lower_bound(entries.begin(), entries.end(), lo,
                                      [](const auto& e, const Key& k) { return e.first < k; });
        auto last = std::upper_bound(first, entries.end(), hi,
                                     [](const Key& k, const auto& e) { return k < e.first; });
        return {static_cast<size_t>(first - entries.begin()), static_cast<size_t>(last - entries.begin())};
    }
};

struct MitmSearch {
    const IntMatrix& a;
    long r;
    bool balanced_only;
    bool want_count;
    long split;  // left = [0, split), right = [split, n)

    bool feasible = false;
    std::uint64_t left_id = 0, right_id = 0;
    std::uint64_t count = 0;

    template <class Key, class MakeKey>
    void run(const std::vector<HalfSignature>& left, const std::vector<HalfSignature>& right,
             const std::vector<int>& left_bound, MakeKey&& make_key) {
        const long m = a.rows();
        LeftIndex<Key> index;
        index.entries.reserve(left.size());
        std::vector<int> coords;
        auto coords_of = [&](const HalfSignature& s) {
            coords.clear();
            if (balanced_only) coords.push_back(s.imbalance);
            coords.insert(coords.end(), s.sums.begin(), s.sums.end());
            return coords.data();
        };
        for (std::uint32_t id = 0; id < left.size(); ++id) index.entries.emplace_back(make_key(coords_of(left[id])), id);
        index.sort();

        const size_t lead = balanced_only ? 1 : 0;
        const size_t dims = lead + static_cast<size_t>(m);
        std::vector<int> lo(dims), hi(dims), q(dims);

        for (std::uint64_t rid = 0; rid < right.size(); ++rid) {
            const auto& rs = right[rid];
            if (balanced_only) {
                lo[0] = hi[0] = -rs.imbalance;
                if (std::abs(lo[0]) > static_cast<int>(split)) continue;
            }
            bool empty = false;
            for (long i = 0; i < m; ++i) {
                // left sum s must satisfy |s + rs_i| <= r and |s| <= left_bound_i
                int b = left_bound[static_cast<size_t>(i)];
                int l = std::max(-b, static_cast<int>(-r) - rs.sums[static_cast<size_t>(i)]);
                int h = std::min(b, static_cast<int>(r) - rs.sums[static_cast<size_t>(i)]);
                // left sums share the parity of the left row weight
                if (((l - b) % 2 + 2) % 2 != 0) ++l;
                if (((h - b) % 2 + 2) % 2 != 0) --h;
                if (l > h) {
                    empty = true;
                    break;
                }
                lo[lead + static_cast<size_t>(i)] = l;
                hi[lead + static_cast<size_t>(i)] = h;
            }
            if (empty) continue;

            // odometer over all coordinates but the last; the last one is a
            // contiguous key range
            q = lo;
            while (true) {
                std::vector<int> qlo = q, qhi = q;
                qlo[dims - 1] = lo[dims - 1];
                qhi[dims - 1] = hi[dims - 1];
                auto [first, last] = index.range(make_key(qlo.data()), make_key(qhi.data()));
                if (first < last) {
                    if (want_count) {
                        count += last - first;
                    } else {
                        feasible = true;
                        left_id = index.entries[first].second;
                        right_id = rid;
                        return;
                    }
                }
                // advance coordinates dims-2 ... lead, stepping by 2 (parity)
                long c = static_cast<long>(dims) - 2;
                while (c >= static_cast<long>(lead)) {
                    auto cu = static_cast<size_t>(c);
                    if (q[cu] + 2 <= hi[cu]) {
                        q[cu] += 2;
                        break;
                    }
                    q[cu] = lo[cu];
                    --c;
                }
                if (c < static_cast<long>(lead)) break;
            }
        }
        if (want_count) feasible = count > 0;
    }
};

struct MitmOutcome {
    bool feasible = false;
    std::optional<SignVector> witness;
    std::uint64_t count = 0;
};

MitmOutcome mitm(const IntMatrix& a, long r, bool balanced_only, bool want_count, const SolverLimits& limits) {
    const long n = a.cols();
    const long m = a.rows();
    if (r < 0) return {};
    if (n > limits.mitm_max_n || m > limits.mitm_max_m)
        throw CapacityError("meet-in-the-middle needs n <= " + std::to_string(limits.mitm_max_n) + " and m <= " +
                            std::to_string(limits.mitm_max_m) + ", got " + std::to_string(m) + " x " +
                            std::to_string(n));
    if (balanced_only && n % 2 != 0) return {};
    if (n == 0) {
        MitmOutcome o;
        o.feasible = true;
        o.witness = SignVector{};
        o.count = 1;
        return o;
    }
    const long split = n / 2;
    const long right_width = n - split;

    std::vector<int> left_bound(static_cast<size_t>(m)), right_bound(static_cast<size_t>(m));
    for (long i = 0; i < m; ++i) {
        left_bound[static_cast<size_t>(i)] = a.row(i).head(split).sum();
        right_bound[static_cast<size_t>(i)] = a.row(i).tail(right_width).sum();
    }
    KeyCodec codec(left_bound, balanced_only, static_cast<int>(split));

    const std::size_t left_entries = std::size_t{1} << split;
    const std::size_t right_entries = std::size_t{1} << right_width;
    const std::size_t per_sig = sizeof(HalfSignature) + sizeof(int) * static_cast<size_t>(m);
    const std::size_t key_bytes = codec.packable() ? 32 : 40 + sizeof(int) * static_cast<size_t>(m + 1);
    const std::size_t estimate = (left_entries + right_entries) * per_sig + left_entries * key_bytes;
    if (estimate > limits.mitm_memory_bytes)
        throw CapacityError("meet-in-the-middle needs about " + std::to_string(estimate >> 20) +
                            " MiB, above the budget of " + std::to_string(limits.mitm_memory_bytes >> 20) + " MiB");

    auto left = half_signatures(a, 0, split);
    auto right = half_signatures(a, split, n);

    MitmSearch search{a, r, balanced_only, want_count, split};
    if (codec.packable()) {
        search.run<unsigned __int128>(left, right, left_bound, [&](const int* c) { return codec.pack(c); });
    } else {
        const size_t dims = (balanced_only ? 1 : 0) + static_cast<size_t>(m);
        search.run<std::vector<int>>(left, right, left_bound,
                                     [dims](const int* c) { return std::vector<int>(c, c + dims); });
    }

    MitmOutcome out;
    out.feasible = search.feasible;
    out.count = search.count;
    if (search.feasible && !want_count) {
        SignVector u;
        u.signs.resize(static_cast<size_t>(n));
        for (long j = 0; j < split; ++j) u.signs[static_cast<size_t>(j)] = (search.left_id >> j) & 1U ? -1 : 1;
        for (long j = 0; j < right_width; ++j)
            u.signs[static_cast<size_t>(split + j)] = (search.right_id >> j) & 1U ? -1 : 1;
        if (u.signs[0] < 0)
            for (auto& s : u.signs) s = static_cast<signed char>(-s);
        out.witness = std::move(u);
    }
    return out;
}

}  // namespace

SolveResult disc_exhaustive(const IntMatrix& a, bool balanced_only, const SolverLimits& limits) {
    if (balanced_only && a.cols() % 2 != 0)
        throw ParameterError("balanced vectors need an even number of columns");
    Best best = exhaustive(a, balanced_only, -1, limits);
    SolveResult out;
    out.value = best.value;
    out.witness = from_mask(best.mask, a.cols());
    return out;
}

MitmResult disc_exists_mitm(const IntMatrix& a, long r, bool balanced_only, const SolverLimits& limits) {
    auto o = mitm(a, r, balanced_only, false, limits);
    return {o.feasible, std::move(o.witness)};
}

SolveResult disc_mitm(const IntMatrix& a, bool balanced_only, const SolverLimits& limits) {
    if (balanced_only && a.cols() % 2 != 0)
        throw ParameterError("balanced vectors need an even number of columns");
    long r = parity_lower_bound(a);
    while (true) {
        auto o = mitm(a, r, balanced_only, false, limits);
        if (o.feasible) {
            SolveResult out;
            out.value = r;
            out.witness = std::move(o.witness);
            return out;
        }
        ++r;
    }
}

std::uint64_t count_solutions(const IntMatrix& a, long r, const SolverLimits& limits) {
    if (a.cols() % 2 != 0) throw ParameterError("balanced vectors need an even number of columns");
    if (r < 0) return 0;
    if (a.cols() == 0) return 1;
    if (a.cols() <= limits.exhaustive_max_n) return 2 * exhaustive(a, true, r, limits).count;
    return mitm(a, r, true, true, limits).count;
}

}  // namespace sparsedisc
