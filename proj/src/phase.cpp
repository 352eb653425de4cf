#include "sparsedisc/phase.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "sparsedisc/errors.hpp"
#include "sparsedisc/rng.hpp"

namespace sparsedisc {

ParityMode parse_parity(std::string_view name) {
    if (name == "none") return ParityMode::none;
    if (name == "even") return ParityMode::even;
    throw ParameterError("unknown parity mode '" + std::string(name) + "' (none or even)");
}

void PhaseScanConfig::validate() const {
    require(m >= 0, "m must be nonnegative");
    require(!n_values.empty(), "phase scan needs at least one n");
    require(trials >= 1, "trials must be at least 1");
    require(radius >= 0, "radius must be nonnegative");
    for (long n : n_values) require(n >= 0 && n % 2 == 0, "every n in the scan must be even");
    EnsembleSpec probe{kind, m, n_values.front(), param, seed};
    probe.validate();

    std::string offending;
    for (long n : n_values)
        if (n > limits.mitm_max_n || m > limits.mitm_max_m)
            offending += (offending.empty() ? "" : ", ") + std::to_string(m) + "x" + std::to_string(n);
    if (!offending.empty())
        throw CapacityError("phase scan points exceed the solver caps (n <= " + std::to_string(limits.mitm_max_n) +
                            ", m <= " + std::to_string(limits.mitm_max_m) + "): " + offending);
}

std::pair<double, double> wilson_interval(long successes, long trials, double z) {
    if (trials <= 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector<PhaseRow> run_phase_scan(const PhaseScanConfig& cfg) {
    cfg.validate();
    const size_t points = cfg.n_values.size();
    const auto trials = static_cast<size_t>(cfg.trials);
    const size_t jobs = points * trials;

    std::vector<CouplingTable> tables;
    if (cfg.parity == ParityMode::even)
        for (long n : cfg.n_values) tables.push_back(row_sum_coupling(cfg.kind, n, cfg.param));

    SolverLimits limits = cfg.limits;
    limits.threads = 1;
    std::vector<unsigned char> success(jobs, 0);
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (size_t job = next++; job < jobs; job = next++) {
            size_t point = job / trials, trial = job % trials;
            std::uint64_t key = derive_key(cfg.seed, point, trial);
            EnsembleSpec spec{cfg.kind, cfg.m, cfg.n_values[point], cfg.param, key};
            IntMatrix a = sample(spec);
            if (cfg.parity == ParityMode::even) a = couple_even_parity(a, cfg.kind, tables[point], key);
            success[job] = disc_exists_mitm(a, cfg.radius, true, limits).feasible ? 1 : 0;
        }
    };

    unsigned threads = cfg.threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : cfg.threads;
    threads = static_cast<unsigned>(std::min<size_t>(threads, jobs));
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    std::vector<PhaseRow> rows;
    for (size_t point = 0; point < points; ++point) {
        PhaseRow row;
        row.n = cfg.n_values[point];
        row.trials = cfg.trials;
        for (size_t t = 0; t < trials; ++t) row.successes += success[point * trials + t];
        row.p_hat = static_cast<double>(row.successes) / static_cast<double>(row.trials);
        std::tie(row.wilson_lo, row.wilson_hi) = wilson_interval(row.successes, row.trials);
        rows.push_back(row);
    }
    return rows;
}

std::string to_csv(const std::vector<PhaseRow>& rows) {
    std::string out = "n,trials,successes,p_hat,wilson_lo,wilson_hi\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%ld,%ld,%ld,%.6f,%.6f,%.6f\n", r.n, r.trials, r.successes, r.p_hat,
                      r.wilson_lo, r.wilson_hi);
        out += buf;
    }
    return out;
}

}  // namespace sparsedisc
