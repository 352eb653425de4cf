#include "sparsedisc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "sparsedisc/ensembles.hpp"
#include "sparsedisc/errors.hpp"
#include "sparsedisc/locallimits.hpp"
#include "sparsedisc/moments.hpp"
#include "sparsedisc/phase.hpp"
#include "sparsedisc/solver.hpp"
#include "sparsedisc/stein.hpp"

namespace sparsedisc::cli {

namespace {

using nlohmann::ordered_json;

unsigned thread_default(const CLI::Option* flag, unsigned given) {
    if (flag->count() > 0) return given;
    if (const char* env = std::getenv(kThreadsEnv)) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 0) return static_cast<unsigned>(v);
        throw ParameterError(std::string(kThreadsEnv) + " must be a nonnegative integer");
    }
    return 1;
}

Rational ensemble_param(EnsembleKind kind, const std::string& p, const std::string& lambda) {
    if (kind == EnsembleKind::bernoulli) {
        require(!p.empty(), "bernoulli ensemble needs --p");
        return parse_rational(p);
    }
    require(!lambda.empty(), "poisson ensemble needs --lambda");
    return parse_rational(lambda);
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParameterError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw ParameterError("failed writing '" + path + "'");
}

std::vector<Rational> parse_rationals(const std::vector<std::string>& xs) {
    std::vector<Rational> out;
    for (const auto& x : xs) out.push_back(parse_rational(x));
    return out;
}

ordered_json rational_array(const std::vector<Rational>& xs) {
    ordered_json arr = ordered_json::array();
    for (const auto& q : xs) arr.push_back(to_string(q));
    return arr;
}

struct MomentArgs {
    std::string ensemble_case = "dense";
    long m = 1;
    long n = 0;
    std::string p = "1/2";
    long w = -1;
    std::vector<long> weights;
    long band = 0;
    std::string delta = "1/8";
    std::string eps = "1/4";
    double c = 0.0;
    bool log_mode = false;

    void attach(CLI::App* sub) {
        sub->add_option("--case", ensemble_case, "dense, bernoulli or poisson");
        sub->add_option("--m", m, "rows")->required();
        sub->add_option("--n", n, "columns (even)")->required();
        sub->add_option("--p", p, "entry probability (dense case)");
        sub->add_option("--w", w, "common row weight (fixed-weight cases)");
        sub->add_option("--weights", weights, "per-row weights")->delimiter(',');
        sub->add_option("--band", band, "band radius r, K = {-r..r}");
        sub->add_option("--delta", delta, "weak-bound window");
        sub->add_option("--eps", eps, "strong-bound window");
        sub->add_option("--c", c, "first-moment margin");
        sub->add_flag("--log", log_mode, "log-space ratio");
    }

    MomentParams params() const {
        MomentParams mp;
        mp.ensemble_case = parse_moment_case(ensemble_case);
        mp.m = m;
        mp.n = n;
        mp.p = parse_rational(p);
        mp.band = SymmetricBand::radius(band);
        if (mp.ensemble_case != MomentCase::bernoulli_parity_dense) {
            if (!weights.empty()) {
                mp.weights = weights;
            } else {
                require(w >= 0, "fixed-weight cases need --w or --weights");
                mp.weights.assign(static_cast<size_t>(std::max(0L, m)), w);
            }
        }
        return mp;
    }
};

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact discrepancy solvers, moment formulas, Stein identities and local limits for sparse random matrices", "sparsedisc"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    // gen
    auto* gen = app.add_subcommand("gen", "sample a matrix");
    std::string gen_ensemble, gen_p, gen_lambda, gen_out, gen_parity = "none";
    long gen_m = 0, gen_n = 0;
    std::uint64_t gen_seed = 0;
    gen->add_option("--ensemble", gen_ensemble, "bernoulli or poisson")->required();
    gen->add_option("--m", gen_m)->required();
    gen->add_option("--n", gen_n)->required();
    gen->add_option("--p", gen_p, "bernoulli entry probability");
    gen->add_option("--lambda", gen_lambda, "poisson rate");
    gen->add_option("--seed", gen_seed);
    gen->add_option("--parity", gen_parity, "none or even");
    gen->add_option("--out", gen_out, "output file (default stdout)");

    // disc
    auto* disc = app.add_subcommand("disc", "exact discrepancy");
    std::string disc_in, disc_method = "brute";
    bool disc_balanced = false;
    long disc_cap = 26, disc_mitm_n = 40, disc_mitm_m = 10;
    unsigned disc_threads = 1;
    disc->add_option("--in", disc_in, "matrix file")->required();
    disc->add_option("--method", disc_method, "brute or mitm");
    disc->add_flag("--balanced", disc_balanced, "restrict to balanced vectors");
    disc->add_option("--cap", disc_cap, "exhaustive cap on n");
    disc->add_option("--mitm-max-n", disc_mitm_n);
    disc->add_option("--mitm-max-m", disc_mitm_m);
    auto* disc_threads_opt = disc->add_option("--threads", disc_threads);

    // zcount
    auto* zc = app.add_subcommand("zcount", "count balanced solutions Z_r");
    std::string zc_in;
    long zc_r = 0, zc_cap = 26, zc_mitm_n = 40, zc_mitm_m = 10;
    zc->add_option("--in", zc_in, "matrix file")->required();
    zc->add_option("--r", zc_r, "radius");
    zc->add_option("--cap", zc_cap, "exhaustive cap on n");
    zc->add_option("--mitm-max-n", zc_mitm_n);
    zc->add_option("--mitm-max-m", zc_mitm_m);

    // moments, ratio
    auto* mom = app.add_subcommand("moments", "psi, phi, first moment, ratio and second-moment conditions");
    MomentArgs mom_args;
    mom_args.attach(mom);
    auto* rat = app.add_subcommand("ratio", "second-moment ratio with its overlap profile");
    MomentArgs rat_args;
    rat_args.attach(rat);

    // stein
    auto* stein_cmd = app.add_subcommand("stein", "Stein operator checks");
    stein_cmd->require_subcommand(1);
    auto* inv = stein_cmd->add_subcommand("verify-inverse", "invert T and check the inverse's guarantees");
    long inv_w = 0, inv_t = 0, inv_n = 0;
    std::string inv_spec = "binomial", inv_file;
    inv->add_option("--w", inv_w);
    inv->add_option("--t", inv_t)->required();
    inv->add_option("--spec", inv_spec, "binomial, hypergeometric or file");
    inv->add_option("--n", inv_n, "population (hypergeometric)");
    inv->add_option("--file", inv_file, "spec file: w, then a_0..a_w, then b_0..b_w");

    auto* ident = stein_cmd->add_subcommand("verify-identity", "exact comparison identity");
    std::string id_case = "poisson", id_beta = "1/2";
    long id_w = 0, id_n = 0, id_band = 0;
    ident->add_option("--case", id_case, "poisson or bernoulli");
    ident->add_option("--w", id_w)->required();
    ident->add_option("--n", id_n, "urn size (bernoulli)");
    ident->add_option("--beta", id_beta);
    ident->add_option("--band", id_band, "band radius");

    auto* scan = stein_cmd->add_subcommand("scan-bounds", "fit the g1/g2 envelope constants");
    std::string scan_case = "poisson", scan_beta = "5/8";
    std::vector<long> scan_ws{16, 32, 64};
    long scan_npw = 4;
    double scan_ref_c = 2;
    scan->add_option("--case", scan_case, "poisson or bernoulli");
    scan->add_option("--w-list", scan_ws)->delimiter(',');
    scan->add_option("--beta", scan_beta);
    scan->add_option("--n-per-w", scan_npw, "bernoulli urn size n = n_per_w * w");
    scan->add_option("--reference-c", scan_ref_c, "decay rate held fixed for the pinned fits");

    // lclt
    auto* lclt_cmd = app.add_subcommand("lclt", "approximation error scan (CSV)");
    std::string lc_kind;
    std::vector<long> lc_n{0}, lc_k{0}, lc_pop{0}, lc_succ{0};
    std::vector<std::string> lc_p{"1/2"}, lc_lambda{"0"}, lc_x{"0"};
    lclt_cmd->add_option("--kind", lc_kind)->required();
    lclt_cmd->add_option("--n", lc_n, "sizes, draws or steps")->delimiter(',');
    lclt_cmd->add_option("--p", lc_p)->delimiter(',');
    lclt_cmd->add_option("--k", lc_k, "evaluation points")->delimiter(',');
    lclt_cmd->add_option("--population", lc_pop)->delimiter(',');
    lclt_cmd->add_option("--successes", lc_succ)->delimiter(',');
    lclt_cmd->add_option("--lambda", lc_lambda)->delimiter(',');
    lclt_cmd->add_option("--x", lc_x, "deviations (poisson tail)")->delimiter(',');

    // phase
    auto* phase = app.add_subcommand("phase", "Monte Carlo phase scan (CSV)");
    std::string ph_ensemble = "bernoulli", ph_p = "1/2", ph_lambda, ph_parity = "none", ph_out;
    long ph_m = 1, ph_r = 1, ph_trials = 100, ph_min = 0, ph_max = 0, ph_step = 2, ph_mitm_n = 40, ph_mitm_m = 10;
    std::vector<long> ph_list;
    std::uint64_t ph_seed = 0;
    unsigned ph_threads = 1;
    phase->add_option("--ensemble", ph_ensemble);
    phase->add_option("--m", ph_m)->required();
    phase->add_option("--n-list", ph_list)->delimiter(',');
    phase->add_option("--n-min", ph_min);
    phase->add_option("--n-max", ph_max);
    phase->add_option("--n-step", ph_step);
    phase->add_option("--p", ph_p);
    phase->add_option("--lambda", ph_lambda);
    phase->add_option("--r", ph_r);
    phase->add_option("--trials", ph_trials);
    phase->add_option("--parity", ph_parity, "none or even");
    auto* ph_threads_opt = phase->add_option("--threads", ph_threads);
    phase->add_option("--seed", ph_seed);
    phase->add_option("--out", ph_out);
    phase->add_option("--mitm-max-n", ph_mitm_n);
    phase->add_option("--mitm-max-m", ph_mitm_m);

    if (args.empty() || (args[0].rfind('-', 0) != 0 && !app.get_subcommand_no_throw(args[0]))) {
        if (!args.empty()) err << "error: unknown subcommand '" << args[0] << "'\n";
        err << app.help();
        return 2;
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    if (gen->parsed()) {
        EnsembleSpec spec;
        spec.kind = parse_ensemble(gen_ensemble);
        spec.m = gen_m;
        spec.n = gen_n;
        spec.param = ensemble_param(spec.kind, gen_p, gen_lambda);
        spec.seed = gen_seed;
        IntMatrix a = sample(spec);
        if (parse_parity(gen_parity) == ParityMode::even) a = couple_even_parity(a, spec.kind, spec.param, gen_seed);
        std::ostringstream text;
        write_matrix(text, a);
        write_text(gen_out, text.str(), out);
        return 0;
    }

    if (disc->parsed()) {
        IntMatrix a = load_matrix(disc_in);
        SolverLimits limits;
        limits.exhaustive_max_n = disc_cap;
        limits.mitm_max_n = disc_mitm_n;
        limits.mitm_max_m = disc_mitm_m;
        limits.threads = thread_default(disc_threads_opt, disc_threads);
        SolveResult res;
        if (disc_method == "brute")
            res = disc_exhaustive(a, disc_balanced, limits);
        else if (disc_method == "mitm")
            res = disc_mitm(a, disc_balanced, limits);
        else
            throw ParameterError("unknown method '" + disc_method + "' (brute or mitm)");
        out << res.to_json() << '\n';
        return 0;
    }

    if (zc->parsed()) {
        IntMatrix a = load_matrix(zc_in);
        SolverLimits limits;
        limits.exhaustive_max_n = zc_cap;
        limits.mitm_max_n = zc_mitm_n;
        limits.mitm_max_m = zc_mitm_m;
        SolveResult res;
        res.value = zc_r;
        res.count = count_solutions(a, zc_r, limits);
        out << res.to_json() << '\n';
        return 0;
    }

    if (mom->parsed()) {
        MomentParams mp = mom_args.params();
        MomentReport rep = moment_report(mp, mom_args.log_mode ? MomentMode::log : MomentMode::exact);
        std::optional<SmmFlags> flags;
        std::string flags_error;
        try {
            flags = check_smm_conditions(rep, mp.m, parse_rational(mom_args.delta), parse_rational(mom_args.eps),
                                         mom_args.c);
        } catch (const ParameterError& e) {
            flags_error = e.what();
        }
        auto j = ordered_json::parse(to_json(rep, flags));
        if (!flags_error.empty()) j["flags_error"] = flags_error;
        out << j.dump() << '\n';
        return 0;
    }

    if (rat->parsed()) {
        MomentParams mp = rat_args.params();
        RatioResult rr = second_moment_ratio(mp, rat_args.log_mode ? MomentMode::log : MomentMode::exact);
        ordered_json j;
        j["ratio"] = rr.ratio.exact ? ordered_json(to_string(*rr.ratio.exact)) : ordered_json(nullptr);
        j["log_ratio"] = rr.ratio.log_value;
        ordered_json prof = ordered_json::array();
        for (const auto& t : rr.profile) {
            ordered_json row;
            row["r"] = t.r;
            row["beta"] = to_string(t.beta);
            row["multiplicity"] = t.multiplicity.get_str();
            row["factor"] = t.factor ? ordered_json(to_string(*t.factor)) : ordered_json(nullptr);
            row["log_factor"] = std::isfinite(t.log_factor) ? ordered_json(t.log_factor) : ordered_json(nullptr);
            prof.push_back(row);
        }
        j["profile"] = prof;
        out << j.dump() << '\n';
        return 0;
    }

    if (inv->parsed()) {
        stein::BirthDeathSpec bd;
        if (inv_spec == "binomial") {
            bd = stein::BirthDeathSpec::binomial(inv_w);
        } else if (inv_spec == "hypergeometric") {
            bd = stein::BirthDeathSpec::hypergeometric(inv_n, inv_w);
        } else if (inv_spec == "file") {
            std::ifstream f(inv_file);
            if (!f) throw ParameterError("cannot open spec file '" + inv_file + "'");
            f >> bd.w;
            if (!f || bd.w < 0) throw ParameterError("spec file: bad w");
            for (auto* seq : {&bd.a, &bd.b})
                for (long s = 0; s <= bd.w; ++s) {
                    std::string tok;
                    if (!(f >> tok)) throw ParameterError("spec file: expected " + std::to_string(bd.w + 1) + " values per sequence");
                    seq->push_back(parse_rational(tok));
                }
        } else {
            throw ParameterError("unknown spec '" + inv_spec + "' (binomial, hypergeometric, file)");
        }
        bd.validate();
        auto sol = stein::stein_invert(bd, inv_t);
        auto chk = stein::check_inversion(bd, sol);
        ordered_json j;
        j["w"] = bd.w;
        j["t"] = inv_t;
        j["mu"] = rational_array(stein::stationary_pmf(bd).weights);
        j["f"] = rational_array(sol.f);
        j["delta_f"] = rational_array(sol.delta_f);
        j["delta_f_t"] = to_string(chk.delta_f_t);
        j["l1"] = to_string(chk.l1_norm);
        j["checks"] = {{"inverse", chk.inverse}, {"monotone", chk.monotone}, {"signs", chk.signs},
                       {"uniform", chk.uniform}, {"l1", chk.l1}};
        out << j.dump() << '\n';
        return 0;
    }

    if (ident->parsed()) {
        OverlapScenario sc;
        sc.ensemble_case = id_case == "poisson"     ? MomentCase::poisson_fixed_weight
                           : id_case == "bernoulli" ? MomentCase::bernoulli_fixed_weight
                                                    : throw ParameterError("unknown case '" + id_case + "'");
        sc.w = id_w;
        sc.n = id_n;
        sc.beta = parse_rational(id_beta);
        sc.band = SymmetricBand::radius(id_band);
        auto rep = stein::verify_identity(sc);
        auto j = ordered_json::parse(stein::to_json(rep));
        j["case"] = id_case;
        j["w"] = id_w;
        j["n"] = id_n;
        j["beta"] = to_string(sc.beta);
        j["band"] = id_band;
        out << j.dump() << '\n';
        return 0;
    }

    if (scan->parsed()) {
        MomentCase c = scan_case == "poisson"     ? MomentCase::poisson_fixed_weight
                       : scan_case == "bernoulli" ? MomentCase::bernoulli_fixed_weight
                                                  : throw ParameterError("unknown case '" + scan_case + "'");
        auto res = stein::scan_bounds(c, scan_ws, parse_rational(scan_beta), scan_npw, scan_ref_c);
        out << stein::to_json(res) << '\n';
        return 0;
    }

    if (lclt_cmd->parsed()) {
        lclt::ApproxKind kind = lclt::parse_kind(lc_kind);
        auto ps = parse_rationals(lc_p);
        auto lambdas = parse_rationals(lc_lambda);
        auto xs = parse_rationals(lc_x);
        std::vector<lclt::ApproxQuery> grid;
        for (long n : lc_n)
            for (const auto& p : ps)
                for (long k : lc_k)
                    for (long pop : lc_pop)
                        for (long succ : lc_succ)
                            for (const auto& lam : lambdas)
                                for (const auto& x : xs) {
                                    lclt::ApproxQuery q;
                                    q.kind = kind;
                                    q.n = n;
                                    q.p = p;
                                    q.point = k;
                                    q.population = pop;
                                    q.successes = succ;
                                    q.lambda = lam;
                                    q.deviation = x;
                                    grid.push_back(q);
                                }
        auto table = lclt::error_scan(kind, grid);
        out << lclt::to_csv(table);
        err << "# fitted_exponent=" << table.fitted_exponent << " predicted_exponent=" << table.predicted_exponent
            << " dominates=" << (table.dominates ? "true" : "false") << '\n';
        return 0;
    }

    if (phase->parsed()) {
        PhaseScanConfig cfg;
        cfg.kind = parse_ensemble(ph_ensemble);
        cfg.param = ensemble_param(cfg.kind, ph_p, ph_lambda);
        cfg.m = ph_m;
        if (!ph_list.empty()) {
            cfg.n_values = ph_list;
        } else {
            require(ph_step > 0 && ph_min <= ph_max, "need --n-list or --n-min <= --n-max with --n-step > 0");
            for (long n = ph_min; n <= ph_max; n += ph_step) cfg.n_values.push_back(n);
        }
        cfg.radius = ph_r;
        cfg.trials = ph_trials;
        cfg.parity = parse_parity(ph_parity);
        cfg.threads = thread_default(ph_threads_opt, ph_threads);
        cfg.seed = ph_seed;
        cfg.limits.mitm_max_n = ph_mitm_n;
        cfg.limits.mitm_max_m = ph_mitm_m;
        write_text(ph_out, to_csv(run_phase_scan(cfg)), out);
        return 0;
    }
    return 2;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return run(args, out, err);
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const CapacityError& e) {
        err << "capacity: " << e.what() << '\n';
        return 3;
    } catch (const InvariantError& e) {
        err << "internal: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        err << "internal: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace sparsedisc::cli
