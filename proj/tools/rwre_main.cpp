// rwre: batch front end for the random-walk-in-random-environment toolkit.
// One subcommand per concern; CSV for tables, JSON for nested reports.
// Reports are byte-identical for a fixed (config, seed) regardless of the
// worker count; wall time and worker count go to stdout only.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rwre/environment.hpp"
#include "rwre/errors.hpp"
#include "rwre/exit.hpp"
#include "rwre/lyapunov.hpp"
#include "rwre/matrix.hpp"
#include "rwre/parallel.hpp"
#include "rwre/report.hpp"
#include "rwre/slowdown.hpp"
#include "rwre/version.hpp"
#include "rwre/walk.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace rwre;

namespace {

struct Common {
    std::string spec_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    int workers = 0;  // 0: RWRE_WORKERS or hardware

    std::uint64_t resolve_seed() {
        if (!seed) {
            std::random_device rd;
            seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        }
        return *seed;
    }

    fs::path out_file(const std::string& name) const {
        fs::create_directories(out_dir);
        return fs::path(out_dir) / name;
    }
};

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    if (out.empty()) throw InvalidInput("empty list: " + text);
    return out;
}

std::vector<std::int64_t> parse_int_list(const std::string& text) {
    std::vector<std::int64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoll(item));
    if (out.empty()) throw InvalidInput("empty list: " + text);
    return out;
}

std::vector<double> build_grid(double lo, double hi, double step) {
    if (step <= 0.0 || hi < lo) throw InvalidInput("bad grid bounds");
    std::vector<double> grid;
    const auto count = static_cast<std::int64_t>(std::llround((hi - lo) / step));
    for (std::int64_t i = 0; i <= count; ++i) {
        double u = lo + static_cast<double>(i) * step;
        if (std::abs(u) < 1e-12) u = 0.0;  // keep the exact F(0) = 0 pin
        grid.push_back(u);
    }
    return grid;
}

ordered_json gamma_json(const LyapunovEstimate& g) {
    ordered_json j;
    j["value"] = g.value;
    j["std_error"] = g.std_error;
    j["n"] = g.n;
    j["replicas"] = g.replicas;
    j["method"] = g.method;
    return j;
}

ordered_json feval_json(const FEval& f) {
    ordered_json j;
    j["value"] = f.value;
    j["std_error"] = f.std_error;
    return j;
}

void write_moment_curve_csv(const fs::path& path, const MomentCurve& curve) {
    std::ofstream out(path, std::ios::binary);
    report::Csv csv(out, {"u", "F_hat", "std_err", "method"});
    for (const auto& pt : curve.points)
        csv.row({report::fmt(pt.u), report::fmt(pt.f_hat), report::fmt(pt.std_error),
                 curve.method});
}

MomentCurve read_moment_curve_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open curve file: " + path);
    MomentCurve curve;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
            line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::stringstream ss(line);
        std::string u, f, se, method;
        std::getline(ss, u, ',');
        std::getline(ss, f, ',');
        std::getline(ss, se, ',');
        std::getline(ss, method, ',');
        MomentPoint pt;
        pt.u = std::stod(u);
        pt.f_hat = std::stod(f);
        pt.std_error = std::stod(se);
        curve.points.push_back(pt);
        curve.method = method;
    }
    if (curve.points.size() < 2)
        throw InvalidInput("curve file has fewer than 2 points: " + path);
    return curve;
}

ordered_json curve_json(const MomentCurve& curve) {
    ordered_json j;
    j["n"] = curve.n;
    j["replicas"] = curve.replicas;
    j["method"] = curve.method;
    j["points"] = ordered_json::array();
    for (const auto& pt : curve.points) {
        ordered_json p;
        p["u"] = pt.u;
        p["f_hat"] = pt.f_hat;
        p["std_error"] = pt.std_error;
        p["heavy_tail"] = pt.heavy_tail;
        j["points"].push_back(p);
    }
    return j;
}

// method selection shared by the estimator commands
bool use_exact(const std::string& method, const EnvironmentSpec& spec,
               std::int64_t n) {
    if (method == "exact") {
        if (!enumeration_feasible(spec, n))
            throw TooLarge("exact enumeration infeasible at n = " + std::to_string(n));
        return true;
    }
    if (method == "mc") return false;
    return enumeration_feasible(spec, n);  // auto
}

int dispatch(int argc, char** argv);

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const RegimeMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalFault& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

namespace {

int dispatch(int argc, char** argv) {
    CLI::App app{"random walks in random environments with bounded jumps"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* cmd, bool needs_spec = true) {
        auto* opt = cmd->add_option("--spec", common.spec_path, "environment spec JSON");
        if (needs_spec) opt->required();
        cmd->add_option("--seed", common.seed, "master seed (auto if absent)");
        cmd->add_option("--out", common.out_dir, "output directory");
        cmd->add_option("--workers", common.workers,
                        "worker threads (default: RWRE_WORKERS or hardware)");
    };

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        const auto dt = std::chrono::steady_clock::now() - t0;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f s",
                      std::chrono::duration<double>(dt).count());
        return std::string(buf);
    };

    // ---- validate ----------------------------------------------------------
    auto* c_validate = app.add_subcommand("validate", "check a spec file");
    add_common(c_validate);

    // ---- estimate-gamma ----------------------------------------------------
    auto* c_gamma = app.add_subcommand("estimate-gamma", "top Lyapunov exponent");
    add_common(c_gamma);
    std::int64_t g_n = 10000, g_replicas = 32;
    std::string g_method = "mc";
    c_gamma->add_option("--n", g_n, "product length");
    c_gamma->add_option("--replicas", g_replicas, "independent replicas");
    c_gamma->add_option("--method", g_method, "mc|exact|auto")
        ->check(CLI::IsMember({"mc", "exact", "auto"}));

    // ---- moment-curve ------------------------------------------------------
    auto* c_curve = app.add_subcommand("moment-curve", "F(u) on a grid");
    add_common(c_curve);
    std::int64_t mc_n = 12, mc_replicas = 10000;
    std::string mc_method = "auto", mc_ulist;
    double mc_umin = -1.5, mc_umax = 1.5, mc_ustep = 0.1;
    c_curve->add_option("--n", mc_n, "product length");
    c_curve->add_option("--replicas", mc_replicas, "Monte Carlo replicas");
    c_curve->add_option("--method", mc_method, "mc|exact|auto")
        ->check(CLI::IsMember({"mc", "exact", "auto"}));
    c_curve->add_option("--u-min", mc_umin, "grid start");
    c_curve->add_option("--u-max", mc_umax, "grid end");
    c_curve->add_option("--u-step", mc_ustep, "grid step");
    c_curve->add_option("--u-list", mc_ulist, "explicit comma-separated grid");

    // ---- rate-function -----------------------------------------------------
    auto* c_rate = app.add_subcommand("rate-function", "Legendre transform of a curve");
    add_common(c_rate, false);
    std::string r_curve_path, r_xlist;
    c_rate->add_option("--curve", r_curve_path, "moment curve CSV")->required();
    c_rate->add_option("--x-list", r_xlist, "comma-separated x grid");

    // ---- find-s ------------------------------------------------------------
    auto* c_finds = app.add_subcommand("find-s", "slowdown exponent F(s) = 0");
    add_common(c_finds);
    std::int64_t fs_n = 12, fs_replicas = 1024, fs_budget = 10'000'000;
    std::string fs_method = "auto", fs_side = "auto", fs_curve;
    double fs_tol = 1e-6;
    c_finds->add_option("--n", fs_n, "product length for F evaluations");
    c_finds->add_option("--method", fs_method, "mc|exact|auto")
        ->check(CLI::IsMember({"mc", "exact", "auto"}));
    c_finds->add_option("--side", fs_side, "auto|positive|negative")
        ->check(CLI::IsMember({"auto", "positive", "negative"}));
    c_finds->add_option("--tol", fs_tol, "bisection tolerance in u");
    c_finds->add_option("--replicas", fs_replicas, "base Monte Carlo replicas");
    c_finds->add_option("--budget", fs_budget, "replica budget for sign tests");
    c_finds->add_option("--curve", fs_curve,
                        "cached moment curve CSV used to bracket the root");

    // ---- classify ----------------------------------------------------------
    auto* c_classify = app.add_subcommand("classify", "transience/speed regime");
    add_common(c_classify);
    std::int64_t cl_n = 12, cl_replicas = 64;
    std::string cl_method = "auto";
    c_classify->add_option("--n", cl_n, "product length");
    c_classify->add_option("--replicas", cl_replicas, "Monte Carlo replicas");
    c_classify->add_option("--method", cl_method, "mc|exact|auto")
        ->check(CLI::IsMember({"mc", "exact", "auto"}));

    // ---- simulate ----------------------------------------------------------
    auto* c_sim = app.add_subcommand("simulate", "batch of n-step walks from 0");
    add_common(c_sim);
    std::int64_t sim_n = 1024, sim_walkers = 1000;
    std::string sim_mode = "annealed";
    bool sim_record = false;
    c_sim->add_option("--n", sim_n, "steps per walker");
    c_sim->add_option("--walkers", sim_walkers, "walker count");
    c_sim->add_option("--mode", sim_mode, "annealed|quenched")
        ->check(CLI::IsMember({"annealed", "quenched"}));
    c_sim->add_flag("--record", sim_record, "also dump walker 0's trajectory");

    // ---- exit-prob ---------------------------------------------------------
    auto* c_exit = app.add_subcommand("exit-prob", "quenched exit probabilities");
    add_common(c_exit);
    std::int64_t ex_k = 1, ex_a = 0, ex_b = 0;
    bool ex_dump = false;
    c_exit->add_option("--k", ex_k, "start site")->required();
    c_exit->add_option("--a", ex_a, "left boundary (reach (-inf,a])")->required();
    c_exit->add_option("--b", ex_b, "right boundary (reach [b,inf))")->required();
    c_exit->add_flag("--dump-deltas", ex_dump, "write (j, log delta(j,a+1)) table");

    // ---- survival ----------------------------------------------------------
    auto* c_surv = app.add_subcommand("survival", "exact P(T_U > n) on U = [-N, M]");
    add_common(c_surv);
    std::int64_t sv_N = 50, sv_M = 50, sv_n = 1000, sv_envs = 1;
    c_surv->add_option("--N", sv_N, "left arm");
    c_surv->add_option("--M", sv_M, "right arm");
    c_surv->add_option("--n", sv_n, "horizon");
    c_surv->add_option("--envs", sv_envs, "independent environments (one row each)");

    // ---- trap-scan ---------------------------------------------------------
    auto* c_trap = app.add_subcommand("trap-scan", "trap frequency vs n");
    add_common(c_trap);
    std::string tr_ngrid = "1024,2048,4096,8192,16384,32768,65536";
    double tr_K = 0.0, tr_sref = 0.0;
    std::int64_t tr_samples = 2000;
    bool tr_force = false;
    bool tr_has_K = false, tr_has_sref = false;
    c_trap->add_option("--n-grid", tr_ngrid, "comma-separated horizons");
    c_trap->add_option("--K", tr_K, "window coefficient (default: ceil(2/|gamma|))")
        ->each([&](const std::string&) { tr_has_K = true; });
    c_trap->add_option("--env-samples", tr_samples, "environments per n");
    c_trap->add_option("--s-ref", tr_sref, "slope band reference exponent")
        ->each([&](const std::string&) { tr_has_sref = true; });
    c_trap->add_flag("--force", tr_force, "skip the regime precondition");

    // ---- slowdown ----------------------------------------------------------
    auto* c_slow = app.add_subcommand("slowdown", "X_n / n^{s'} quantiles");
    add_common(c_slow);
    std::string sl_ngrid = "1024,2048,4096,8192,16384,32768,65536";
    std::string sl_sgrid = "0.5,0.7,0.9,1.0";
    std::int64_t sl_walkers = 2000;
    double sl_sref = 0.0;
    bool sl_has_sref = false, sl_force = false;
    c_slow->add_option("--n-grid", sl_ngrid, "comma-separated horizons");
    c_slow->add_option("--s-prime", sl_sgrid, "comma-separated exponents");
    c_slow->add_option("--walkers", sl_walkers, "walkers per n");
    c_slow->add_option("--s-ref", sl_sref, "known slowdown exponent (skips find-s)")
        ->each([&](const std::string&) { sl_has_sref = true; });
    c_slow->add_flag("--force", sl_force, "skip the regime precondition");

    // ---- tail --------------------------------------------------------------
    auto* c_tail = app.add_subcommand("tail", "annealed P_0(X_n > n^{s'})");
    add_common(c_tail);
    std::int64_t tl_n = 65536, tl_walkers = 2000;
    double tl_sprime = 0.9;
    c_tail->add_option("--n", tl_n, "horizon");
    c_tail->add_option("--s-prime", tl_sprime, "exponent");
    c_tail->add_option("--walkers", tl_walkers, "walker count");

    CLI11_PARSE(app, argc, argv);

    const int workers = resolve_workers(common.workers);

    // ---- validate ----------------------------------------------------------
    if (*c_validate) {
        std::ifstream in(common.spec_path, std::ios::binary);
        if (!in) throw InvalidInput("cannot open spec file: " + common.spec_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        EnvironmentSpec spec;
        try {
            spec = spec_from_json(buf.str());
        } catch (const InvalidInput& e) {
            std::cout << "invalid: " << e.what() << "\n";
            return 1;
        }
        std::cout << "valid: L=" << spec.L << " kappa=" << spec.kappa << " atoms="
                  << spec.atoms.size() << " [" << elapsed() << "]\n";
        return 0;
    }

    // ---- estimate-gamma ----------------------------------------------------
    if (*c_gamma) {
        const auto spec = load_spec_file(common.spec_path);
        const std::uint64_t seed = common.resolve_seed();
        LyapunovEstimate est;
        if (use_exact(g_method, spec, g_n)) {
            est = {exact_gamma_enumeration(spec, g_n), 0.0, g_n, 0,
                   "exact-enumeration"};
        } else {
            est = estimate_gamma(spec, g_n, g_replicas, seed, workers);
        }
        ordered_json config;
        config["spec"] = common.spec_path;
        config["n"] = g_n;
        config["replicas"] = g_replicas;
        config["method"] = g_method;
        auto j = report::envelope("estimate-gamma", config, seed);
        j["results"] = gamma_json(est);
        report::write_json_file(common.out_file("estimate-gamma.json").string(), j);
        std::cout << "estimate-gamma: " << report::fmt(est.value) << " +- "
                  << report::fmt(est.std_error) << " (" << est.method << ") ["
                  << elapsed() << "]\n";
        return 0;
    }

    // ---- moment-curve ------------------------------------------------------
    if (*c_curve) {
        const auto spec = load_spec_file(common.spec_path);
        const std::uint64_t seed = common.resolve_seed();
        const std::vector<double> grid = mc_ulist.empty()
                                             ? build_grid(mc_umin, mc_umax, mc_ustep)
                                             : parse_double_list(mc_ulist);
        MomentCurve curve;
        if (use_exact(mc_method, spec, mc_n))
            curve = exact_F_curve(spec, grid, mc_n);
        else
            curve = estimate_F(spec, grid, mc_n, mc_replicas, seed, workers);
        ordered_json config;
        config["spec"] = common.spec_path;
        config["n"] = mc_n;
        config["replicas"] = mc_replicas;
        config["method"] = mc_method;
        config["u_grid"] = grid;
        auto j = report::envelope("moment-curve", config, seed);
        j["results"] = curve_json(curve);
        report::write_json_file(common.out_file("moment-curve.json").string(), j);
        write_moment_curve_csv(common.out_file("moment_curve.csv"), curve);
        int heavy = 0;
        for (const auto& pt : curve.points) heavy += pt.heavy_tail ? 1 : 0;
        std::cout << "moment-curve: " << curve.points.size() << " points ("
                  << curve.method << (heavy ? ", " + std::to_string(heavy) +
                                                  " heavy-tail warnings"
                                            : "")
                  << ") [" << elapsed() << "]\n";
        return 0;
    }

    // ---- rate-function -----------------------------------------------------
    if (*c_rate) {
        const std::uint64_t seed = common.resolve_seed();
        MomentCurve curve = read_moment_curve_csv(r_curve_path);
        std::vector<double> xs;
        if (!r_xlist.empty()) {
            xs = parse_double_list(r_xlist);
        } else {
            // default grid: interior of the repaired slope range
            std::vector<double> us, fsv;
            for (const auto& pt : curve.points) {
                us.push_back(pt.u);
                fsv.push_back(pt.f_hat);
            }
            const auto rep = convex_minorant(us, fsv);
            const double lo = (rep[1] - rep[0]) / (us[1] - us[0]);
            const auto nn = us.size();
            const double hi =
                (rep[nn - 1] - rep[nn - 2]) / (us[nn - 1] - us[nn - 2]);
            const double pad = 0.02 * (hi - lo);
            for (int i = 0; i <= 40; ++i)
                xs.push_back(lo + pad +
                             (hi - lo - 2 * pad) * static_cast<double>(i) / 40.0);
        }
        const RateFunction rf = legendre_rate(curve, xs);
        ordered_json config;
        config["curve"] = r_curve_path;
        config["x_grid"] = xs;
        auto j = report::envelope("rate-function", config, seed);
        j["results"]["points"] = ordered_json::array();
        for (const auto& pt : rf.points) {
            ordered_json p;
            p["x"] = pt.x;
            p["rate"] = pt.rate;
            p["argmax_u"] = pt.argmax_u;
            j["results"]["points"].push_back(p);
        }
        report::write_json_file(common.out_file("rate-function.json").string(), j);
        std::ofstream out(common.out_file("rate_function.csv"), std::ios::binary);
        report::Csv csv(out, {"x", "I", "argmax_u"});
        for (const auto& pt : rf.points)
            csv.row({report::fmt(pt.x), report::fmt(pt.rate), report::fmt(pt.argmax_u)});
        std::cout << "rate-function: " << rf.points.size() << " points [" << elapsed()
                  << "]\n";
        return 0;
    }

    // ---- find-s ------------------------------------------------------------
    if (*c_finds) {
        const auto spec = load_spec_file(common.spec_path);
        const std::uint64_t seed = common.resolve_seed();
        const bool exact = use_exact(fs_method, spec, fs_n);

        LyapunovEstimate gamma;
        if (exact)
            gamma = {exact_gamma_enumeration(spec, fs_n), 0.0, fs_n, 0,
                     "exact-enumeration"};
        else
            gamma = estimate_gamma(spec, std::max<std::int64_t>(fs_n, 2000), 64,
                                   derive(seed, 0xa1), workers);

        RootSide side;
        if (fs_side == "auto")
            side = gamma.value < 0.0 ? RootSide::Positive : RootSide::Negative;
        else
            side = fs_side == "positive" ? RootSide::Positive : RootSide::Negative;

        RootOptions opts;
        opts.tol = fs_tol;
        opts.base_replicas = fs_replicas;
        opts.replica_budget = fs_budget;
        if (!fs_curve.empty()) {
            // narrow the bracket from a cached curve's repaired sign change
            MomentCurve cached = read_moment_curve_csv(fs_curve);
            std::vector<double> us, fsv;
            for (const auto& pt : cached.points) {
                us.push_back(pt.u);
                fsv.push_back(pt.f_hat);
            }
            const auto rep = convex_minorant(us, fsv);
            const double lo_u = side == RootSide::Positive ? 0.0 : -1.0;
            const double hi_u = side == RootSide::Positive ? 1.0 : 0.0;
            for (std::size_t i = 1; i < us.size(); ++i) {
                if (us[i - 1] <= lo_u || us[i] >= hi_u) continue;
                const bool crosses = side == RootSide::Positive
                                         ? rep[i - 1] <= 0.0 && rep[i] > 0.0
                                         : rep[i - 1] > 0.0 && rep[i] <= 0.0;
                if (crosses) {
                    opts.bracket = {{us[i - 1], us[i]}};
                    break;
                }
            }
        }

        const FEvaluator eval = exact ? make_exact_evaluator(spec, fs_n)
                                      : make_mc_evaluator(spec, fs_n, seed, workers);
        const double s = find_root_s(eval, side, gamma, opts);

        ordered_json config;
        config["spec"] = common.spec_path;
        config["n"] = fs_n;
        config["method"] = fs_method;
        config["side"] = fs_side;
        config["tol"] = fs_tol;
        if (!fs_curve.empty()) config["curve"] = fs_curve;
        auto j = report::envelope("find-s", config, seed);
        j["results"]["s"] = s;
        j["results"]["side"] = side == RootSide::Positive ? "positive" : "negative";
        j["results"]["method"] = exact ? "exact-enumeration" : "monte-carlo";
        j["results"]["gamma"] = gamma_json(gamma);
        report::write_json_file(common.out_file("find-s.json").string(), j);
        std::cout << "find-s: s = " << report::fmt(s) << " ("
                  << (exact ? "exact-enumeration" : "monte-carlo") << ") ["
                  << elapsed() << "]\n";
        return 0;
    }

    // ---- classify ----------------------------------------------------------
    if (*c_classify) {
        const auto spec = load_spec_file(common.spec_path);
        const std::uint64_t seed = common.resolve_seed();
        const bool exact = use_exact(cl_method, spec, cl_n);
        const RegimeReport rep = classify_spec(spec, cl_n, cl_replicas, seed, workers,
                                               exact);
        ordered_json config;
        config["spec"] = common.spec_path;
        config["n"] = cl_n;
        config["replicas"] = cl_replicas;
        config["method"] = cl_method;
        auto j = report::envelope("classify", config, seed);
        j["results"]["regime"] = regime_name(rep.regime);
        j["results"]["gamma"] = gamma_json(rep.gamma);
        j["results"]["F1"] = feval_json(rep.f1);
        j["results"]["Fm1"] = feval_json(rep.fm1);
        j["results"]["z_gamma"] = report::json_number(rep.z_gamma);
        j["results"]["z_decisive"] = report::json_number(rep.z_decisive);
        j["results"]["inconclusive"] = rep.inconclusive;
        report::write_json_file(common.out_file("classify.json").string(), j);
        std::cout << "classify: " << regime_name(rep.regime) << " [" << elapsed()
                  << "]\n";
        return 0;
    }

    // ---- simulate ----------------------------------------------------------
    if (*c_sim) {
        const auto spec = load_spec_file(common.spec_path);
        const std::uint64_t seed = common.resolve_seed();
        const BatchMode mode =
            sim_mode == "annealed" ? BatchMode::Annealed : BatchMode::Quenched;
        const auto finals =
            batch_final_positions(spec, sim_n, sim_walkers, seed, mode, workers);

        std::ofstream out(common.out_file("batch.csv"), std::ios::binary);
        report::Csv csv(out, {"walker", "final_position", "steps", "stop_reason"});
        for (std::size_t w = 0; w < finals.size(); ++w)
            csv.row({report::fmt(static_cast<std::int64_t>(w)), report::fmt(finals[w]),
                     report::fmt(sim_n), "completed"});

        if (sim_record) {
            // walker 0's path under exactly the batch substreams
            const std::uint64_t env_stream = derive(seed, kStreamEnv);
            const std::uint64_t walk_stream = derive(seed, kStreamWalk);
            const auto env = EnvironmentWindow::lazy(spec, derive(env_stream, 0));
            SplitMix64 rng(derive(walk_stream, 0));
            const std::int64_t stride = std::max<std::int64_t>(1, (sim_n + 1023) / 1024);
            std::ofstream tout(common.out_file("trajectory.csv"), std::ios::binary);
            report::Csv tcsv(tout, {"step", "position"});
            std::int64_t x = 0;
            tcsv.row({"0", "0"});
            for (std::int64_t k = 1; k <= sim_n; ++k) {
                x = step(EnvView(env), x, rng);
                if (k % stride == 0 || k == sim_n)
                    tcsv.row({report::fmt(k), report::fmt(x)});
            }
        }

        long double mean = 0.0L;
        for (auto x : finals) mean += static_cast<long double>(x);
        mean /= static_cast<long double>(finals.size());
        ordered_json config;
        config["spec"] = common.spec_path;
        config["n"] = sim_n;
        config["walkers"] = sim_walkers;
        config["mode"] = sim_mode;
        auto j = report::envelope("simulate", config, seed);
        j["results"]["mean_final"] = static_cast<double>(mean);
        report::write_json_file(common.out_file("simulate.json").string(), j);
        std::cout << "simulate: " << sim_walkers << " walkers, mean final = "
                  << report::fmt(static_cast<double>(mean)) << " [" << elapsed()
                  << "]\n";
        return 0;
    }

    // ---- exit-prob ---------------------------------------------------------
    if (*c_exit) {
        const auto spec = load_spec_file(common.spec_path);
        const std::uint64_t seed = common.resolve_seed();
        if (!(ex_a < ex_k && ex_k < ex_b))
            throw InvalidInput("exit-prob: need a < k < b");
        const auto env = sample_environment(spec, ex_a - spec.L + 1, ex_b,
                                            derive(seed, kStreamEnv));
        EnvView view(env);
        const double cm = exit_prob_closed(view, ex_k, ex_a, ex_b, ExitSide::Minus);
        const double cp = exit_prob_closed(view, ex_k, ex_a, ex_b, ExitSide::Plus);
        const double lm = exit_prob_linear(view, ex_k, ex_a, ex_b, ExitSide::Minus);
        const double lp = exit_prob_linear(view, ex_k, ex_a, ex_b, ExitSide::Plus);
        ordered_json config;
        config["spec"] = common.spec_path;
        config["k"] = ex_k;
        config["a"] = ex_a;
        config["b"] = ex_b;
        auto j = report::envelope("exit-prob", config, seed);
        j["results"]["closed_minus"] = cm;
        j["results"]["closed_plus"] = cp;
        j["results"]["linear_minus"] = lm;
        j["results"]["linear_plus"] = lp;
        j["results"]["max_abs_diff"] =
            std::max(std::abs(cm - lm), std::abs(cp - lp));
        report::write_json_file(common.out_file("exit-prob.json").string(), j);
        if (ex_dump) {
            const auto ld = log_delta_prefix(view, ex_a + 1, ex_b - 1);
            std::ofstream out(common.out_file("delta_table.csv"), std::ios::binary);
            report::Csv csv(out, {"j", "log_delta"});
            for (std::int64_t idx = 0; idx < static_cast<std::int64_t>(ld.size()); ++idx)
                csv.row({report::fmt(ex_a + idx),
                         report::fmt(ld[static_cast<std::size_t>(idx)])});
        }
        std::cout << "exit-prob: minus = " << report::fmt(cm)
                  << " (linear " << report::fmt(lm) << ") [" << elapsed() << "]\n";
        return 0;
    }

    // ---- survival ----------------------------------------------------------
    if (*c_surv) {
        const auto spec = load_spec_file(common.spec_path);
        const std::uint64_t seed = common.resolve_seed();
        const std::uint64_t env_stream = derive(seed, kStreamEnv);
        std::ofstream out(common.out_file("survival.csv"), std::ios::binary);
        report::Csv csv(out, {"env_id", "M", "N", "R_plus", "R_minus", "gamma_U",
                              "bound6", "bound7", "survival_n", "survival_bound"});
        double last = 0.0;
        for (std::int64_t e = 0; e < sv_envs; ++e) {
            const auto env = sample_environment(
                spec, -(sv_N + 1), sv_M + 1, derive(env_stream, static_cast<std::uint64_t>(e)));
            EnvView view(env);
            const auto t = trap_quantities(view, sv_N, sv_M);
            const double surv = survival_exact(view, sv_N, sv_M, sv_n);
            const double bound = std::pow(1.0 - t.gamma_u, static_cast<double>(sv_n));
            last = surv;
            csv.row({report::fmt(e), report::fmt(t.M), report::fmt(t.N),
                     report::fmt(t.r_plus), report::fmt(t.r_minus),
                     report::fmt(t.gamma_u), report::fmt(t.bound6),
                     report::fmt(t.bound7), report::fmt(surv), report::fmt(bound)});
        }
        ordered_json config;
        config["spec"] = common.spec_path;
        config["N"] = sv_N;
        config["M"] = sv_M;
        config["n"] = sv_n;
        config["envs"] = sv_envs;
        auto j = report::envelope("survival", config, seed);
        j["results"]["rows"] = sv_envs;
        report::write_json_file(common.out_file("survival.json").string(), j);
        std::cout << "survival: " << sv_envs << " environment(s), last = "
                  << report::fmt(last) << " [" << elapsed() << "]\n";
        return 0;
    }

    // ---- trap-scan ---------------------------------------------------------
    if (*c_trap) {
        const auto spec = load_spec_file(common.spec_path);
        const std::uint64_t seed = common.resolve_seed();
        TrapScanOptions opts;
        if (tr_has_K) opts.K = tr_K;
        if (tr_has_sref) opts.s_reference = tr_sref;
        opts.env_samples = tr_samples;
        opts.force = tr_force;
        const auto grid = parse_int_list(tr_ngrid);
        const auto rep = trap_frequency_scan(spec, grid, opts, seed, workers);

        std::ofstream out(common.out_file("trap_scan.csv"), std::ios::binary);
        report::Csv csv(out, {"n", "s_prime", "statistic", "value", "std_err"});
        for (const auto& row : rep.rows) {
            csv.row({report::fmt(row.n), "", "q_hat", report::fmt(row.q_hat),
                     report::fmt(row.std_error)});
            csv.row({report::fmt(row.n), "", "window", report::fmt(row.window), ""});
            csv.row({report::fmt(row.n), "", "successes", report::fmt(row.successes),
                     ""});
        }
        csv.row({"", "", "slope", report::fmt(rep.slope),
                 report::fmt(rep.slope_std_error)});

        ordered_json config;
        config["spec"] = common.spec_path;
        config["n_grid"] = grid;
        config["env_samples"] = tr_samples;
        if (tr_has_K) config["K"] = tr_K;
        if (tr_has_sref) config["s_ref"] = tr_sref;
        config["force"] = tr_force;
        auto j = report::envelope("trap-scan", config, seed);
        j["results"]["k_used"] = rep.k_used;
        j["results"]["k_auto"] = rep.k_auto;
        j["results"]["threshold"] = rep.threshold;
        j["results"]["regime"] = rep.regime;
        j["results"]["rows"] = ordered_json::array();
        for (const auto& row : rep.rows) {
            ordered_json r;
            r["n"] = row.n;
            r["window"] = row.window;
            r["samples"] = row.samples;
            r["successes"] = row.successes;
            r["q_hat"] = row.q_hat;
            r["std_error"] = row.std_error;
            j["results"]["rows"].push_back(r);
        }
        j["results"]["slope"] = report::json_number(rep.slope);
        j["results"]["slope_std_error"] = report::json_number(rep.slope_std_error);
        j["results"]["slope_valid"] = rep.slope_valid;
        if (rep.s_reference) {
            j["results"]["s_reference"] = *rep.s_reference;
            j["results"]["slope_in_band"] = rep.slope_in_band;
        }
        j["results"]["flags"] = rep.flags;
        report::write_json_file(common.out_file("trap-scan.json").string(), j);
        std::cout << "trap-scan: slope = " << report::fmt(rep.slope) << " +- "
                  << report::fmt(rep.slope_std_error) << (rep.flags.empty() ? "" : " (flagged)")
                  << " [" << elapsed() << "]\n";
        return 0;
    }

    // ---- slowdown ----------------------------------------------------------
    if (*c_slow) {
        const auto spec = load_spec_file(common.spec_path);
        const std::uint64_t seed = common.resolve_seed();
        SlowdownOptions opts;
        if (sl_has_sref) opts.s_reference = sl_sref;
        opts.force = sl_force;
        const auto n_grid = parse_int_list(sl_ngrid);
        const auto s_grid = parse_double_list(sl_sgrid);
        const auto rep =
            slowdown_curve(spec, s_grid, n_grid, sl_walkers, opts, seed, workers);

        std::ofstream out(common.out_file("slowdown.csv"), std::ios::binary);
        report::Csv csv(out, {"n", "s_prime", "statistic", "value", "std_err"});
        for (const auto& c : rep.cells) {
            csv.row({report::fmt(c.n), report::fmt(c.s_prime), "median",
                     report::fmt(c.median), report::fmt(c.median_std_error)});
            csv.row({report::fmt(c.n), report::fmt(c.s_prime), "upper_quartile",
                     report::fmt(c.upper_quartile), ""});
        }

        ordered_json config;
        config["spec"] = common.spec_path;
        config["n_grid"] = n_grid;
        config["s_prime_grid"] = s_grid;
        config["walkers"] = sl_walkers;
        if (sl_has_sref) config["s_ref"] = sl_sref;
        config["force"] = sl_force;
        auto j = report::envelope("slowdown", config, seed);
        j["results"]["s"] = report::json_number(rep.s);
        j["results"]["mirrored"] = rep.mirrored;
        j["results"]["regime"] = rep.regime;
        j["results"]["walkers"] = rep.walkers;
        j["results"]["cells"] = ordered_json::array();
        for (const auto& c : rep.cells) {
            ordered_json r;
            r["n"] = c.n;
            r["s_prime"] = c.s_prime;
            r["median"] = c.median;
            r["upper_quartile"] = c.upper_quartile;
            r["median_std_error"] = c.median_std_error;
            j["results"]["cells"].push_back(r);
        }
        report::write_json_file(common.out_file("slowdown.json").string(), j);
        std::cout << "slowdown: " << rep.cells.size() << " cells, s = "
                  << report::fmt(rep.s) << " [" << elapsed() << "]\n";
        return 0;
    }

    // ---- tail --------------------------------------------------------------
    if (*c_tail) {
        const auto spec = load_spec_file(common.spec_path);
        const std::uint64_t seed = common.resolve_seed();
        const auto est = annealed_tail(spec, tl_n, tl_sprime, tl_walkers, seed, workers);
        ordered_json config;
        config["spec"] = common.spec_path;
        config["n"] = tl_n;
        config["s_prime"] = tl_sprime;
        config["walkers"] = tl_walkers;
        auto j = report::envelope("tail", config, seed);
        j["results"]["threshold"] = est.threshold;
        j["results"]["p_hat"] = est.p_hat;
        j["results"]["std_error"] = est.std_error;
        report::write_json_file(common.out_file("tail.json").string(), j);
        std::cout << "tail: P(X_n > n^s') = " << report::fmt(est.p_hat) << " +- "
                  << report::fmt(est.std_error) << " [" << elapsed() << "]\n";
        return 0;
    }

    return 0;
}

}  // namespace
