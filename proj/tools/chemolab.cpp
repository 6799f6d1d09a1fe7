// chemolab: simulate, analyze and sweep delayed chemostat / logistic models,
// and run the seeded verification suites.

#include <atomic>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <chemolab/chemolab.hpp>

namespace {

using namespace chemolab;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

ParsedConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    return ParsedConfig::parse(in);
}

std::string scenario_echo(const ScenarioConfig& sc) {
    const Model& m = sc.model;
    std::string out = "scenario:\n";
    out += std::string("  family: ") + family_name(m.family()) + "\n";
    if (sc.dimensional) {
        const DimensionalParams& d = *sc.dimensional;
        out += "  dimensional: C=" + fmt_double(d.C) + " D=" + fmt_double(d.D) +
               " A=" + fmt_double(d.A) + " B=" + fmt_double(d.B) +
               " M=" + fmt_double(d.M) + " R=" + fmt_double(d.R) + "\n";
    }
    switch (m.family()) {
        case ModelFamily::Wright:
            out += "  rho: " + fmt_double(m.rho()) + "\n";
            break;
        case ModelFamily::Linear:
            out += "  a_lin: " + fmt_double(m.lin_a()) + " b_lin: " + fmt_double(m.lin_b()) +
                   " r: " + fmt_double(m.delay()) + "\n";
            break;
        default: {
            const DimensionlessParams& p = m.params();
            out += "  dimensionless: a=" + fmt_double(p.a) + " b=" + fmt_double(p.b) +
                   " m=" + fmt_double(p.m) + " r=" + fmt_double(p.r) + "\n";
            break;
        }
    }
    out += "  horizon: " + fmt_double(sc.horizon) + "\n";
    if (!sc.output_path.empty()) out += "  output: " + sc.output_path + "\n";
    return out;
}

std::vector<double> output_times(const ScenarioConfig& sc, const Trajectory& traj) {
    const double stride = sc.stride > 0 ? sc.stride : sc.horizon / 1000.0;
    std::vector<double> times;
    for (std::size_t k = 0; static_cast<double>(k) * stride < sc.horizon; ++k)
        times.push_back(static_cast<double>(k) * stride);
    for (double bp : traj.breakpoints())
        if (bp <= sc.horizon) times.push_back(bp);
    times.push_back(sc.horizon);
    std::sort(times.begin(), times.end());
    std::vector<double> unique_times;
    const double eps = 1e-12 * std::max(1.0, sc.horizon);
    for (double t : times)
        if (unique_times.empty() || t - unique_times.back() > eps) unique_times.push_back(t);
    return unique_times;
}

std::string trajectory_csv(const ScenarioConfig& sc, const Trajectory& traj) {
    std::string csv = traj.dim() == 2 ? "t,s,x\n" : "t,x\n";
    for (double t : output_times(sc, traj)) {
        const StateVec v = traj.eval(std::min(t, traj.t_end()));
        csv += fmt_double(t);
        for (std::size_t c = 0; c < traj.dim(); ++c) csv += "," + fmt_double(v[c]);
        csv += "\n";
    }
    return csv;
}

// least-squares slope of ln|V(t)|, fitted from t = r onward where the
// V' = -V identity holds for arbitrary initial data; expected slope -1
std::string fitted_v_decay(const Trajectory& traj, const DimensionlessParams& p,
                           double horizon, double v0) {
    const double t_min = std::min(p.r, horizon);
    const double t_max = std::min(horizon, t_min + 10.0);
    if (!(t_max > t_min)) return "na";
    const double floor = 1e-13 * (1.0 + std::abs(v0));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int i = 0; i <= 200; ++i) {
        const double t = t_min + (t_max - t_min) * (static_cast<double>(i) / 200.0);
        const double v = lyapunov_V(traj, p, t);
        if (std::abs(v) <= floor) break;
        const double y = std::log(std::abs(v));
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        ++n;
    }
    if (n < 2) return "na";
    const double denom = n * sxx - sx * sx;
    if (denom == 0) return "na";
    return fmt_double((n * sxy - sx * sy) / denom);
}

int cmd_simulate(const std::string& cfg_path) {
    ScenarioConfig sc = [&] {
        ParsedConfig cfg = parse_config_file(cfg_path);
        ScenarioConfig loaded = load_scenario(cfg);
        cfg.reject_unused();
        return loaded;
    }();
    if (sc.output_path.empty())
        throw config_error("simulate requires [run] output");

    std::cout << scenario_echo(sc);
    const Trajectory traj = integrate(sc.model, sc.history, sc.horizon, sc.solver);
    write_file_atomic(sc.output_path, trajectory_csv(sc, traj));

    const StateVec last = traj.eval(traj.t_end());
    std::cout << "result:\n  final_t: " << fmt_double(sc.horizon) << "\n";
    if (traj.dim() == 2)
        std::cout << "  final_s: " << fmt_double(last[0]) << "\n  final_x: "
                  << fmt_double(last[1]) << "\n";
    else
        std::cout << "  final_x: " << fmt_double(last[0]) << "\n";
    std::cout << "  steps_accepted: " << traj.stats().accepted
              << "\n  steps_rejected: " << traj.stats().rejected << "\n";

    if (sc.model.family() == ModelFamily::Chemostat2D) {
        const DimensionlessParams& p = sc.model.params();
        const double v0 = lyapunov_V(traj, p, 0.0);
        std::cout << "summary:\n  V0: " << fmt_double(v0) << "\n  V_end: "
                  << fmt_double(lyapunov_V(traj, p, sc.horizon)) << "\n  V_decay_rate: "
                  << fitted_v_decay(traj, p, sc.horizon, v0) << "\n";
    }
    return kExitOk;
}

void report_equilibrium(const Model& display_model, const Model& scalar_model,
                        Equilibrium::Kind kind, std::string& out) {
    std::optional<Equilibrium> shown, analyzed;
    for (const Equilibrium& eq : equilibria(display_model))
        if (eq.kind == kind) shown = eq;
    for (const Equilibrium& eq : equilibria(scalar_model))
        if (eq.kind == kind) analyzed = eq;
    const char* kind_name = kind == Equilibrium::Kind::Washout ? "washout" : "survival";
    if (!analyzed) {
        out += std::string("equilibrium: ") + kind_name + "\n  exists: false\n";
        return;
    }
    out += std::string("equilibrium: ") + kind_name + "\n  exists: true\n";
    out += "  value:";
    for (std::size_t c = 0; c < shown->value.size(); ++c)
        out += " " + fmt_double(shown->value[c]);
    out += "\n";

    const Linearization lin = linearize(scalar_model, *analyzed);
    out += "  linearization: a_lin=" + fmt_double(lin.a_lin) +
           " b_lin=" + fmt_double(lin.b_lin) + " r=" + fmt_double(lin.delay_r) + "\n";
    const StabilityReport rep = classify(lin);
    out += std::string("  case: ") + stability_case_letter(rep.stability_case) + "\n";
    if (rep.critical_delay) {
        out += "  omega: " + fmt_double(*rep.omega) + "\n";
        out += "  critical_delay: " + fmt_double(*rep.critical_delay) + "\n";
    }
    out += "  leading_root: " + fmt_complex(rep.leading_root) + "\n";
    const double re = rep.leading_root.real();
    if (re < -1e-9)
        out += "  local: stable\n";
    else if (re > 1e-9)
        out += "  local: unstable\n";
    else
        out += "  local: marginal\n";
}

int cmd_analyze(const std::string& cfg_path) {
    ScenarioConfig sc = [&] {
        ParsedConfig cfg = parse_config_file(cfg_path);
        ScenarioConfig loaded = load_scenario(cfg);
        cfg.reject_unused();
        return loaded;
    }();

    std::cout << scenario_echo(sc);
    std::string out = "analysis:\n";
    Model scalar_model = sc.model;
    if (sc.model.family() == ModelFamily::Chemostat2D) {
        scalar_model = Model::hyperbolic(sc.model.params());
        out += "note: planar chemostat analyzed via its hyperbolic factor\n";
    }
    std::string body;
    report_equilibrium(sc.model, scalar_model, Equilibrium::Kind::Washout, body);
    report_equilibrium(sc.model, scalar_model, Equilibrium::Kind::Survival, body);
    std::cout << out << body;
    return kExitOk;
}

std::size_t sweep_thread_count(std::size_t points) {
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CHEMOLAB_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end && *end == '\0' && cap >= 1) n = std::min<std::size_t>(n, cap);
    }
    return std::min(n, points);
}

int cmd_sweep(const std::string& cfg_path) {
    SweepConfig sw = [&] {
        ParsedConfig cfg = parse_config_file(cfg_path);
        SweepConfig loaded = load_sweep(cfg);
        cfg.reject_unused();
        return loaded;
    }();
    if (sw.output_path.empty() && sw.base.output_path.empty())
        throw config_error("sweep requires an output path ([sweep] output or [run] output)");
    const std::string out_path = sw.output_path.empty() ? sw.base.output_path : sw.output_path;

    std::cout << scenario_echo(sw.base);
    std::cout << "sweep:\n  parameter: " << sw.parameter << "\n  points: "
              << sw.values.size() << "\n";

    std::vector<std::string> rows(sw.values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= sw.values.size()) return;
            const double value = sw.values[i];
            std::string verdict, amplitude, period, re_root;
            try {
                const Model model = apply_sweep_parameter(sw.base.model, sw.parameter, value);
                std::optional<Linearization> lin = survival_linearization(model);
                if (!lin) lin = washout_linearization(model);
                try {
                    re_root = fmt_double(leading_root(*lin).real());
                } catch (const std::exception&) {
                    re_root.clear();
                }
                if (sw.want_verdict) {
                    const History phi = sw.base.history_spec.build(model.delay());
                    const AsymptoticVerdict v =
                        asymptotic_state(model, phi, sw.base.horizon, 1e-4, sw.base.solver);
                    verdict = asymptotic_state_name(v.state);
                    if (v.state == AsymptoticState::Periodic) {
                        amplitude = fmt_double(v.amplitude);
                        period = fmt_double(v.period);
                    }
                }
            } catch (const divergence_error&) {
                verdict = "diverged";
            } catch (const std::exception&) {
                verdict = "error";
            }
            rows[i] = fmt_double(value) + "," + verdict + "," + amplitude + "," + period +
                      "," + re_root + "\n";
        }
    };

    const std::size_t nthreads = sweep_thread_count(sw.values.size());
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::string csv = "param,verdict,amplitude,period,re_leading_root\n";
    for (const std::string& row : rows) csv += row;
    write_file_atomic(out_path, csv);
    std::cout << "result:\n  rows: " << rows.size() << "\n  output: " << out_path << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& out_path) {
    const std::vector<PropertyResult> results = run_verify_suite(suite, seed);
    const std::string report = format_verify_report(suite, seed, results);
    std::cout << report;
    if (!out_path.empty()) write_file_atomic(out_path, report);
    return verify_all_passed(results) ? kExitOk : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"delayed chemostat / delayed logistic laboratory"};
    app.require_subcommand(1);

    std::string sim_cfg, ana_cfg, sweep_cfg;
    std::string verify_suite, verify_out;
    std::uint64_t verify_seed = 1;

    CLI::App* sim = app.add_subcommand("simulate", "integrate a scenario and write a CSV");
    sim->add_option("config", sim_cfg, "scenario config file")->required();
    CLI::App* ana = app.add_subcommand("analyze", "equilibria and stability report");
    ana->add_option("config", ana_cfg, "scenario config file")->required();
    CLI::App* swp = app.add_subcommand("sweep", "parameter sweep with per-point verdicts");
    swp->add_option("config", sweep_cfg, "sweep config file")->required();
    CLI::App* ver = app.add_subcommand("verify", "run a seeded property suite");
    ver->add_option("suite", verify_suite,
                    "lyapunov | monotone | dichotomy | bounds | wright | all")->required();
    ver->add_option("--seed", verify_seed, "PRNG seed (default 1)");
    ver->add_option("--out", verify_out, "also write the report to this path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_cfg);
        if (ana->parsed()) return cmd_analyze(ana_cfg);
        if (swp->parsed()) return cmd_sweep(sweep_cfg);
        if (ver->parsed()) return cmd_verify(verify_suite, verify_seed, verify_out);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const divergence_error& e) {
        std::cerr << "solver diverged: " << e.what()
                  << " (last valid t = " << chemolab::fmt_double(e.last_valid_t()) << ")\n";
        return kExitDiverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
