// Command-line front end: simulate / verify / twin / sweep.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 a verification
// threshold was exceeded, 3 the integration blew up.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nemaq/config.hpp"
#include "nemaq/dynamics.hpp"
#include "nemaq/snapshot.hpp"
#include "nemaq/spectral.hpp"
#include "nemaq/verification.hpp"

namespace {

using namespace nemaq;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitThreshold = 2;
constexpr int kExitBlowup = 3;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Experiment {
    ExperimentConfig cfg;
    std::string fingerprint;
    unsigned seed = 0;  // 0 for deterministic initial data
};

std::optional<Experiment> load_experiment(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) {
        std::cerr << "error: cannot read config file '" << path << "'\n";
        return std::nullopt;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    Experiment ex;
    try {
        ex.cfg = parse_config(ss.str());
    } catch (const ConfigError& e) {
        std::cerr << "error: invalid configuration '" << path << "':\n";
        for (const std::string& v : e.violations()) std::cerr << "  " << v << "\n";
        return std::nullopt;
    }
    ex.fingerprint = config_fingerprint(ss.str());
    if (ex.cfg.initial.kind == InitialKind::random_field) ex.seed = ex.cfg.initial.seed;
    return ex;
}

std::string repro_line(const Experiment& ex, const std::string& extra = "") {
    std::string line = std::string("# nemaq version=") + kVersion +
                       " config_hash=" + ex.fingerprint + " seed=" + std::to_string(ex.seed);
    if (!extra.empty()) line += " " + extra;
    return line;
}

bool write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out.good()) {
        std::cerr << "error: cannot write '" << path.string() << "'\n";
        return false;
    }
    return true;
}

bool prepare_output_dir(const ExperimentConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output.directory, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory '" << cfg.output.directory
                  << "': " << ec.message() << "\n";
        return false;
    }
    return true;
}

int run_simulate(const Experiment& ex) {
    const ExperimentConfig& cfg = ex.cfg;
    if (!prepare_output_dir(cfg)) return kExitUsage;
    SpectralGrid g(cfg.n, cfg.box_length);
    SimState initial;
    try {
        initial = build_initial_state(g, cfg.initial);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    const std::filesystem::path dir(cfg.output.directory);
    std::vector<double> times;
    std::vector<EnergyReport> rows;
    int snap_index = 0;
    RunSinks sinks;
    sinks.on_report = [&](const SimState& s, const EnergyReport& r) {
        times.push_back(s.time);
        rows.push_back(r);
        if (cfg.output.snapshots) {
            char name[32];
            std::snprintf(name, sizeof name, "state_%06d.qtf", snap_index++);
            save_state((dir / name).string(), g, s);
        }
    };
    const RunSummary sum = run(g, std::move(initial), cfg.params, cfg.solver, sinks);

    std::cout << repro_line(ex) << "\n";
    if (cfg.output.csv) {
        std::string csv = repro_line(ex) + "\n";
        csv +=
            "t,kinetic,elastic_L1,elastic_L23,elastic_L4_cross,bulk,total,"
            "diss_viscous,diss_rotational,balance_residual\n";
        for (std::size_t m = 0; m < rows.size(); ++m) {
            const EnergyReport& r = rows[m];
            double residual = 0.0;
            if (m > 0) {
                const EnergyReport& pr = rows[m - 1];
                const double span = times[m] - times[m - 1];
                const double d0 = pr.dissipation_viscous + pr.dissipation_rotational;
                const double d1 = r.dissipation_viscous + r.dissipation_rotational;
                residual = (r.total - pr.total) / span + 0.5 * (d0 + d1);
            }
            csv += fmt(times[m]) + "," + fmt(r.kinetic) + "," + fmt(r.elastic_L1) + "," +
                   fmt(r.elastic_L23) + "," + fmt(r.elastic_L4_cross) + "," + fmt(r.bulk) + "," +
                   fmt(r.total) + "," + fmt(r.dissipation_viscous) + "," +
                   fmt(r.dissipation_rotational) + "," + fmt(residual) + "\n";
        }
        if (!write_text(dir / "energy.csv", csv)) return kExitUsage;
    }
    std::cout << "rows=" << rows.size() << " steps=" << sum.steps
              << " final_t=" << fmt(sum.final_state.time)
              << " total_energy=" << fmt(rows.empty() ? 0.0 : rows.back().total)
              << " dissipation_integral=" << fmt(sum.dissipation_integral) << "\n";
    if (sum.blew_up) {
        std::cerr << "blow-up halt at t=" << fmt(sum.blowup_time) << "\n";
        return kExitBlowup;
    }
    return kExitOk;
}

int run_verify(const Experiment& ex) {
    const ExperimentConfig& cfg = ex.cfg;
    if (!prepare_output_dir(cfg)) return kExitUsage;
    SpectralGrid g(cfg.n, cfg.box_length);
    SimState state;
    try {
        state = build_initial_state(g, cfg.initial);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::vector<std::pair<IdentityReport, double>> checks;  // report, threshold
    try {
        for (const IdentityReport& r : cancellation_suite(g, state, cfg.params))
            checks.emplace_back(r, 1e-10);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    checks.emplace_back(null_lagrangian_residual(g, state.q), 1e-10);

    const VariationalReport vr = variational_consistency(g, state.q, cfg.params);
    IdentityReport vrow;
    vrow.name = "variational_worst";
    vrow.value = vr.worst;
    vrow.scale = 1.0;
    vrow.relative_residual = vr.worst;
    checks.emplace_back(vrow, 1e-6);

    for (const IdentityReport& r : mollifier_suite(g, {1.0, 2.0, 4.0, 8.0})) {
        const double threshold =
            r.name.find("self_adjoint") != std::string::npos ? 1e-12 : 1e-14;
        checks.emplace_back(r, threshold);
    }

    const double cut = std::max(1, cfg.n / 4);
    const DeltaDissipationReport dd =
        delta_dissipation_check(g, state.q, mollified(g, state.q, cut), cfg.params);
    checks.emplace_back(
        make_identity_report("delta_dissipation_violation", std::max(0.0, -dd.margin),
                             dd.control_norm2 + std::abs(dd.bound)),
        1e-10);

    std::cout << repro_line(ex) << "\n";
    std::string csv = repro_line(ex) + "\n";
    csv += "name,value,scale,relative_residual,threshold,status\n";
    int failures = 0;
    for (const auto& [r, threshold] : checks) {
        const bool pass = r.relative_residual <= threshold;
        failures += pass ? 0 : 1;
        csv += r.name + "," + fmt(r.value) + "," + fmt(r.scale) + "," +
               fmt(r.relative_residual) + "," + fmt(threshold) + "," +
               (pass ? "pass" : "fail") + "\n";
        std::cout << (pass ? "[pass] " : "[FAIL] ") << r.name
                  << " relative_residual=" << fmt(r.relative_residual)
                  << " threshold=" << fmt(threshold) << "\n";
    }
    if (cfg.output.csv) {
        if (!write_text(std::filesystem::path(cfg.output.directory) / "verify.csv", csv))
            return kExitUsage;
    }
    std::cout << "verify: " << checks.size() << " checks, " << failures << " failures\n";
    return failures == 0 ? kExitOk : kExitThreshold;
}

int run_twin(const Experiment& ex, double perturb_scale, long perturb_seed) {
    const ExperimentConfig& cfg = ex.cfg;
    if (perturb_seed < 0) {
        std::cerr << "error: --perturb-seed must be nonnegative\n";
        return kExitUsage;
    }
    if (!(perturb_scale >= 0.0) || !std::isfinite(perturb_scale)) {
        std::cerr << "error: --perturb-scale must be a finite nonnegative number\n";
        return kExitUsage;
    }
    if (!prepare_output_dir(cfg)) return kExitUsage;
    SpectralGrid g(cfg.n, cfg.box_length);
    SimState base;
    try {
        base = build_initial_state(g, cfg.initial);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    SimState other = base;
    if (perturb_scale != 0.0) {
        const unsigned ps = static_cast<unsigned>(perturb_seed);
        QTensorField qdir = random_qtensor_field(g, 4.0, ps);
        VectorField3 udir = random_vector_field(g, 4.0, ps + 7919, true);
        const double qn = discrete_norms(g, qdir).l2;
        const double un = discrete_norms(g, udir).l2;
        for (std::size_t i = 0; i < other.q.data.size(); ++i)
            other.q.data[i] += perturb_scale * qdir.data[i] / qn;
        for (std::size_t i = 0; i < other.u.data.size(); ++i)
            other.u.data[i] += perturb_scale * udir.data[i] / un;
    }

    TwinRunResult t;
    try {
        t = twin_run(g, base, other, cfg.params, cfg.solver);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    const std::string extra = "perturb_seed=" + std::to_string(perturb_seed) +
                              " perturb_scale=" + fmt(perturb_scale);
    std::cout << repro_line(ex, extra) << "\n";
    if (cfg.output.csv) {
        std::string csv = repro_line(ex, extra) + "\n";
        csv += "t,separation,diss_velocity,diss_qtensor\n";
        for (std::size_t i = 0; i < t.times.size(); ++i)
            csv += fmt(t.times[i]) + "," + fmt(t.separation[i]) + "," +
                   fmt(t.dissipation_u[i]) + "," + fmt(t.dissipation_q[i]) + "\n";
        csv += "# c_fit=" + fmt(t.c_fit) + " c_fit_half=" + fmt(t.c_fit_half) +
               " kappa1=" + fmt(t.kappa1) + " kappa2=" + fmt(t.kappa2) +
               " stable=" + (t.stable ? "1" : "0") +
               " bound_satisfied=" + (t.bound_satisfied ? "1" : "0") +
               " degenerate=" + (t.degenerate ? "1" : "0") + "\n";
        if (!write_text(std::filesystem::path(cfg.output.directory) / "twin.csv", csv))
            return kExitUsage;
    }
    std::cout << "c_fit=" << fmt(t.c_fit) << " c_fit_half=" << fmt(t.c_fit_half)
              << " kappa1=" << fmt(t.kappa1) << " kappa2=" << fmt(t.kappa2)
              << " stable=" << (t.stable ? 1 : 0)
              << " bound_satisfied=" << (t.bound_satisfied ? 1 : 0)
              << " degenerate=" << (t.degenerate ? 1 : 0) << "\n";
    if (t.blew_up) {
        std::cerr << "blow-up halt at t=" << fmt(t.blowup_time) << "\n";
        return kExitBlowup;
    }
    if (t.degenerate || !t.bound_satisfied) return kExitThreshold;
    return kExitOk;
}

int run_sweep(const Experiment& ex, const std::vector<double>& mu_list) {
    const ExperimentConfig& cfg = ex.cfg;
    if (!prepare_output_dir(cfg)) return kExitUsage;
    SpectralGrid g(cfg.n, cfg.box_length);
    SimState initial;
    try {
        initial = build_initial_state(g, cfg.initial);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::vector<ViscositySweepRow> rows;
    try {
        rows = viscosity_sweep(g, initial, cfg.params, mu_list, cfg.solver);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::cout << repro_line(ex) << "\n";
    std::string csv = repro_line(ex) + "\n";
    csv += "mu,sup_shifted,blew_up,blowup_time\n";
    bool any_blowup = false;
    bool monotone = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const ViscositySweepRow& r = rows[i];
        any_blowup = any_blowup || r.blew_up;
        if (i > 0 && rows[i].sup_shifted > rows[i - 1].sup_shifted * (1.0 + 1e-12))
            monotone = false;
        csv += fmt(r.mu) + "," + fmt(r.sup_shifted) + "," + (r.blew_up ? "1" : "0") + "," +
               fmt(r.blew_up ? r.blowup_time : -1.0) + "\n";
        std::cout << "mu=" << fmt(r.mu) << " sup_shifted=" << fmt(r.sup_shifted)
                  << " blew_up=" << (r.blew_up ? 1 : 0) << "\n";
    }
    if (cfg.output.csv) {
        if (!write_text(std::filesystem::path(cfg.output.directory) / "sweep.csv", csv))
            return kExitUsage;
    }
    if (any_blowup) {
        std::cerr << "blow-up halt in at least one sweep entry\n";
        return kExitBlowup;
    }
    if (!monotone) {
        std::cerr << "sup_shifted is not monotone non-increasing in mu\n";
        return kExitThreshold;
    }
    std::cout << "sweep: sup_shifted monotone non-increasing across " << rows.size()
              << " viscosities\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudo-spectral simulator for nematic liquid-crystal flow"};
    app.require_subcommand(1);

    std::string config_path;
    double perturb_scale = 1e-3;
    long perturb_seed = 1;
    std::vector<double> mu_list = {1.0, 2.0, 4.0, 8.0};

    CLI::App* sim = app.add_subcommand("simulate", "Integrate the flow and write energy rows");
    sim->add_option("--config", config_path, "Configuration file")->required();
    CLI::App* ver = app.add_subcommand("verify", "Run the identity suites on generated data");
    ver->add_option("--config", config_path, "Configuration file")->required();
    CLI::App* twin = app.add_subcommand("twin", "Evolve a perturbed pair and fit separation");
    twin->add_option("--config", config_path, "Configuration file")->required();
    twin->add_option("--perturb-scale", perturb_scale, "Perturbation amplitude (default 1e-3)");
    twin->add_option("--perturb-seed", perturb_seed, "Perturbation direction seed (default 1)");
    CLI::App* sweep = app.add_subcommand("sweep", "Tabulate the regularity gauge across mu");
    sweep->add_option("--config", config_path, "Configuration file")->required();
    sweep->add_option("--mu", mu_list, "Ascending viscosity list (default 1,2,4,8)")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    const std::optional<Experiment> ex = load_experiment(config_path);
    if (!ex) return kExitUsage;

    try {
        if (sim->parsed()) return run_simulate(*ex);
        if (ver->parsed()) return run_verify(*ex);
        if (twin->parsed()) return run_twin(*ex, perturb_scale, perturb_seed);
        return run_sweep(*ex, mu_list);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
