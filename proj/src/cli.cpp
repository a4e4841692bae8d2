#include "cos2phi/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cos2phi/calibration.hpp"
#include "cos2phi/config.hpp"
#include "cos2phi/constants.hpp"
#include "cos2phi/csv.hpp"
#include "cos2phi/errors.hpp"
#include "cos2phi/fluxonium.hpp"
#include "cos2phi/hamiltonian.hpp"
#include "cos2phi/multilevel.hpp"
#include "cos2phi/noise.hpp"
#include "cos2phi/parallel.hpp"
#include "cos2phi/spectra.hpp"

namespace cos2phi {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Context {
    RunConfig cfg;
    fs::path out_dir;
    int workers = 1;
    std::string command;
    std::ostream *out = nullptr;
    std::ostream *err = nullptr;

    Provenance provenance() const { return {command, config_hash(cfg), cfg.seed}; }

    json provenance_json() const {
        return {{"tool", std::string("cos2phi ") + kToolVersion},
                {"config_hash", hex64(config_hash(cfg))},
                {"command", command},
                {"seed", cfg.seed}};
    }

    void write(const std::string &name, const std::string &text) const {
        write_text(out_dir / name, text);
        *out << (out_dir / name).string() << "\n";
    }

    void write_json(const std::string &name, json j) const {
        j["provenance"] = provenance_json();
        write(name, j.dump(2) + "\n");
    }

    void warn(const std::string &what) const { *err << json{{"warning", what}}.dump() << "\n"; }
};

std::vector<std::string> flux_columns() { return {"phi_bias", "phi_ctrl"}; }

void cmd_spectrum(const Context &c) {
    const auto grid = c.cfg.sweep.grid(c.cfg.circuit.junctions);
    const int transitions = c.cfg.solver.levels - 1;
    const auto pts = transition_spectrum_sweep(c.cfg.circuit, grid, transitions, c.cfg.solver.n_charge, c.workers);
    CsvWriter w(c.provenance());
    auto head = flux_columns();
    for (int k = 1; k <= transitions; ++k) head.push_back("f0" + std::to_string(k) + "_ghz");
    w.header(head);
    for (const auto &p : pts) {
        std::vector<double> row{p.flux.phi_bias, p.flux.phi_ctrl};
        for (int k = 0; k < transitions; ++k)
            row.push_back(p.error.empty() ? p.transitions[k] : std::numeric_limits<double>::quiet_NaN());
        if (!p.error.empty()) c.warn("phi_bias=" + format_number(p.flux.phi_bias) + ": " + p.error);
        w.row(row);
    }
    c.write("spectrum.csv", w.str());
}

void cmd_resonator_shift(const Context &c) {
    const auto grid = c.cfg.sweep.grid(c.cfg.circuit.junctions);
    const int n_levels = std::max(c.cfg.solver.levels, 2);
    struct Point {
        double f01 = 0.0;
        ResonatorShift shift;
        std::string error;
    };
    const auto pts = parallel_map(grid.size(), c.workers, [&](std::size_t i) {
        Point p;
        try {
            const auto eig = solve_circuit(c.cfg.circuit, grid[i], n_levels + 1, c.cfg.solver.n_charge);
            const auto charge = operator_matrix(eig, OperatorKind::charge_n, c.cfg.circuit, grid[i]);
            p.f01 = eig.energies[1] - eig.energies[0];
            p.shift = resonator_shift(eig, charge, c.cfg.resonator, 0, n_levels);
        } catch (const std::exception &e) {
            p.error = e.what();
        }
        return p;
    });
    CsvWriter w(c.provenance());
    auto head = flux_columns();
    for (const char *h : {"f01_ghz", "shift_ghz", "f_res_dressed_ghz", "truncation_delta_ghz", "near_degenerate"})
        head.push_back(h);
    w.header(head);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto &p = pts[i];
        if (!p.error.empty()) {
            c.warn("phi_bias=" + format_number(grid[i].phi_bias) + ": " + p.error);
            w.row({grid[i].phi_bias, grid[i].phi_ctrl, nan, nan, nan, nan, nan});
            continue;
        }
        w.row({grid[i].phi_bias, grid[i].phi_ctrl, p.f01, p.shift.shift, c.cfg.resonator.f_res_bare + p.shift.shift,
               p.shift.truncation_delta, p.shift.near_degenerate ? 1.0 : 0.0});
    }
    c.write("resonator_shift.csv", w.str());
}

std::vector<std::string> budget_columns() {
    std::vector<std::string> head;
    for (auto name : kChannelNames) head.push_back("rate_" + std::string(name) + "_per_s");
    head.push_back("total_rate_per_s");
    head.push_back("t1_us");
    return head;
}

void append_budget(std::vector<double> &row, const T1Budget &b) {
    row.insert(row.end(), b.rates.begin(), b.rates.end());
    row.push_back(b.total_rate);
    row.push_back(b.t1 * 1e6);
}

void append_nan(std::vector<double> &row, std::size_t n) {
    row.insert(row.end(), n, std::numeric_limits<double>::quiet_NaN());
}

void cmd_t1_budget(const Context &c) {
    const auto grid = c.cfg.sweep.grid(c.cfg.circuit.junctions);
    const auto pts = t1_sweep(c.cfg.circuit, grid, c.cfg.resonator, c.cfg.noise, c.cfg.solver.n_charge, c.workers);
    CsvWriter w(c.provenance());
    auto head = flux_columns();
    head.push_back("f01_ghz");
    const auto bc = budget_columns();
    head.insert(head.end(), bc.begin(), bc.end());
    w.header(head);
    for (const auto &p : pts) {
        std::vector<double> row{p.flux.phi_bias, p.flux.phi_ctrl};
        if (p.error.empty()) {
            row.push_back(p.budget.f01);
            append_budget(row, p.budget);
        } else {
            c.warn("phi_bias=" + format_number(p.flux.phi_bias) + ": " + p.error);
            append_nan(row, bc.size() + 1);
        }
        w.row(row);
    }
    c.write("t1_budget.csv", w.str());
}

void cmd_multilevel(const Context &c) {
    const auto grid = c.cfg.sweep.grid(c.cfg.circuit.junctions);
    const int n = c.cfg.solver.levels;
    const auto pts = multilevel_t1_sweep(c.cfg.circuit, grid, c.cfg.noise, c.cfg.resonator, n,
                                         c.cfg.solver.n_charge, c.workers);
    CsvWriter w(c.provenance());
    auto head = flux_columns();
    for (const char *h : {"t1_us", "t1_two_level_us", "t1_next_us", "converged", "good_fit"}) head.push_back(h);
    w.header(head);
    for (const auto &p : pts) {
        std::vector<double> row{p.flux.phi_bias, p.flux.phi_ctrl};
        if (p.error.empty()) {
            const auto &r = p.result;
            row.insert(row.end(), {r.t1 * 1e6, r.t1_two_level * 1e6, r.t1_next * 1e6, r.converged ? 1.0 : 0.0,
                                   r.good_fit ? 1.0 : 0.0});
        } else {
            c.warn("phi_bias=" + format_number(p.flux.phi_bias) + ": " + p.error);
            append_nan(row, 5);
        }
        w.row(row);
    }
    c.write("multilevel_t1.csv", w.str());

    // Population relaxation from |1> at the middle of the grid.
    const FluxBias &mid = grid[grid.size() / 2];
    const auto rm = build_rate_matrix(c.cfg.circuit, mid, c.cfg.noise, c.cfg.resonator, n, c.cfg.noise.temperature,
                                      c.cfg.solver.n_charge);
    const auto eff = effective_t1(rm);
    const double t_end = 5.0 * eff.t1;
    std::vector<double> times;
    for (int k = 0; k <= 200; ++k) times.push_back(t_end * k / 200.0);
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(rm.dimension());
    p0[1] = 1.0;
    const auto trace = evolve_populations(rm, p0, times);
    CsvWriter pw(c.provenance());
    std::vector<std::string> ph{"time_s"};
    for (int k = 0; k < rm.dimension(); ++k) ph.push_back("p" + std::to_string(k));
    pw.header(ph);
    for (std::size_t t = 0; t < times.size(); ++t) {
        std::vector<double> row{times[t]};
        for (int k = 0; k < rm.dimension(); ++k) row.push_back(trace.populations(static_cast<Eigen::Index>(t), k));
        pw.row(row);
    }
    c.write("populations.csv", pw.str());
}

void cmd_fit(const Context &c, const fs::path &data_path) {
    const auto data = dataset_from_csv(read_csv(data_path));
    const auto used = filter_by_uncertainty(data, c.cfg.solver.sigma_cap_ghz);
    FitConstraints fc;
    fc.n_charge = c.cfg.solver.n_charge;
    const auto fit = fit_spectrum(used, c.cfg.circuit.ec, c.cfg.circuit.junctions, fc);
    json sens = json::object();
    for (std::size_t i = 0; i < fit.parameter_names.size(); ++i)
        sens[fit.parameter_names[i]] = fit.sensitivity[static_cast<Eigen::Index>(i)];
    const auto &j = fit.junctions;
    c.write_json("fit_result.json", {{"ec_ghz", c.cfg.circuit.ec},
                                     {"ej1_ghz", j.ej1},
                                     {"ej2_ghz", j.ej2},
                                     {"ej3_ghz", j.ej3},
                                     {"ej4_ghz", j.ej4},
                                     {"ej5_ghz", j.ej5},
                                     {"residual_rms_ghz", fit.residual_rms},
                                     {"objective", fit.objective},
                                     {"relative_sensitivity", sens},
                                     {"objective_history", fit.objective_history},
                                     {"iterations", fit.iterations},
                                     {"evaluations", fit.evaluations},
                                     {"converged", fit.converged},
                                     {"rows_total", data.rows.size()},
                                     {"rows_used", used.rows.size()}});
}

json matrix_json(const Eigen::Matrix2d &m) { return {{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}; }

void cmd_calibrate(const Context &c, const fs::path &heatmap_path) {
    const Heatmap h = heatmap_from_csv(read_csv(heatmap_path));
    KernelRegion kernel = c.cfg.calibration.kernel;
    if (kernel.fbl_size == 0 && kernel.coil_size == 0 && kernel.fbl_start == 0 && kernel.coil_start == 0) {
        kernel.fbl_size = static_cast<int>(h.fbl.size()) / 3;
        kernel.coil_size = static_cast<int>(h.coil.size()) / 3;
        kernel.fbl_start = (static_cast<int>(h.fbl.size()) - kernel.fbl_size) / 2;
        kernel.coil_start = (static_cast<int>(h.coil.size()) - kernel.coil_size) / 2;
    }
    const auto model = unit_cell_model(c.cfg.circuit, c.cfg.resonator, c.cfg.calibration.model_grid,
                                       c.cfg.calibration.model_n_charge, 6, c.workers);
    LatticeOptions opts = c.cfg.calibration.lattice;
    opts.workers = c.workers;
    const auto cal = calibrate_crosstalk(h, kernel, model, opts);
    json peaks = json::array();
    for (const auto &p : cal.lattice.peaks) peaks.push_back({p[0], p[1]});
    const Eigen::Matrix2i &u = cal.assignment;
    c.write_json("crosstalk.json",
                 {{"crosstalk_phi0_per_ma", matrix_json(cal.matrix.m)},
                  {"offset_phi0", {cal.matrix.offset[0], cal.matrix.offset[1]}},
                  {"lattice_matrix_phi0_per_ma", matrix_json(cal.lattice_matrix.m)},
                  {"lattice_v1_ma", {cal.lattice.v1[0], cal.lattice.v1[1]}},
                  {"lattice_v2_ma", {cal.lattice.v2[0], cal.lattice.v2[1]}},
                  {"lattice_fit_residual_ma", cal.lattice.fit_residual},
                  {"peaks_ma", peaks},
                  {"peak_scores", cal.lattice.scores},
                  {"assignment", {{u(0, 0), u(0, 1)}, {u(1, 0), u(1, 1)}}},
                  {"score", cal.score},
                  {"runner_up", cal.runner_up},
                  {"ambiguous", cal.ambiguous}});
    if (cal.ambiguous) c.warn("loop assignment is ambiguous: runner-up within 10% of the best score");
}

json budget_json(const T1Budget &b) {
    json rates = json::object();
    for (int k = 0; k < kChannelCount; ++k) rates[std::string(kChannelNames[k])] = b.rates[k];
    return {{"f01_ghz", b.f01},
            {"rates_per_s", rates},
            {"total_rate_per_s", b.total_rate},
            {"t1_us", b.t1 * 1e6},
            {"dominant", std::string(channel_name(b.dominant()))}};
}

void cmd_fluxonium(const Context &c) {
    const auto &fc = c.cfg.fluxonium;
    const int transitions = c.cfg.solver.levels - 1;
    const auto pts = fluxonium_sweep(fc.params, fc.phi_ext.values(), c.cfg.noise, c.cfg.resonator,
                                     c.cfg.solver.levels, c.workers);
    CsvWriter w(c.provenance());
    std::vector<std::string> head{"phi_ext"};
    for (int k = 1; k <= transitions; ++k) head.push_back("f0" + std::to_string(k) + "_ghz");
    const auto bc = budget_columns();
    head.insert(head.end(), bc.begin(), bc.end());
    w.header(head);
    for (const auto &p : pts) {
        std::vector<double> row{p.phi_ext};
        if (p.error.empty()) {
            for (int k = 0; k < transitions; ++k) row.push_back(p.transitions[k]);
            append_budget(row, p.budget);
        } else {
            c.warn("phi_ext=" + format_number(p.phi_ext) + ": " + p.error);
            append_nan(row, transitions + bc.size());
        }
        w.row(row);
    }
    c.write("fluxonium.csv", w.str());

    FluxoniumParams sweet = fc.params;
    sweet.phi_ext = 0.5;
    const auto fb = fluxonium_t1_budget(sweet, c.cfg.noise, c.cfg.resonator);
    const FluxBias flux = make_flux_bias(0.5, c.cfg.sweep.phi_ctrl.start, c.cfg.circuit.junctions);
    const auto cb = t1_budget(c.cfg.circuit, flux, c.cfg.resonator, c.cfg.noise, c.cfg.solver.n_charge);
    c.write_json("comparison.json", {{"fluxonium_phi_ext", 0.5},
                                     {"fluxonium", budget_json(fb)},
                                     {"cos2phi_phi_bias", 0.5},
                                     {"cos2phi_phi_ctrl", flux.phi_ctrl},
                                     {"cos2phi", budget_json(cb)},
                                     {"t1_ratio", fb.t1 / cb.t1}});
}

void cmd_potential(const Context &c, int grid_points) {
    const FluxBias flux =
        make_flux_bias(c.cfg.sweep.phi_bias.start, c.cfg.sweep.phi_ctrl.start, c.cfg.circuit.junctions);
    const int levels = c.cfg.solver.levels;
    const auto eig = solve_circuit(c.cfg.circuit, flux, levels, c.cfg.solver.n_charge);
    const Eigen::MatrixXcd psi = phase_wavefunctions(eig, grid_points);
    Eigen::VectorXd phi(grid_points), u(grid_points);
    for (int j = 0; j < grid_points; ++j) {
        phi[j] = -kPi + kTwoPi * j / grid_points;
        u[j] = total_potential(c.cfg.circuit, flux, phi[j]);
    }
    // Densities scaled so the tallest one spans a quarter of the potential depth.
    const Eigen::MatrixXd density = psi.cwiseAbs2();
    const double depth = u.maxCoeff() - u.minCoeff();
    const double peak = density.maxCoeff();
    const double scale = peak > 0.0 && depth > 0.0 ? 0.25 * depth / peak : 1.0;
    CsvWriter w(c.provenance());
    std::vector<std::string> head{"phi_rad", "potential_ghz"};
    for (int k = 0; k < levels; ++k) head.push_back("energy" + std::to_string(k) + "_ghz");
    for (int k = 0; k < levels; ++k) head.push_back("psi" + std::to_string(k) + "_offset_ghz");
    w.header(head);
    for (int j = 0; j < grid_points; ++j) {
        std::vector<double> row{phi[j], u[j]};
        for (int k = 0; k < levels; ++k) row.push_back(eig.energies[k]);
        for (int k = 0; k < levels; ++k) row.push_back(eig.energies[k] + scale * density(j, k));
        w.row(row);
    }
    c.write("potential.csv", w.str());
}

json error_json(const char *kind, const std::string &message, int code, const std::string &field = {}) {
    json j{{"error", kind}, {"message", message}, {"exit_code", code}};
    if (!field.empty()) j["field"] = field;
    return j;
}

}  // namespace

int run_command(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"cos(2phi) qubit simulation toolkit", "cos2phi"};
    app.set_version_flag("--version", std::string("cos2phi ") + kToolVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    int workers = 1;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out-dir", out_dir, "directory for output files");
    app.add_option("--workers", workers, "worker threads for sweeps")->check(CLI::Range(1, 1024));
    app.add_option("--seed", seed, "overrides the configured seed");

    std::string data_path, heatmap_path;
    int grid_points = 512;
    std::vector<std::pair<CLI::App *, std::function<void(const Context &)>>> commands;
    auto add = [&](const char *name, const char *help, std::function<void(const Context &)> fn) {
        CLI::App *sub = app.add_subcommand(name, help);
        commands.emplace_back(sub, std::move(fn));
        return sub;
    };
    add("spectrum", "transition frequencies over the flux sweep", cmd_spectrum);
    add("resonator-shift", "dispersive resonator shift over the flux sweep", cmd_resonator_shift);
    add("t1-budget", "per-channel relaxation rates over the flux sweep", cmd_t1_budget);
    add("multilevel-t1", "rate-matrix T1 over the flux sweep plus a population trace", cmd_multilevel);
    add("fit-spectrum", "fit junction energies to a spectroscopy dataset",
        [&](const Context &c) { cmd_fit(c, data_path); })
        ->add_option("--data", data_path, "dataset CSV")
        ->required()
        ->check(CLI::ExistingFile);
    add("calibrate-crosstalk", "recover the flux cross-talk matrix from a heatmap",
        [&](const Context &c) { cmd_calibrate(c, heatmap_path); })
        ->add_option("--heatmap", heatmap_path, "heatmap CSV")
        ->required()
        ->check(CLI::ExistingFile);
    add("fluxonium-compare", "fluxonium spectrum and T1 budget with the same noise model", cmd_fluxonium);
    add("potential", "potential and offset wavefunctions at the first sweep point",
        [&](const Context &c) { cmd_potential(c, grid_points); })
        ->add_option("--grid", grid_points, "phase grid points")
        ->check(CLI::Range(16, 1 << 16));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion &) {
        out << "cos2phi " << kToolVersion << "\n";
        return 0;
    } catch (const CLI::ParseError &e) {
        err << error_json("usage", e.what(), 2).dump() << "\n";
        return 2;
    }

    try {
        Context c;
        c.cfg = config_path.empty() ? default_config() : load_config(config_path);
        if (seed) c.cfg.seed = *seed;
        c.cfg.validate();
        c.out_dir = out_dir;
        c.workers = workers;
        c.out = &out;
        c.err = &err;
        std::error_code ec;
        fs::create_directories(c.out_dir, ec);
        if (ec) throw ValidationError("out-dir", "cannot create " + out_dir + ": " + ec.message());
        for (const auto &[sub, fn] : commands) {
            if (!sub->parsed()) continue;
            c.command = sub->get_name();
            c.write("config.json", dump_config(c.cfg));
            fn(c);
        }
        return 0;
    } catch (const ValidationError &e) {
        err << error_json(e.kind(), e.what(), e.exit_code(), e.field()).dump() << "\n";
        return e.exit_code();
    } catch (const Error &e) {
        err << error_json(e.kind(), e.what(), e.exit_code()).dump() << "\n";
        return e.exit_code();
    } catch (const std::exception &e) {
        err << error_json("numerical", e.what(), 4).dump() << "\n";
        return 4;
    }
}

}  // namespace cos2phi
