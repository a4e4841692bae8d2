#include "cos2phi/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <utility>

#include "cos2phi/errors.hpp"

namespace cos2phi {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were consumed so that
// leftovers can be rejected.
class Section {
  public:
    Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_.empty() ? "config" : path_, "must be a JSON object");
    }

    std::string at(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string &key, double def) {
        const json *v = find(key);
        if (!v) return def;
        if (!v->is_number()) throw ValidationError(at(key), "must be a number");
        return v->get<double>();
    }

    std::optional<double> optional_number(const std::string &key, std::optional<double> def) {
        const json *v = find(key);
        if (!v) return def;
        if (v->is_null()) return std::nullopt;
        if (!v->is_number()) throw ValidationError(at(key), "must be a number or null");
        return v->get<double>();
    }

    int integer(const std::string &key, int def) {
        const json *v = find(key);
        if (!v) return def;
        if (!v->is_number_integer()) throw ValidationError(at(key), "must be an integer");
        const auto x = v->get<std::int64_t>();
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
            throw ValidationError(at(key), "integer out of range");
        return static_cast<int>(x);
    }

    std::uint64_t unsigned_integer(const std::string &key, std::uint64_t def) {
        const json *v = find(key);
        if (!v) return def;
        if (!v->is_number_unsigned()) throw ValidationError(at(key), "must be a non-negative integer");
        return v->get<std::uint64_t>();
    }

    // Missing child -> empty object, so every default still applies.
    Section child(const std::string &key) {
        const json *v = find(key);
        return v ? Section(*v, at(key)) : Section(empty(), at(key));
    }

    const json *raw(const std::string &key) { return find(key); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ValidationError(at(it.key()), "unknown key");
    }

  private:
    static const json &empty() {
        static const json e = json::object();
        return e;
    }

    const json *find(const std::string &key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json &j_;
    std::string path_;
    std::set<std::string> used_;
};

SweepAxis read_axis(Section s, SweepAxis def) {
    SweepAxis a;
    a.start = s.number("start_phi0", def.start);
    a.stop = s.number("stop_phi0", def.stop);
    a.steps = s.integer("steps", def.steps);
    s.finish();
    return a;
}

json axis_json(const SweepAxis &a) { return {{"start_phi0", a.start}, {"stop_phi0", a.stop}, {"steps", a.steps}}; }

// Runs `fn`, renaming the field of any ValidationError through `names`
// (struct member -> JSON key) and prefixing the section path.
void translated(const std::string &prefix, const std::vector<std::pair<std::string, std::string>> &names,
                const std::function<void()> &fn) {
    try {
        fn();
    } catch (const ValidationError &e) {
        std::string field = e.field();
        for (const auto &[from, to] : names)
            if (field == from) field = to;
        const std::string what = e.what();
        const std::string msg = what.substr(std::min(what.size(), e.field().size() + 2));
        throw ValidationError(prefix + "." + field, msg);
    }
}

const std::vector<std::pair<std::string, std::string>> kCircuitNames = {
    {"ec", "ec_ghz"},         {"ej1", "ej1_ghz"}, {"ej2", "ej2_ghz"}, {"ej3", "ej3_ghz"}, {"ej4", "ej4_ghz"},
    {"ej5", "ej5_ghz"},       {"ej4+ej5", "ej4_ghz"}, {"ec_int_left", "ec_int_left_ghz"},
    {"ec_int_right", "ec_int_right_ghz"}};

const std::vector<std::pair<std::string, std::string>> kNoiseNames = {
    {"mutual_inductance_bias", "mutual_bias_phi0_per_a"},
    {"mutual_inductance_ctrl", "mutual_ctrl_phi0_per_a"},
    {"bias_line_impedance", "fbl_impedance_ohm"},
    {"gap", "gap_ghz"},
    {"a_one_over_f", "a_one_over_f_phi0"},
    {"temperature", "temperature_k"},
    {"effective_capacitance", "effective_capacitance_f"},
    {"effective_inductance", "effective_inductance_h"}};

const std::vector<std::pair<std::string, std::string>> kResonatorNames = {{"f_res_bare", "f_res_ghz"},
                                                                           {"g_coupling", "g_ghz"}};

const std::vector<std::pair<std::string, std::string>> kFluxoniumNames = {
    {"ec", "ec_ghz"}, {"ej", "ej_ghz"}, {"el", "el_ghz"}};

void check_axis(const SweepAxis &a, const std::string &path) {
    if (a.steps == 0) throw UsageError(path + ": empty sweep (steps = 0)");
    if (a.steps < 0) throw ValidationError(path + ".steps", "must be >= 1");
    if (!std::isfinite(a.start)) throw ValidationError(path + ".start_phi0", "must be finite");
    if (!std::isfinite(a.stop)) throw ValidationError(path + ".stop_phi0", "must be finite");
}

}  // namespace

std::vector<double> SweepAxis::values() const {
    std::vector<double> v;
    if (steps <= 0) return v;
    v.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k)
        v.push_back(steps == 1 ? start : start + (stop - start) * double(k) / double(steps - 1));
    return v;
}

std::vector<FluxBias> SweepSpec::grid(const JunctionSet &junctions) const {
    std::vector<FluxBias> g;
    for (double pc : phi_ctrl.values())
        for (double pb : phi_bias.values()) g.push_back(make_flux_bias(pb, pc, junctions));
    return g;
}

RunConfig default_config() {
    RunConfig c;
    c.circuit.ec = 0.21;
    c.circuit.junctions = {42.49, 53.9, 88.11, 35.73, 35.73};
    return c;
}

void RunConfig::validate() const {
    translated("circuit", kCircuitNames, [&] { cos2phi::validate(circuit); });
    translated("resonator", kResonatorNames, [&] { resonator.validate(); });
    translated("noise", kNoiseNames, [&] { noise.validate(); });
    check_axis(sweep.phi_bias, "sweep.phi_bias");
    check_axis(sweep.phi_ctrl, "sweep.phi_ctrl");
    if (solver.n_charge < 10) throw ValidationError("solver.n_charge", "must be >= 10");
    if (solver.levels < 2) throw ValidationError("solver.levels", "must be >= 2");
    if (solver.levels > 2 * solver.n_charge + 1) throw ValidationError("solver.levels", "exceeds the basis size");
    if (!(solver.sigma_cap_ghz > 0.0)) throw ValidationError("solver.sigma_cap_ghz", "must be > 0");
    translated("fluxonium", kFluxoniumNames, [&] { fluxonium.params.validate(); });
    check_axis(fluxonium.phi_ext, "fluxonium.phi_ext");
    translated("calibration", {{"crosstalk.matrix", "crosstalk_phi0_per_ma"}, {"crosstalk.offset", "offset_phi0"}},
               [&] { calibration.crosstalk.validate(); });
    const auto &lat = calibration.lattice;
    if (!(lat.threshold > -1.0 && lat.threshold < 1.0))
        throw ValidationError("calibration.threshold", "must lie in (-1, 1)");
    if (!(lat.cluster_radius >= 0.0)) throw ValidationError("calibration.cluster_radius_px", "must be >= 0");
    if (!(lat.peak_radius >= 1.0)) throw ValidationError("calibration.peak_radius_px", "must be >= 1");
    if (!(lat.winsorize >= 0.0 && lat.winsorize < 0.5))
        throw ValidationError("calibration.winsorize", "must lie in [0, 0.5)");
    const auto &k = calibration.kernel;
    if (k.fbl_start < 0 || k.coil_start < 0 || k.fbl_size < 0 || k.coil_size < 0)
        throw ValidationError("calibration.kernel", "pixel indices must be >= 0");
    if (calibration.model_grid < 4) throw ValidationError("calibration.model_grid", "must be >= 4");
    if (calibration.model_n_charge < 10) throw ValidationError("calibration.model_n_charge", "must be >= 10");
}

RunConfig config_from_json(const json &j) {
    RunConfig c = default_config();
    Section root(j, "");
    {
        Section s = root.child("circuit");
        auto &p = c.circuit;
        p.ec = s.number("ec_ghz", p.ec);
        p.junctions.ej1 = s.number("ej1_ghz", p.junctions.ej1);
        p.junctions.ej2 = s.number("ej2_ghz", p.junctions.ej2);
        p.junctions.ej3 = s.number("ej3_ghz", p.junctions.ej3);
        p.junctions.ej4 = s.number("ej4_ghz", p.junctions.ej4);
        p.junctions.ej5 = s.number("ej5_ghz", p.junctions.ej5);
        p.ec_int_left = s.number("ec_int_left_ghz", p.ec_int_left);
        p.ec_int_right = s.number("ec_int_right_ghz", p.ec_int_right);
        p.ng = s.number("ng", p.ng);
        s.finish();
    }
    {
        Section s = root.child("resonator");
        c.resonator.f_res_bare = s.number("f_res_ghz", c.resonator.f_res_bare);
        c.resonator.g_coupling = s.number("g_ghz", c.resonator.g_coupling);
        s.finish();
    }
    {
        Section s = root.child("noise");
        auto &n = c.noise;
        n.q_cap_ref = s.number("q_cap_ref", n.q_cap_ref);
        n.alpha_cap = s.number("alpha_cap", n.alpha_cap);
        n.q_ind_ref = s.number("q_ind_ref", n.q_ind_ref);
        n.mutual_inductance_bias = s.number("mutual_bias_phi0_per_a", n.mutual_inductance_bias);
        n.mutual_inductance_ctrl = s.number("mutual_ctrl_phi0_per_a", n.mutual_inductance_ctrl);
        n.bias_line_impedance = s.number("fbl_impedance_ohm", n.bias_line_impedance);
        n.x_qp = s.number("x_qp", n.x_qp);
        n.gap = s.number("gap_ghz", n.gap);
        n.a_one_over_f = s.number("a_one_over_f_phi0", n.a_one_over_f);
        n.temperature = s.number("temperature_k", n.temperature);
        n.loaded_q_resonator = s.number("loaded_q_resonator", n.loaded_q_resonator);
        n.effective_capacitance = s.optional_number("effective_capacitance_f", n.effective_capacitance);
        n.effective_inductance = s.optional_number("effective_inductance_h", n.effective_inductance);
        s.finish();
    }
    {
        Section s = root.child("sweep");
        c.sweep.phi_bias = read_axis(s.child("phi_bias"), c.sweep.phi_bias);
        c.sweep.phi_ctrl = read_axis(s.child("phi_ctrl"), c.sweep.phi_ctrl);
        s.finish();
    }
    {
        Section s = root.child("solver");
        c.solver.n_charge = s.integer("n_charge", c.solver.n_charge);
        c.solver.levels = s.integer("levels", c.solver.levels);
        c.solver.sigma_cap_ghz = s.number("sigma_cap_ghz", c.solver.sigma_cap_ghz);
        s.finish();
    }
    {
        Section s = root.child("fluxonium");
        auto &p = c.fluxonium.params;
        p.ec = s.number("ec_ghz", p.ec);
        p.ej = s.number("ej_ghz", p.ej);
        p.el = s.number("el_ghz", p.el);
        p.basis_size = s.integer("basis_size", p.basis_size);
        c.fluxonium.phi_ext = read_axis(s.child("phi_ext"), c.fluxonium.phi_ext);
        s.finish();
    }
    {
        Section s = root.child("calibration");
        auto &cal = c.calibration;
        if (const json *m = s.raw("crosstalk_phi0_per_ma")) {
            const std::string path = s.at("crosstalk_phi0_per_ma");
            if (!m->is_array() || m->size() != 2) throw ValidationError(path, "must be a 2x2 array");
            for (int r = 0; r < 2; ++r) {
                const json &row = (*m)[r];
                if (!row.is_array() || row.size() != 2) throw ValidationError(path, "must be a 2x2 array");
                for (int col = 0; col < 2; ++col) {
                    if (!row[col].is_number()) throw ValidationError(path, "entries must be numbers");
                    cal.crosstalk.m(r, col) = row[col].get<double>();
                }
            }
        }
        if (const json *o = s.raw("offset_phi0")) {
            const std::string path = s.at("offset_phi0");
            if (!o->is_array() || o->size() != 2) throw ValidationError(path, "must be an array of 2 numbers");
            for (int r = 0; r < 2; ++r) {
                if (!(*o)[r].is_number()) throw ValidationError(path, "entries must be numbers");
                cal.crosstalk.offset[r] = (*o)[r].get<double>();
            }
        }
        cal.lattice.threshold = s.number("threshold", cal.lattice.threshold);
        cal.lattice.cluster_radius = s.number("cluster_radius_px", cal.lattice.cluster_radius);
        cal.lattice.peak_radius = s.number("peak_radius_px", cal.lattice.peak_radius);
        cal.lattice.winsorize = s.number("winsorize", cal.lattice.winsorize);
        {
            Section k = s.child("kernel");
            cal.kernel.fbl_start = k.integer("fbl_start_px", cal.kernel.fbl_start);
            cal.kernel.coil_start = k.integer("coil_start_px", cal.kernel.coil_start);
            cal.kernel.fbl_size = k.integer("fbl_size_px", cal.kernel.fbl_size);
            cal.kernel.coil_size = k.integer("coil_size_px", cal.kernel.coil_size);
            k.finish();
        }
        cal.model_grid = s.integer("model_grid", cal.model_grid);
        cal.model_n_charge = s.integer("model_n_charge", cal.model_n_charge);
        s.finish();
    }
    c.seed = root.unsigned_integer("seed", c.seed);
    root.finish();
    c.validate();
    return c;
}

json config_to_json(const RunConfig &c) {
    auto opt = [](const std::optional<double> &v) { return v ? json(*v) : json(nullptr); };
    const auto &j = c.circuit.junctions;
    const auto &n = c.noise;
    const auto &cal = c.calibration;
    json out;
    out["circuit"] = {{"ec_ghz", c.circuit.ec},
                      {"ej1_ghz", j.ej1},
                      {"ej2_ghz", j.ej2},
                      {"ej3_ghz", j.ej3},
                      {"ej4_ghz", j.ej4},
                      {"ej5_ghz", j.ej5},
                      {"ec_int_left_ghz", c.circuit.ec_int_left},
                      {"ec_int_right_ghz", c.circuit.ec_int_right},
                      {"ng", c.circuit.ng}};
    out["resonator"] = {{"f_res_ghz", c.resonator.f_res_bare}, {"g_ghz", c.resonator.g_coupling}};
    out["noise"] = {{"q_cap_ref", n.q_cap_ref},
                    {"alpha_cap", n.alpha_cap},
                    {"q_ind_ref", n.q_ind_ref},
                    {"mutual_bias_phi0_per_a", n.mutual_inductance_bias},
                    {"mutual_ctrl_phi0_per_a", n.mutual_inductance_ctrl},
                    {"fbl_impedance_ohm", n.bias_line_impedance},
                    {"x_qp", n.x_qp},
                    {"gap_ghz", n.gap},
                    {"a_one_over_f_phi0", n.a_one_over_f},
                    {"temperature_k", n.temperature},
                    {"loaded_q_resonator", n.loaded_q_resonator},
                    {"effective_capacitance_f", opt(n.effective_capacitance)},
                    {"effective_inductance_h", opt(n.effective_inductance)}};
    out["sweep"] = {{"phi_bias", axis_json(c.sweep.phi_bias)}, {"phi_ctrl", axis_json(c.sweep.phi_ctrl)}};
    out["solver"] = {{"n_charge", c.solver.n_charge},
                     {"levels", c.solver.levels},
                     {"sigma_cap_ghz", c.solver.sigma_cap_ghz}};
    out["fluxonium"] = {{"ec_ghz", c.fluxonium.params.ec},
                        {"ej_ghz", c.fluxonium.params.ej},
                        {"el_ghz", c.fluxonium.params.el},
                        {"basis_size", c.fluxonium.params.basis_size},
                        {"phi_ext", axis_json(c.fluxonium.phi_ext)}};
    out["calibration"] = {
        {"crosstalk_phi0_per_ma",
         {{cal.crosstalk.m(0, 0), cal.crosstalk.m(0, 1)}, {cal.crosstalk.m(1, 0), cal.crosstalk.m(1, 1)}}},
        {"offset_phi0", {cal.crosstalk.offset[0], cal.crosstalk.offset[1]}},
        {"threshold", cal.lattice.threshold},
        {"cluster_radius_px", cal.lattice.cluster_radius},
        {"peak_radius_px", cal.lattice.peak_radius},
        {"winsorize", cal.lattice.winsorize},
        {"kernel",
         {{"fbl_start_px", cal.kernel.fbl_start},
          {"coil_start_px", cal.kernel.coil_start},
          {"fbl_size_px", cal.kernel.fbl_size},
          {"coil_size_px", cal.kernel.coil_size}}},
        {"model_grid", cal.model_grid},
        {"model_n_charge", cal.model_n_charge}};
    out["seed"] = c.seed;
    return out;
}

RunConfig parse_config(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ValidationError("config", e.what());
    }
    return config_from_json(j);
}

RunConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("config", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig &cfg) { return config_to_json(cfg).dump(2) + "\n"; }

std::uint64_t fnv1a64(const std::string &bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t config_hash(const RunConfig &cfg) { return fnv1a64(dump_config(cfg)); }

}  // namespace cos2phi
