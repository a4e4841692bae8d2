#ifndef COS2PHI_CONFIG_HPP
#define COS2PHI_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cos2phi/calibration.hpp"
#include "cos2phi/circuit.hpp"
#include "cos2phi/fluxonium.hpp"
#include "cos2phi/noise.hpp"
#include "cos2phi/spectra.hpp"

namespace cos2phi {

// Inclusive linear grid; steps == 1 gives just `start`.
struct SweepAxis {
    double start = 0.5;
    double stop = 0.5;
    int steps = 1;

    std::vector<double> values() const;
};

struct SweepSpec {
    SweepAxis phi_bias{0.3, 0.7, 81};
    SweepAxis phi_ctrl{0.378, 0.378, 1};

    // phi_ctrl outer, phi_bias inner.
    std::vector<FluxBias> grid(const JunctionSet &junctions) const;
};

struct SolverConfig {
    int n_charge = kDefaultNCharge;
    int levels = 5;
    double sigma_cap_ghz = kDefaultSigmaCap;
};

struct FluxoniumConfig {
    FluxoniumParams params;
    SweepAxis phi_ext{0.0, 1.0, 101};
};

struct CalibrationConfig {
    CrosstalkMatrix crosstalk = device_crosstalk();
    LatticeOptions lattice;
    KernelRegion kernel;  // all zero: centred region, a third of the map per axis
    int model_grid = 48;
    int model_n_charge = 20;
};

struct RunConfig {
    CircuitParams circuit;
    ResonatorParams resonator;
    NoiseConfig noise;
    SweepSpec sweep;
    SolverConfig solver;
    FluxoniumConfig fluxonium;
    CalibrationConfig calibration;
    std::uint64_t seed = 0;

    void validate() const;
};

// Defaults: fitted device junction energies, E_C = 0.21 GHz, Table I noise.
RunConfig default_config();

// Strict: unknown keys and wrong types are rejected with the JSON path as the
// error field. Missing keys take defaults.
RunConfig config_from_json(const nlohmann::json &j);
nlohmann::json config_to_json(const RunConfig &cfg);

RunConfig load_config(const std::filesystem::path &path);
RunConfig parse_config(const std::string &text);

// Normalized dump: sorted keys, two-space indent, shortest round-trip numbers,
// trailing newline.
std::string dump_config(const RunConfig &cfg);

// FNV-1a 64 of the normalized dump.
std::uint64_t config_hash(const RunConfig &cfg);
std::uint64_t fnv1a64(const std::string &bytes);

}  // namespace cos2phi

#endif  // COS2PHI_CONFIG_HPP
