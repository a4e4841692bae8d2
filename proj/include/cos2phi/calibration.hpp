#ifndef COS2PHI_CALIBRATION_HPP
#define COS2PHI_CALIBRATION_HPP

#include <vector>

#include <Eigen/Dense>

#include "cos2phi/circuit.hpp"
#include "cos2phi/spectra.hpp"

namespace cos2phi {

// Currents (fbl, coil) in mA to fluxes (phi_bias_tilde, phi_ctrl) in Phi0.
struct CrosstalkMatrix {
    Eigen::Matrix2d m = Eigen::Matrix2d::Identity();  // Phi0 per mA
    Eigen::Vector2d offset = Eigen::Vector2d::Zero();  // Phi0 at zero current

    void validate() const;
};

// Matrix measured on the device.
CrosstalkMatrix device_crosstalk();

Eigen::Vector2d apply_crosstalk(const CrosstalkMatrix &cm, double fbl_ma, double coil_ma);
// Inverse map: currents producing the requested fluxes.
Eigen::Vector2d currents_for_flux(const CrosstalkMatrix &cm, double phi_b_tilde, double phi_ctrl);

// Phi_bias = phi_b_tilde + phi_s/2 - delta/2pi, with delta from the small SQUID
// asymmetry d. For d = 0 this is the identity.
FluxBias rebase_flux(double phi_b_tilde, double phi_s, double d);
// Inverse of rebase_flux.
double tilde_from_rebased(const FluxBias &flux);

// values(i, j) taken at fbl[i], coil[j]. NaN marks a missing cell.
struct Heatmap {
    Eigen::VectorXd fbl;   // mA
    Eigen::VectorXd coil;  // mA
    Eigen::MatrixXd values;

    void validate() const;
};

// Sub-map used as correlation kernel, in pixel indices.
struct KernelRegion {
    int fbl_start = 0;
    int coil_start = 0;
    int fbl_size = 0;
    int coil_size = 0;
};

struct LatticeOptions {
    double threshold = 0.6;       // normalized correlation
    double cluster_radius = 2.0;  // pixels
    // A peak must be the largest correlation within this radius. Stops narrow
    // ridges (maps that vary along one flux only) from producing a peak per pixel.
    double peak_radius = 5.0;  // pixels
    // Values beyond these tail quantiles are clipped before correlating, so
    // that resonance spikes do not dominate the sums.
    double winsorize = 0.05;
    int workers = 1;
};

// Copy of the map with each tail beyond the given fraction clipped.
Heatmap winsorized(const Heatmap &h, double fraction);

// Normalized cross-correlation of the kernel at every placement inside the
// map. Entry (p, q) puts the kernel origin on pixel (p, q). Missing cells are
// dropped from the sums.
Eigen::MatrixXd normalized_cross_correlation(const Heatmap &h, const KernelRegion &kernel, int workers = 1);

struct LatticeResult {
    Eigen::Vector2d v1 = Eigen::Vector2d::Zero();  // (fbl, coil) mA
    Eigen::Vector2d v2 = Eigen::Vector2d::Zero();
    std::vector<Eigen::Vector2d> peaks;  // displacements of the peak clusters, mA
    std::vector<double> scores;
    double fit_residual = 0.0;  // rms distance of peaks from the fitted lattice, mA
};

// Requires uniformly spaced axes. Throws NumericalError when fewer than three
// peak clusters (or no second independent direction) are found.
LatticeResult detect_lattice(const Heatmap &h, const KernelRegion &kernel, const LatticeOptions &opts = {});

// M with M v1 = (1, 0) and M v2 = (0, 1). Vectors closer than 5 degrees are
// rejected.
CrosstalkMatrix lattice_to_matrix(const Eigen::Vector2d &v1, const Eigen::Vector2d &v2);

inline constexpr double kMinLatticeAngleDeg = 5.0;

// Model resonator shift (MHz) over one flux period in (Phi_bias, Phi_ctrl),
// used to decide which lattice direction belongs to which loop.
struct UnitCellModel {
    Eigen::MatrixXd values;  // (Phi_bias index, Phi_ctrl index), periodic
    double d = 0.0;          // small-SQUID asymmetry used by rebase_flux

    // Bilinear periodic interpolation at intermediate-basis fluxes.
    double operator()(double phi_b_tilde, double phi_ctrl) const;
};

UnitCellModel unit_cell_model(const CircuitParams &params, const ResonatorParams &res, int size = 48,
                              int n_charge = 20, int n_levels = 6, int workers = 1);

struct CrosstalkCalibration {
    CrosstalkMatrix matrix;          // after refinement against the model
    CrosstalkMatrix lattice_matrix;  // straight from the assigned lattice
    LatticeResult lattice;
    Eigen::Matrix2i assignment = Eigen::Matrix2i::Identity();  // integer change of lattice basis
    double score = 0.0;      // correlation of the map with the model
    double runner_up = 0.0;  // best score of a different assignment
    bool ambiguous = false;  // runner_up within 10% of score
};

inline constexpr double kAssignmentMargin = 0.10;
inline constexpr int kAssignmentRange = 4;

// Lattice detection followed by the loop assignment: every integer basis change
// with entries up to kAssignmentRange is scored by correlating the rebased map
// with the model, row signs fixed so the diagonal is positive. The chosen
// matrix is then refined by maximizing the same correlation.
CrosstalkCalibration calibrate_crosstalk(const Heatmap &h, const KernelRegion &kernel, const UnitCellModel &model,
                                         const LatticeOptions &opts = {});

// Correlation of a heatmap with the model seen through a candidate matrix.
double model_agreement(const Heatmap &h, const UnitCellModel &model, const CrosstalkMatrix &cm,
                       double winsorize = 0.05);

}  // namespace cos2phi

#endif  // COS2PHI_CALIBRATION_HPP
