#ifndef COS2PHI_CONSTANTS_HPP
#define COS2PHI_CONSTANTS_HPP

#include <numbers>

namespace cos2phi {

// CODATA 2018 exact SI values.
struct PhysicalConstants {
    static constexpr double planck_h = 6.62607015e-34;       // J s
    static constexpr double hbar = planck_h / (2.0 * std::numbers::pi);
    static constexpr double boltzmann_kB = 1.380649e-23;     // J/K
    static constexpr double electron_charge_e = 1.602176634e-19;  // C
    static constexpr double flux_quantum_Phi0 = planck_h / (2.0 * electron_charge_e);  // Wb
    static constexpr double resistance_quantum_RK =
        planck_h / (electron_charge_e * electron_charge_e);  // Ohm
};

using Const = PhysicalConstants;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kGHz = 1e9;

}  // namespace cos2phi

#endif  // COS2PHI_CONSTANTS_HPP
