#pragma once

#include <numbers>

namespace magsim {

namespace si {
inline constexpr double k_boltzmann = 1.380649e-23;      // J/K
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double bohr_magneton = 9.2740100783e-24;  // J/T
inline constexpr double two_pi = 2.0 * std::numbers::pi;
}  // namespace si

// Ground-state constants of the sensing species. Defaults are the standard
// Rb-85 5S1/2 values; nuclear_g uses the Bohr-magneton sign convention.
struct AtomicConstants {
    double hyperfine_splitting;       // rad/s, zero-field F=2 -> F=3 interval
    double electron_g;                // g_J
    double nuclear_g;                 // g_I
    double nuclear_spin;              // I
    double bohr_magneton_over_hbar;   // rad/(s T)

    static AtomicConstants rb85() {
        return {si::two_pi * 3.035732439e9, 2.00233113, -0.00029364, 2.5,
                si::bohr_magneton / si::hbar};
    }
};

// The sensing pair |up> = |F=I+1/2, m_up>, |down> = |F=I-1/2, m_down>.
// The default pair shares m = -1 so the nuclear-g terms cancel in the
// splitting; the stretch pair maximizes |m_F| in both manifolds.
struct SensorStates {
    int m_up = -1;
    int m_down = -1;

    bool same_m() const { return m_up == m_down; }

    static SensorStates default_pair() { return {-1, -1}; }
    static SensorStates stretch_pair() { return {-3, -2}; }
};

}  // namespace magsim
