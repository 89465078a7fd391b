#pragma once

#include <limits>

#include "magsim/constants.hpp"

namespace magsim {

// Two-photon Ramsey drive parameters. A proper pi/2 pulse has
// rabi_frequency * pulse_duration ~= pi/2; the model accepts any pulse area.
struct RamseyParams {
    double rabi_frequency = si::two_pi * 0.6e6;   // rad/s, on resonance
    double pulse_duration = 0.42e-6;              // s
    double two_photon_difference = 0.0;           // rad/s, Delta_12
    double contrast = 1.0;                        // C0 in [0,1]
    double coherence_time = std::numeric_limits<double>::infinity();  // s
};

// Energy of |F = I +/- 1/2, m> at field b (rad/s), full Breit-Rabi expression.
// upper_branch selects F = I + 1/2.
double breit_rabi_level(double b_field, bool upper_branch, int m, const AtomicConstants& k);

// Splitting between |up> and |down> at field b (rad/s). For same-m pairs this
// reduces to hyperfine_splitting * sqrt(1 + 4 m x / (2I+1) + x^2).
double breit_rabi_splitting(double b_field, const SensorStates& s, const AtomicConstants& k);

// Closed-form d(splitting)/dB in rad/(s T).
double breit_rabi_slope(double b_field, const SensorStates& s, const AtomicConstants& k);

// Ratio of the stretch pair's |d(splitting)/dB| to the default pair's
// (~2.5 for Rb-85 in the linear regime).
double stretch_susceptibility_ratio(double b_field, const AtomicConstants& k);

// delta_eff = Delta_12 - (splitting(B) + light shift). For the m = -1 pair the
// splitting decreases with B over the operating range, so delta_eff grows with
// B at ~ +2pi x 9.28 kHz/uT around 283 uT.
double effective_detuning(double delta12, double b_local, double light_shift,
                          const SensorStates& s, const AtomicConstants& k);

// Probability of ending in |down> after pi/2 - free precession(T) - pi/2,
// composed from the exact two-level rotating-frame unitaries, then pulled
// toward 1/2 by contrast * exp(-T/coherence_time). start_in_down covers
// residual |down> population after preparation.
double ramsey_down_probability(double detuning, double free_time, const RamseyParams& p,
                               bool start_in_down = false);

// Estimator's fringe model f(T) = offset + amplitude * cos(omega T + phase).
double fringe_model(double t, double offset, double amplitude, double omega, double phase);

}  // namespace magsim
