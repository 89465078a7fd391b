#include "magsim/physics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace magsim {

namespace {

double field_parameter(double b_field, const AtomicConstants& k) {
    return (k.electron_g - k.nuclear_g) * k.bohr_magneton_over_hbar * b_field /
           k.hyperfine_splitting;
}

double dx_db(const AtomicConstants& k) {
    return (k.electron_g - k.nuclear_g) * k.bohr_magneton_over_hbar / k.hyperfine_splitting;
}

double radicand(double x, int m, const AtomicConstants& k) {
    return 1.0 + 4.0 * m * x / (2.0 * k.nuclear_spin + 1.0) + x * x;
}

}  // namespace

double breit_rabi_level(double b_field, bool upper_branch, int m, const AtomicConstants& k) {
    if (b_field < 0.0) throw std::invalid_argument("breit_rabi_level: negative field");
    const double x = field_parameter(b_field, k);
    const double zeeman = k.nuclear_g * k.bohr_magneton_over_hbar * m * b_field;
    const double sign = upper_branch ? 1.0 : -1.0;
    return -k.hyperfine_splitting / (2.0 * (2.0 * k.nuclear_spin + 1.0)) + zeeman +
           sign * 0.5 * k.hyperfine_splitting * std::sqrt(radicand(x, m, k));
}

double breit_rabi_splitting(double b_field, const SensorStates& s, const AtomicConstants& k) {
    if (s.same_m()) {
        // Nuclear Zeeman terms cancel for equal m.
        const double x = field_parameter(b_field, k);
        if (b_field < 0.0) throw std::invalid_argument("breit_rabi_splitting: negative field");
        return k.hyperfine_splitting * std::sqrt(radicand(x, s.m_up, k));
    }
    return breit_rabi_level(b_field, true, s.m_up, k) -
           breit_rabi_level(b_field, false, s.m_down, k);
}

double breit_rabi_slope(double b_field, const SensorStates& s, const AtomicConstants& k) {
    if (b_field < 0.0) throw std::invalid_argument("breit_rabi_slope: negative field");
    const double x = field_parameter(b_field, k);
    const double dx = dx_db(k);
    const double denom = 2.0 * k.nuclear_spin + 1.0;
    auto branch_slope = [&](bool upper, int m) {
        const double sign = upper ? 1.0 : -1.0;
        const double root = std::sqrt(radicand(x, m, k));
        return k.nuclear_g * k.bohr_magneton_over_hbar * m +
               sign * 0.25 * k.hyperfine_splitting * (4.0 * m / denom + 2.0 * x) / root * dx;
    };
    return branch_slope(true, s.m_up) - branch_slope(false, s.m_down);
}

double stretch_susceptibility_ratio(double b_field, const AtomicConstants& k) {
    const double ref = breit_rabi_slope(b_field, SensorStates::default_pair(), k);
    const double stretch = breit_rabi_slope(b_field, SensorStates::stretch_pair(), k);
    return std::abs(stretch) / std::abs(ref);
}

double effective_detuning(double delta12, double b_local, double light_shift,
                          const SensorStates& s, const AtomicConstants& k) {
    return delta12 - (breit_rabi_splitting(b_local, s, k) + light_shift);
}

double ramsey_down_probability(double detuning, double free_time, const RamseyParams& p,
                               bool start_in_down) {
    if (free_time < 0.0) throw std::invalid_argument("ramsey_down_probability: negative T");
    using cd = std::complex<double>;
    const cd img(0.0, 1.0);

    // Rotating-frame pulse unitary exp(-i (Omega sx - delta sz) tau / 2).
    const double omega_g = std::hypot(p.rabi_frequency, detuning);
    const double half = 0.5 * omega_g * p.pulse_duration;
    const double c = std::cos(half);
    const double sn = std::sin(half);
    const double nx = omega_g > 0.0 ? p.rabi_frequency / omega_g : 0.0;
    const double nz = omega_g > 0.0 ? -detuning / omega_g : 0.0;
    const cd u00 = c - img * nz * sn;
    const cd u01 = -img * nx * sn;
    const cd u11 = c + img * nz * sn;

    // Free precession exp(+i delta T sz / 2) in the (up, down) basis.
    const cd f0 = std::polar(1.0, 0.5 * detuning * free_time);
    const cd f1 = std::conj(f0);

    const cd a0 = start_in_down ? cd(0.0) : cd(1.0);
    const cd a1 = start_in_down ? cd(1.0) : cd(0.0);
    cd b0 = u00 * a0 + u01 * a1;
    cd b1 = u01 * a0 + u11 * a1;
    b0 *= f0;
    b1 *= f1;
    const cd down_amp = u01 * b0 + u11 * b1;
    const double bare = std::norm(down_amp);

    double envelope = p.contrast;
    if (std::isfinite(p.coherence_time)) envelope *= std::exp(-free_time / p.coherence_time);
    const double prob = 0.5 + (bare - 0.5) * envelope;
    return std::clamp(prob, 0.0, 1.0);
}

double fringe_model(double t, double offset, double amplitude, double omega, double phase) {
    return offset + amplitude * std::cos(omega * t + phase);
}

}  // namespace magsim
