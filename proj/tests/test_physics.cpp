#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "magsim/physics.hpp"
#include "magsim/rng.hpp"
#include "oracles.hpp"

using namespace magsim;

namespace {
const AtomicConstants kRb = AtomicConstants::rb85();
const SensorStates kPair = SensorStates::default_pair();
constexpr double kPaperSlope = si::two_pi * 9.2777e9;  // rad/(s T)

RamseyParams ideal_half_pi() {
    RamseyParams p;
    p.rabi_frequency = si::two_pi * 0.6e6;
    p.pulse_duration = 0.25 * si::two_pi / p.rabi_frequency;  // exact pi/2 area
    return p;
}
}  // namespace

TEST_CASE("splitting at zero field is the hyperfine interval exactly") {
    CHECK(breit_rabi_splitting(0.0, kPair, kRb) == kRb.hyperfine_splitting);
}

TEST_CASE("field slope at the operating point matches 9.2777 kHz/uT") {
    const double slope = breit_rabi_slope(283e-6, kPair, kRb);
    CHECK(std::abs(std::abs(slope) - kPaperSlope) / kPaperSlope < 1e-3);
    // The splitting decreases with B for this pair; the detuning grows.
    CHECK(slope < 0.0);

    const double fd = oracle::fd_derivative(
        [&](double b) { return breit_rabi_splitting(b, kPair, kRb); }, 283e-6, 1e-9);
    CHECK(std::abs(std::abs(fd) - kPaperSlope) / kPaperSlope < 1e-3);
}

TEST_CASE("low-field slope limit is (1/3)(gJ - gI) muB/hbar") {
    const double expected =
        -(kRb.electron_g - kRb.nuclear_g) * kRb.bohr_magneton_over_hbar / 3.0;
    const double fd = oracle::fd_derivative(
        [&](double b) { return breit_rabi_splitting(b, kPair, kRb); }, 2e-9, 1e-9);
    CHECK(fd == doctest::Approx(expected).epsilon(1e-5));
}

TEST_CASE("closed-form derivative matches finite differences on a 1 uT grid") {
    for (int i = 1; i <= 1000; ++i) {
        const double b = i * 1e-6;
        const double analytic = breit_rabi_slope(b, kPair, kRb);
        const double fd = oracle::fd_derivative(
            [&](double x) { return breit_rabi_splitting(x, kPair, kRb); }, b, 5e-9);
        CHECK(std::abs(fd - analytic) / std::abs(analytic) < 1e-6);
    }
}

TEST_CASE("effective detuning vanishes on resonance and is linear") {
    const double b = 283e-6;
    const double light = si::two_pi * 1.1e3;
    const double delta12 = breit_rabi_splitting(b, kPair, kRb) + light;
    CHECK(effective_detuning(delta12, b, light, kPair, kRb) == doctest::Approx(0.0));

    // Linear (affine with slope 1 / -1) in delta12 and light shift, exactly.
    const double base = effective_detuning(delta12, b, light, kPair, kRb);
    CHECK(effective_detuning(delta12 + 123.0, b, light, kPair, kRb) == base + 123.0);
    CHECK(effective_detuning(delta12, b, light + 57.0, kPair, kRb) == base - 57.0);
}

TEST_CASE("paper-default scene detunes to 2pi x 38.7 kHz and grows with B") {
    const double b = 283e-6;
    const double delta12 = breit_rabi_splitting(b, kPair, kRb) + si::two_pi * 38.7e3;
    const double d0 = effective_detuning(delta12, b, 0.0, kPair, kRb);
    // The subtraction cancels ~1.9e10 rad/s, so allow roundoff at that scale.
    CHECK(d0 == doctest::Approx(si::two_pi * 38.7e3).epsilon(1e-9));

    const double d1 = effective_detuning(delta12, b + 1e-6, 0.0, kPair, kRb);
    CHECK(std::abs((d1 - d0) - kPaperSlope * 1e-6) / (kPaperSlope * 1e-6) < 1e-3);
    CHECK(d1 > d0);
}

TEST_CASE("two ideal pi/2 pulses on resonance always transfer") {
    const RamseyParams p = ideal_half_pi();
    for (double t : {0.0, 1e-6, 20e-6, 110e-6}) {
        CHECK(ramsey_down_probability(0.0, t, p) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("short-pulse limit reduces to the cosine fringe") {
    RamseyParams p;
    p.pulse_duration = 1e-16;  // corrections scale as delta/Omega ~ 1.5e-11
    p.rabi_frequency = 0.25 * si::two_pi / p.pulse_duration;
    const double delta = si::two_pi * 38.7e3;
    for (double t : {1e-6, 7.3e-6, 52e-6, 110e-6}) {
        const double expected = 0.5 * (1.0 + std::cos(delta * t));
        CHECK(ramsey_down_probability(delta, t, p) == doctest::Approx(expected).epsilon(1e-9));
    }
    const double t_node = std::numbers::pi / delta;
    CHECK(ramsey_down_probability(delta, t_node, p) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("finite-pulse probability matches Schroedinger integration") {
    RamseyParams p;  // paper pulse parameters
    const double fixed = ramsey_down_probability(si::two_pi * 38.7e3, 20e-6, p);
    const double ode = oracle::ramsey_by_integration(p.rabi_frequency, si::two_pi * 38.7e3,
                                                     p.pulse_duration, 20e-6);
    CHECK(std::abs(fixed - ode) < 1e-6);

    Rng rng(20240811);
    for (int i = 0; i < 60; ++i) {
        RamseyParams q;
        q.rabi_frequency = si::two_pi * rng.uniform(0.3e6, 1.0e6);
        q.pulse_duration = rng.uniform(0.1e-6, 1.0e-6);
        const double delta = si::two_pi * rng.uniform(-250e3, 250e3);
        const double t = rng.uniform(0.0, 110e-6);
        const double got = ramsey_down_probability(delta, t, q);
        const double want = oracle::ramsey_by_integration(q.rabi_frequency, delta,
                                                          q.pulse_duration, t);
        CHECK(std::abs(got - want) < 1e-6);
    }
}

TEST_CASE("probability stays in [0,1] for arbitrary parameters") {
    Rng rng(7);
    for (int i = 0; i < 500; ++i) {
        RamseyParams p;
        p.rabi_frequency = si::two_pi * rng.uniform(0.0, 2e6);
        p.pulse_duration = rng.uniform(0.0, 2e-6);
        p.contrast = rng.uniform(0.0, 1.0);
        p.coherence_time = rng.bernoulli(0.5) ? rng.uniform(1e-6, 1e-3)
                                              : std::numeric_limits<double>::infinity();
        const double delta = si::two_pi * rng.uniform(-500e3, 500e3);
        const double t = rng.uniform(0.0, 200e-6);
        const double prob = ramsey_down_probability(delta, t, p, rng.bernoulli(0.2));
        CHECK(prob >= 0.0);
        CHECK(prob <= 1.0);
    }
}

TEST_CASE("contrast and decoherence pull the fringe toward 1/2") {
    RamseyParams p = ideal_half_pi();
    p.contrast = 0.5;
    CHECK(ramsey_down_probability(0.0, 1e-6, p) == doctest::Approx(0.75));
    p.coherence_time = 10e-6;
    const double damped = ramsey_down_probability(0.0, 10e-6, p);
    CHECK(damped == doctest::Approx(0.5 + 0.25 * std::exp(-1.0)));
}

TEST_CASE("fringe model basics") {
    // Zero amplitude: constant offset.
    for (double t : {0.0, 1e-6, 9e-6}) CHECK(fringe_model(t, 0.31, 0.0, 1e5, 0.4) == 0.31);

    // One full period later the model returns to offset + amplitude.
    const double omega = si::two_pi * 38.7e3;
    const double period = si::two_pi / omega;
    CHECK(period == doctest::Approx(25.84e-6).epsilon(1e-3));
    CHECK(fringe_model(period, 0.3, 0.15, omega, 0.0) ==
          doctest::Approx(0.45).epsilon(1e-12));

    // Half-period antisymmetry: f(T) + f(T + pi/omega) = 2A.
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const double t = rng.uniform(0.0, 1e-4);
        const double a = rng.uniform(0.2, 0.8);
        const double c = rng.uniform(0.0, 0.2);
        const double ph = rng.uniform(0.0, si::two_pi);
        const double sum = fringe_model(t, a, c, omega, ph) +
                           fringe_model(t + std::numbers::pi / omega, a, c, omega, ph);
        CHECK(sum == doctest::Approx(2.0 * a).epsilon(1e-12));
    }
}

TEST_CASE("stretch pair is 2.5x more susceptible") {
    const double ratio = stretch_susceptibility_ratio(1e-6, kRb);
    CHECK(ratio == doctest::Approx(2.5).epsilon(2e-3));
}
