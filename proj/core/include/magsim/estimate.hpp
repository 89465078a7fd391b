#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "magsim/constants.hpp"
#include "magsim/engine.hpp"

namespace magsim {

// Field-to-detuning conversion used by the analysis chain (rad/(s T)).
// The estimation pipeline deliberately uses this linearized constant rather
// than the full Breit-Rabi curve.
inline constexpr double k_detuning_slope = si::two_pi * 9.2777e9;

// Stretch states raise the magnetic susceptibility by this factor.
inline constexpr double k_stretch_susceptibility = 2.5;

// Detection statistics for one free-precession time.
struct FringePoint {
    double t = 0.0;
    int trials = 0;     // initially occupied sites contributing
    int successes = 0;  // of which detected after the sequence
};

struct WeightedPoint {
    double t = 0.0;
    double y = 0.0;
    double sigma = 1.0;
};

enum class FitFailure {
    none,
    insufficient_data,
    no_spectral_peak,
    not_converged,
};

std::string to_string(FitFailure f);

struct FringeFit {
    double omega = 0.0;        // rad/s, >= 0
    double sigma_omega = 0.0;  // rad/s
    double offset = 0.0;       // A
    double amplitude = 0.0;    // C >= 0
    double sigma_amplitude = 0.0;
    double phase = 0.0;        // rad
    int events = 0;            // total trials
    double chi_square = 0.0;
    int dof = 0;
    bool converged = false;
    bool nyquist_ambiguous = false;  // omega within 5% of the grid's Nyquist edge
    FitFailure failure = FitFailure::none;
};

struct FitOptions {
    int oversample = 16;          // spectral grid density vs 1/T_span
    double peak_threshold = 4.0;  // periodogram peak/median screen
    double min_cycles = 0.75;     // lowest searchable frequency, cycles per span
    double min_amplitude_significance = 3.0;  // require C >= k sigma_C after the fit
    int max_candidates = 6;  // spectral peaks tried by the multi-start refiner
    int max_iterations = 200;
    int min_distinct_t = 8;
};

// Weighted nonlinear least squares of offset + amplitude*cos(omega t + phase).
// Frequency is seeded from the dominant peak of the oversampled periodogram
// and refined by Levenberg-Marquardt; sigma_omega comes from the fit
// covariance, scaled by sqrt(reduced chi-square) when that exceeds 1.
FringeFit fit_fringe_weighted(std::span<const WeightedPoint> points, const FitOptions& opts = {});

// Binomial-count front end: weights start from continuity-corrected empirical
// standard errors and are re-derived from the fitted model (IRLS) so the
// reported sigma stays calibrated at low counts.
FringeFit fit_fringe(std::span<const FringePoint> points, const FitOptions& opts = {});

struct DeltaOmega {
    double value = 0.0;  // rad/s
    double sigma = 0.0;  // rad/s
};

// Difference of the test-on and test-off Ramsey frequencies; uncertainties add
// in quadrature. Throws EstimationError on non-converged input.
DeltaOmega delta_omega(const FringeFit& on, const FringeFit& off);

// Linear map delta_omega -> delta_B through k_detuning_slope.
double omega_to_delta_b(double delta_omega_value);

struct SiteEstimate {
    int site = -1;
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    FringeFit on;
    FringeFit off;
    double delta_b = 0.0;        // T
    double sigma_delta_b = 0.0;  // T
    bool valid = false;
    // Set when a fit's sigma is far out of family with the (statistically
    // homogeneous) rest of the map, the signature of a wrong-frequency fit.
    bool sigma_outlier = false;
};

struct FieldMap {
    std::string mode = "array";
    GridGeometry grid;
    std::vector<SiteEstimate> sites;
    std::vector<double> t_values;

    int valid_count() const;
};

// Per-site fringe fits for both field states -> delta omega -> delta B.
// Failed sites are flagged, never dropped. Sites fit independently; `jobs`
// stripes them over worker threads without changing the result.
FieldMap build_field_map(const Dataset& dataset, int jobs = 1);

struct GradientFit {
    double slope = 0.0;       // T/m along x
    double intercept = 0.0;   // T
    double sigma_slope = 0.0;
    double sigma_intercept = 0.0;
    double slope_y = 0.0;       // plane fits only
    double sigma_slope_y = 0.0;
    int row = -1;  // -1 marks a plane fit
    int n_sites = 0;
};

GradientFit fit_row_gradient(const FieldMap& map, int row);
GradientFit fit_plane(const FieldMap& map);

struct ResolutionReport {
    double mean_sigma_b = 0.0;     // T
    double spread_sigma_b = 0.0;   // T, site-to-site scatter
    double stretch_sigma_b = 0.0;  // mean / 2.5
    int n_sites = 0;
};

ResolutionReport resolution(const FieldMap& map);

struct SensitivityReport {
    double delta_b = 0.0;              // T, resolution input
    double mean_events = 0.0;          // contributing events per site
    double mean_t = 0.0;               // s, average free precession per event
    double total_coherent_time = 0.0;  // s, per-site mean of sum T_i
    double sensitivity = 0.0;          // T/sqrt(Hz)
    double stretch_delta_b = 0.0;
    double stretch_sensitivity = 0.0;
    double lab_cycle_rate = 0.0;           // cycles/s
    double lab_one_hour_resolution = 0.0;  // T, assembled sub-array + stretch states
};

// Arithmetic helpers, exact by construction.
double coherent_time(double n_events, double mean_t);
double sensitivity_value(double delta_b, double total_time);
double lab_time_resolution(double delta_b_ref, double coherent_time_ref, double mean_t,
                           double cycle_rate, double duration, double occupancy,
                           double prep_efficiency, double susceptibility);

// Event bookkeeping from the dataset: contributing events are initially
// occupied shots weighted by the preparation efficiency echoed in the header.
SensitivityReport sensitivity(const FieldMap& map, const Dataset& dataset,
                              double cycle_rate = 10.0);

}  // namespace magsim
