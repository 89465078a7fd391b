#include "magsim/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <thread>

#include "magsim/errors.hpp"

namespace magsim {

namespace {

struct ScaledData {
    std::vector<double> tau;  // (t - t_mid) / t_scale
    double t_mid = 0.0;
    double t_scale = 1.0;
    double t_span = 0.0;
    double dt_min = 0.0;  // smallest grid spacing, sets the Nyquist edge
};

ScaledData scale_times(std::span<const WeightedPoint> pts) {
    ScaledData d;
    double t_min = pts.front().t, t_max = pts.front().t;
    std::vector<double> sorted;
    sorted.reserve(pts.size());
    for (const auto& p : pts) {
        t_min = std::min(t_min, p.t);
        t_max = std::max(t_max, p.t);
        sorted.push_back(p.t);
    }
    std::sort(sorted.begin(), sorted.end());
    double dt = t_max - t_min;
    for (size_t i = 1; i < sorted.size(); ++i) {
        const double gap = sorted[i] - sorted[i - 1];
        if (gap > 0.0) dt = std::min(dt, gap);
    }
    d.t_mid = 0.5 * (t_min + t_max);
    d.t_span = t_max - t_min;
    d.t_scale = d.t_span > 0.0 ? 0.5 * d.t_span : 1.0;
    d.dt_min = dt;
    d.tau.reserve(pts.size());
    for (const auto& p : pts) d.tau.push_back((p.t - d.t_mid) / d.t_scale);
    return d;
}

struct SpectralScan {
    std::vector<double> candidates;  // start frequencies, strongest first
    double peak_ratio = 0.0;         // global peak over median power
};

// Oversampled periodogram of the demeaned data. Demeaning is unweighted:
// binomial weights overweight empty bins and leak power into the quasi-DC
// bins that the initializer must not pick. Frequencies below min_cycles over
// the span are excluded for the same reason (offset-frequency degeneracy).
// Returns the strongest well-separated local maxima; the refiner starts from
// each and keeps the best chi-square, which guards against sidelobe capture.
SpectralScan spectral_scan(std::span<const WeightedPoint> pts, const ScaledData& sd,
                           const FitOptions& opts) {
    SpectralScan scan;
    double ymean = 0.0;
    for (const auto& p : pts) ymean += p.y;
    ymean /= static_cast<double>(pts.size());

    const double nyquist = std::numbers::pi / sd.dt_min;
    const double step = si::two_pi / (sd.t_span * opts.oversample);
    const double omega_lo = std::max(step, si::two_pi * opts.min_cycles / sd.t_span);
    std::vector<double> power;
    std::vector<double> omegas;
    for (double omega = omega_lo; omega < 0.999 * nyquist; omega += step) {
        std::complex<double> acc(0.0, 0.0);
        for (size_t i = 0; i < pts.size(); ++i) {
            acc += (pts[i].y - ymean) * std::polar(1.0, -omega * (pts[i].t - sd.t_mid));
        }
        power.push_back(std::norm(acc));
        omegas.push_back(omega);
    }
    if (power.empty()) return scan;

    // Local maxima, strongest first, separated by at least half a natural
    // resolution bin (sidelobe capture shifts the peak by about that much, and
    // the true lobe must stay in the candidate set).
    std::vector<size_t> order(power.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return power[a] > power[b]; });
    const double separation = std::numbers::pi / sd.t_span;
    for (const size_t idx : order) {
        if (scan.candidates.size() >= static_cast<size_t>(opts.max_candidates)) break;
        const bool local_max =
            (idx == 0 || power[idx] >= power[idx - 1]) &&
            (idx + 1 == power.size() || power[idx] >= power[idx + 1]);
        if (!local_max) continue;
        bool crowded = false;
        for (const double chosen : scan.candidates)
            if (std::abs(omegas[idx] - chosen) < separation) crowded = true;
        if (!crowded) scan.candidates.push_back(omegas[idx]);
    }

    const double best_power = power[order.front()];
    std::nth_element(power.begin(), power.begin() + power.size() / 2, power.end());
    const double median = std::max(power[power.size() / 2], 1e-300);
    scan.peak_ratio = best_power / median;
    return scan;
}

struct CoreParams {
    double a = 0.0;  // offset
    double p = 0.0;  // cos coefficient
    double q = 0.0;  // sin coefficient
    double w = 0.0;  // omega in scaled time units
};

// Weighted linear solve for (a, p, q) at fixed frequency.
CoreParams linear_init(std::span<const WeightedPoint> pts, const ScaledData& sd,
                       double w_scaled) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (size_t i = 0; i < pts.size(); ++i) {
        const double weight = 1.0 / (pts[i].sigma * pts[i].sigma);
        const Eigen::Vector3d basis(1.0, std::cos(w_scaled * sd.tau[i]),
                                    std::sin(w_scaled * sd.tau[i]));
        m += weight * basis * basis.transpose();
        rhs += weight * pts[i].y * basis;
    }
    const Eigen::Vector3d sol = m.ldlt().solve(rhs);
    return {sol(0), sol(1), sol(2), w_scaled};
}

double chi_square(std::span<const WeightedPoint> pts, const ScaledData& sd,
                  const CoreParams& c) {
    double chi2 = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        const double f = c.a + c.p * std::cos(c.w * sd.tau[i]) + c.q * std::sin(c.w * sd.tau[i]);
        const double r = (pts[i].y - f) / pts[i].sigma;
        chi2 += r * r;
    }
    return chi2;
}

struct CoreFit {
    CoreParams params;
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
    double chi2 = 0.0;
    bool converged = false;
};

// Levenberg-Marquardt on (a, p, q, w) in scaled time.
CoreFit refine(std::span<const WeightedPoint> pts, const ScaledData& sd, CoreParams c,
               int max_iterations) {
    CoreFit out;
    double lambda = 1e-3;
    double chi2 = chi_square(pts, sd, c);
    bool stalled = false;
    for (int iter = 0; iter < max_iterations && !stalled; ++iter) {
        Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
        Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
        for (size_t i = 0; i < pts.size(); ++i) {
            const double cs = std::cos(c.w * sd.tau[i]);
            const double sn = std::sin(c.w * sd.tau[i]);
            const double inv_sigma = 1.0 / pts[i].sigma;
            Eigen::Vector4d j(1.0, cs, sn, sd.tau[i] * (-c.p * sn + c.q * cs));
            j *= inv_sigma;
            const double f = c.a + c.p * cs + c.q * sn;
            const double r = (pts[i].y - f) * inv_sigma;
            jtj += j * j.transpose();
            jtr += j * r;
        }
        bool improved = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::Matrix4d damped = jtj;
            for (int k = 0; k < 4; ++k) damped(k, k) *= 1.0 + lambda;
            const Eigen::Vector4d step = damped.ldlt().solve(jtr);
            CoreParams trial{c.a + step(0), c.p + step(1), c.q + step(2), c.w + step(3)};
            const double trial_chi2 = chi_square(pts, sd, trial);
            if (trial_chi2 <= chi2) {
                const double scale =
                    std::max({std::abs(c.a), std::abs(c.p), std::abs(c.q), std::abs(c.w), 1e-12});
                const double rel_step = step.cwiseAbs().maxCoeff() / scale;
                const double dchi = chi2 - trial_chi2;
                c = trial;
                chi2 = trial_chi2;
                lambda = std::max(lambda / 3.0, 1e-14);
                improved = true;
                if (rel_step < 1e-14 || dchi < 1e-15 * (chi2 + 1e-30)) stalled = true;
                break;
            }
            lambda *= 8.0;
        }
        if (!improved) break;
    }

    // Covariance from the undamped normal matrix at the solution.
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
    for (size_t i = 0; i < pts.size(); ++i) {
        const double cs = std::cos(c.w * sd.tau[i]);
        const double sn = std::sin(c.w * sd.tau[i]);
        Eigen::Vector4d j(1.0, cs, sn, sd.tau[i] * (-c.p * sn + c.q * cs));
        j /= pts[i].sigma;
        jtj += j * j.transpose();
    }
    out.params = c;
    out.covariance = jtj.inverse();
    out.chi2 = chi2;
    out.converged = jtj.fullPivLu().isInvertible();
    return out;
}

FringeFit assemble_fit(const CoreFit& core, const ScaledData& sd, int events, int n_points,
                       const FitOptions& opts) {
    FringeFit fit;
    CoreParams c = core.params;
    if (c.w < 0.0) {  // cos(-wt) = cos(wt), sin flips sign
        c.w = -c.w;
        c.q = -c.q;
    }
    fit.omega = c.w / sd.t_scale;
    fit.offset = c.a;
    fit.amplitude = std::hypot(c.p, c.q);
    // f = A + P cos(w tau) + Q sin(w tau) = A + C cos(omega (t - t_mid) + phi')
    double phase = std::atan2(-c.q, c.p) - fit.omega * sd.t_mid;
    phase = std::remainder(phase, si::two_pi);
    fit.phase = phase;

    double chi_scale = 1.0;
    fit.dof = n_points - 4;
    fit.chi_square = core.chi2;
    if (fit.dof > 0 && core.chi2 / fit.dof > 1.0) chi_scale = std::sqrt(core.chi2 / fit.dof);
    fit.sigma_omega = std::sqrt(std::max(core.covariance(3, 3), 0.0)) / sd.t_scale * chi_scale;
    // Delta-method variance of C = hypot(P, Q).
    if (fit.amplitude > 0.0) {
        const double var_c = (c.p * c.p * core.covariance(1, 1) +
                              c.q * c.q * core.covariance(2, 2) +
                              2.0 * c.p * c.q * core.covariance(1, 2)) /
                             (fit.amplitude * fit.amplitude);
        fit.sigma_amplitude = std::sqrt(std::max(var_c, 0.0)) * chi_scale;
    }
    fit.events = events;

    const double nyquist = std::numbers::pi / sd.dt_min;
    fit.nyquist_ambiguous = fit.omega > 0.95 * nyquist;
    fit.converged = core.converged && std::isfinite(fit.sigma_omega) && fit.sigma_omega > 0.0;
    if (!fit.converged) {
        fit.failure = FitFailure::not_converged;
    } else if (fit.sigma_amplitude > 0.0 &&
               fit.amplitude < opts.min_amplitude_significance * fit.sigma_amplitude) {
        // The fitted fringe is indistinguishable from the noise floor.
        fit.converged = false;
        fit.failure = FitFailure::no_spectral_peak;
    }
    return fit;
}

}  // namespace

std::string to_string(FitFailure f) {
    switch (f) {
        case FitFailure::none: return "none";
        case FitFailure::insufficient_data: return "insufficient_data";
        case FitFailure::no_spectral_peak: return "no_spectral_peak";
        case FitFailure::not_converged: return "not_converged";
    }
    return "unknown";
}

FringeFit fit_fringe_weighted(std::span<const WeightedPoint> points, const FitOptions& opts) {
    FringeFit fit;
    std::vector<double> distinct;
    for (const auto& p : points) distinct.push_back(p.t);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (static_cast<int>(distinct.size()) < opts.min_distinct_t) {
        fit.failure = FitFailure::insufficient_data;
        return fit;
    }

    const ScaledData sd = scale_times(points);
    const SpectralScan scan = spectral_scan(points, sd, opts);
    if (scan.peak_ratio < opts.peak_threshold || scan.candidates.empty()) {
        fit.failure = FitFailure::no_spectral_peak;
        return fit;
    }
    CoreFit best;
    bool have = false;
    for (const double omega0 : scan.candidates) {
        const CoreParams init = linear_init(points, sd, omega0 * sd.t_scale);
        const CoreFit core = refine(points, sd, init, opts.max_iterations);
        if (!have || core.chi2 < best.chi2) {
            best = core;
            have = true;
        }
    }
    return assemble_fit(best, sd, static_cast<int>(points.size()),
                        static_cast<int>(points.size()), opts);
}

FringeFit fit_fringe(std::span<const FringePoint> points, const FitOptions& opts) {
    FringeFit fit;
    std::vector<WeightedPoint> pts;
    int events = 0;
    for (const auto& p : points) {
        if (p.trials < 1) continue;
        WeightedPoint w;
        w.t = p.t;
        w.y = static_cast<double>(p.successes) / p.trials;
        // Continuity correction keeps empty and saturated bins weighted.
        const double p_hat = (p.successes == 0 || p.successes == p.trials)
                                 ? (p.successes + 0.5) / (p.trials + 1.0)
                                 : w.y;
        w.sigma = std::sqrt(p_hat * (1.0 - p_hat) / p.trials);
        pts.push_back(w);
        events += p.trials;
    }
    std::vector<double> distinct;
    for (const auto& p : pts) distinct.push_back(p.t);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (static_cast<int>(distinct.size()) < opts.min_distinct_t) {
        fit.failure = FitFailure::insufficient_data;
        return fit;
    }

    const ScaledData sd = scale_times(pts);
    const SpectralScan scan = spectral_scan(pts, sd, opts);
    if (scan.peak_ratio < opts.peak_threshold || scan.candidates.empty()) {
        fit.failure = FitFailure::no_spectral_peak;
        return fit;
    }

    // Multi-start over the spectral candidates; then IRLS: refit with
    // binomial errors of the current model so the weights do not track the
    // realized counts. Candidates are compared on a common (empirical)
    // weighting, since IRLS chi-squares are not comparable across models.
    const std::vector<WeightedPoint> empirical(pts.begin(), pts.end());
    CoreFit best;
    double best_cmp = 0.0;
    bool have = false;
    for (const double omega0 : scan.candidates) {
        std::copy(empirical.begin(), empirical.end(), pts.begin());
        CoreParams params = linear_init(pts, sd, omega0 * sd.t_scale);
        CoreFit core;
        for (int round = 0; round < 3; ++round) {
            core = refine(pts, sd, params, opts.max_iterations);
            params = core.params;
            if (round == 2) break;
            for (size_t i = 0; i < pts.size(); ++i) {
                const double f = params.a + params.p * std::cos(params.w * sd.tau[i]) +
                                 params.q * std::sin(params.w * sd.tau[i]);
                const double fc = std::clamp(f, 1e-4, 1.0 - 1e-4);
                pts[i].sigma = std::sqrt(fc * (1.0 - fc) / points[i].trials);
            }
        }
        const double cmp = chi_square(empirical, sd, core.params);
        if (!have || cmp < best_cmp) {
            best = core;
            best_cmp = cmp;
            have = true;
        }
    }
    fit = assemble_fit(best, sd, events, static_cast<int>(pts.size()), opts);
    return fit;
}

DeltaOmega delta_omega(const FringeFit& on, const FringeFit& off) {
    if (!on.converged || !off.converged)
        throw EstimationError("delta_omega: non-converged fringe fit");
    return {on.omega - off.omega, std::hypot(on.sigma_omega, off.sigma_omega)};
}

double omega_to_delta_b(double delta_omega_value) { return delta_omega_value / k_detuning_slope; }

int FieldMap::valid_count() const {
    return static_cast<int>(std::count_if(sites.begin(), sites.end(),
                                          [](const SiteEstimate& s) { return s.valid; }));
}

FieldMap build_field_map(const Dataset& dataset, int jobs) {
    if (dataset.records.empty()) throw DataError("build_field_map: empty dataset");
    const bool scan = dataset.mode == "scan";
    const int n_sites =
        scan ? static_cast<int>(dataset.positions.size()) : dataset.grid.site_count();

    // T axis inferred from the records themselves; values compare exactly
    // because they share one origin.
    std::vector<double> ts;
    for (const auto& r : dataset.records) ts.push_back(r.t_free);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    const int n_t = static_cast<int>(ts.size());
    auto t_index = [&](double t) {
        return static_cast<int>(std::lower_bound(ts.begin(), ts.end(), t) - ts.begin());
    };

    struct Counts {
        int trials = 0;
        int successes = 0;
    };
    std::vector<Counts> acc(static_cast<size_t>(n_sites) * 2 * n_t);
    bool seen_on = false, seen_off = false;
    for (const auto& r : dataset.records) {
        if (r.site < 0 || r.site >= n_sites) throw DataError("build_field_map: site out of range");
        (r.test_on ? seen_on : seen_off) = true;
        if (!r.occupied_before) continue;
        auto& c = acc[(static_cast<size_t>(r.site) * 2 + (r.test_on ? 1 : 0)) * n_t +
                      t_index(r.t_free)];
        ++c.trials;
        if (r.detected_after) ++c.successes;
    }
    if (!seen_on || !seen_off)
        throw DataError("build_field_map: dataset does not cover both field states");

    FieldMap map;
    map.mode = dataset.mode;
    map.grid = dataset.grid;
    map.t_values = ts;
    map.sites.resize(n_sites);
    auto fit_site = [&](int s) {
        SiteEstimate& est = map.sites[s];
        est.site = s;
        est.position = scan ? dataset.positions[s] : dataset.grid.site_position(s);
        for (int state = 0; state < 2; ++state) {
            std::vector<FringePoint> pts;
            for (int k = 0; k < n_t; ++k) {
                const auto& c = acc[(static_cast<size_t>(s) * 2 + state) * n_t + k];
                if (c.trials > 0) pts.push_back({ts[k], c.trials, c.successes});
            }
            (state == 1 ? est.on : est.off) = fit_fringe(pts);
        }
        if (est.on.converged && est.off.converged) {
            const DeltaOmega d = delta_omega(est.on, est.off);
            est.delta_b = omega_to_delta_b(d.value);
            est.sigma_delta_b = std::abs(omega_to_delta_b(d.sigma));
            est.valid = true;
        }
    };
    jobs = std::max(1, jobs);
    if (jobs == 1) {
        for (int s = 0; s < n_sites; ++s) fit_site(s);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(jobs);
        for (int w = 0; w < jobs; ++w) {
            workers.emplace_back([&, w] {
                for (int s = w; s < n_sites; s += jobs) fit_site(s);
            });
        }
        for (auto& t : workers) t.join();
    }

    // Every site shares the same event statistics, so the per-fit sigma
    // distribution is tight; a fit whose sigma sits far above the map median
    // has almost certainly locked onto noise. Flag those sites.
    auto median_of = [](std::vector<double> v) {
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        return v[v.size() / 2];
    };
    for (int state = 0; state < 2; ++state) {
        std::vector<double> sigmas;
        for (const auto& s : map.sites) {
            const FringeFit& f = state == 1 ? s.on : s.off;
            if (f.converged) sigmas.push_back(f.sigma_omega);
        }
        if (sigmas.size() < 16) continue;
        const double sigma_med = median_of(sigmas);
        const double sigma_cutoff = 1.75 * sigma_med;
        for (auto& s : map.sites) {
            const FringeFit& f = state == 1 ? s.on : s.off;
            if (s.valid && f.sigma_omega > sigma_cutoff) {
                s.valid = false;
                s.sigma_outlier = true;
            }
        }

        // Scale-adaptive frequency consistency: against a tight population
        // (the reference state, or any uniform scene) a fit 5 robust sigma
        // from the median has locked onto a sidelobe; when the frequencies
        // genuinely spread (an applied gradient) the MAD grows with them and
        // the cut stays inert.
        std::vector<double> omegas;
        for (const auto& s : map.sites) {
            const FringeFit& f = state == 1 ? s.on : s.off;
            if (f.converged) omegas.push_back(f.omega);
        }
        const double omega_med = median_of(omegas);
        std::vector<double> dev;
        dev.reserve(omegas.size());
        for (const double w : omegas) dev.push_back(std::abs(w - omega_med));
        const double robust_sigma = std::max(1.4826 * median_of(dev), sigma_med);
        for (auto& s : map.sites) {
            const FringeFit& f = state == 1 ? s.on : s.off;
            if (s.valid && std::abs(f.omega - omega_med) > 5.0 * robust_sigma) {
                s.valid = false;
                s.sigma_outlier = true;
            }
        }
    }
    return map;
}

namespace {

GradientFit weighted_line(const std::vector<Eigen::Vector3d>& xyw_sigma, int row) {
    // Points carry (x, delta_b, sigma).
    double sw = 0, swx = 0, swxx = 0, swy = 0, swxy = 0;
    for (const auto& p : xyw_sigma) {
        const double w = 1.0 / (p.z() * p.z());
        sw += w;
        swx += w * p.x();
        swxx += w * p.x() * p.x();
        swy += w * p.y();
        swxy += w * p.x() * p.y();
    }
    const double det = sw * swxx - swx * swx;
    if (det <= 0.0) throw EstimationError("gradient fit: degenerate abscissae");
    GradientFit fit;
    fit.slope = (sw * swxy - swx * swy) / det;
    fit.intercept = (swxx * swy - swx * swxy) / det;
    fit.sigma_slope = std::sqrt(sw / det);
    fit.sigma_intercept = std::sqrt(swxx / det);
    fit.row = row;
    fit.n_sites = static_cast<int>(xyw_sigma.size());
    return fit;
}

}  // namespace

GradientFit fit_row_gradient(const FieldMap& map, int row) {
    if (map.mode != "array") throw EstimationError("fit_row_gradient: array-mode map required");
    if (row < 0 || row >= map.grid.rows) throw EstimationError("fit_row_gradient: bad row");
    std::vector<Eigen::Vector3d> pts;
    for (const auto& s : map.sites) {
        if (!s.valid) continue;
        if (map.grid.row_col(s.site).first != row) continue;
        pts.emplace_back(s.position.x(), s.delta_b, s.sigma_delta_b);
    }
    if (pts.size() < 3)
        throw EstimationError("fit_row_gradient: fewer than 3 converged sites in row");
    return weighted_line(pts, row);
}

GradientFit fit_plane(const FieldMap& map) {
    if (map.mode != "array") throw EstimationError("fit_plane: array-mode map required");
    std::vector<const SiteEstimate*> pts;
    for (const auto& s : map.sites)
        if (s.valid) pts.push_back(&s);
    if (pts.size() < 4) throw EstimationError("fit_plane: fewer than 4 converged sites");

    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (const auto* s : pts) {
        const double w = 1.0 / (s->sigma_delta_b * s->sigma_delta_b);
        const Eigen::Vector3d basis(1.0, s->position.x(), s->position.y());
        m += w * basis * basis.transpose();
        rhs += w * s->delta_b * basis;
    }
    const Eigen::Matrix3d cov = m.inverse();
    const Eigen::Vector3d sol = cov * rhs;
    GradientFit fit;
    fit.intercept = sol(0);
    fit.slope = sol(1);
    fit.slope_y = sol(2);
    fit.sigma_intercept = std::sqrt(cov(0, 0));
    fit.sigma_slope = std::sqrt(cov(1, 1));
    fit.sigma_slope_y = std::sqrt(cov(2, 2));
    fit.row = -1;
    fit.n_sites = static_cast<int>(pts.size());
    return fit;
}

ResolutionReport resolution(const FieldMap& map) {
    ResolutionReport rep;
    double sum = 0.0;
    for (const auto& s : map.sites) {
        if (!s.valid) continue;
        sum += s.sigma_delta_b;
        ++rep.n_sites;
    }
    if (rep.n_sites == 0) throw EstimationError("resolution: no converged sites");
    rep.mean_sigma_b = sum / rep.n_sites;
    double var = 0.0;
    for (const auto& s : map.sites) {
        if (!s.valid) continue;
        var += (s.sigma_delta_b - rep.mean_sigma_b) * (s.sigma_delta_b - rep.mean_sigma_b);
    }
    rep.spread_sigma_b = rep.n_sites > 1 ? std::sqrt(var / (rep.n_sites - 1)) : 0.0;
    rep.stretch_sigma_b = rep.mean_sigma_b / k_stretch_susceptibility;
    return rep;
}

double coherent_time(double n_events, double mean_t) { return n_events * mean_t; }

double sensitivity_value(double delta_b, double total_time) {
    if (total_time <= 0.0) throw EstimationError("sensitivity: no coherent evolution time");
    return delta_b * std::sqrt(total_time);
}

double lab_time_resolution(double delta_b_ref, double coherent_time_ref, double mean_t,
                           double cycle_rate, double duration, double occupancy,
                           double prep_efficiency, double susceptibility) {
    const double accumulated = cycle_rate * duration * occupancy * prep_efficiency * mean_t;
    if (accumulated <= 0.0) throw EstimationError("lab_time_resolution: no accumulated time");
    return delta_b_ref * std::sqrt(coherent_time_ref / accumulated) / susceptibility;
}

SensitivityReport sensitivity(const FieldMap& map, const Dataset& dataset, double cycle_rate) {
    const int n_sites = static_cast<int>(map.sites.size());
    std::vector<double> sum_t(n_sites, 0.0);
    std::vector<long> occupied(n_sites, 0);
    for (const auto& r : dataset.records) {
        if (!r.occupied_before) continue;
        if (r.site < 0 || r.site >= n_sites) continue;
        sum_t[r.site] += r.t_free;
        ++occupied[r.site];
    }
    double total_events = 0.0, total_time = 0.0;
    long total_occupied = 0;
    for (int s = 0; s < n_sites; ++s) {
        total_occupied += occupied[s];
        total_events += dataset.p_prepare * occupied[s];
        total_time += dataset.p_prepare * sum_t[s];
    }
    if (total_occupied == 0) throw EstimationError("sensitivity: zero events");

    SensitivityReport rep;
    const ResolutionReport res = resolution(map);
    rep.delta_b = res.mean_sigma_b;
    rep.mean_events = total_events / n_sites;
    rep.mean_t = total_time / total_events;
    rep.total_coherent_time = total_time / n_sites;
    rep.sensitivity = sensitivity_value(rep.delta_b, rep.total_coherent_time);
    rep.stretch_delta_b = rep.delta_b / k_stretch_susceptibility;
    rep.stretch_sensitivity = rep.sensitivity / k_stretch_susceptibility;
    rep.lab_cycle_rate = cycle_rate;
    rep.lab_one_hour_resolution =
        lab_time_resolution(rep.delta_b, rep.total_coherent_time, rep.mean_t, cycle_rate, 3600.0,
                            1.0, 1.0, k_stretch_susceptibility);
    return rep;
}

}  // namespace magsim
