// Closed-form spin-wave decay models and their calibration.
//
// Radial diffusion of atoms out of the probe mode gives
//   eta(t) / eta(0) = 4 w^2 w'^2 / (w^2 + w'^2)^2,   w'^2 = w^2 + 8 D t,
// with D = D0 * P0 / P set by the buffer-gas pressure. A linear longitudinal
// field gradient B' dephases the uniform spin wave as
//   eta(t) / eta(0) = sinc^2(B' E_B L t / 2),
// with sinc x = sin x / x (unnormalized). A uniform offset field shifts the
// global phase only and drops out.

#pragma once

#include <vector>

#include "qmem/nelder_mead.hpp"

namespace qmem {

struct DiffusionParams {
    double w = 0.0;        // 1/e^2 probe beam radius, m
    double d0 = 0.0;       // diffusion constant at reference pressure, m^2/s
    double p0 = 760.0;     // reference pressure, Torr
    double pressure = 0.0; // buffer pressure, Torr

    double d_eff() const { return d0 * p0 / pressure; }
    void validate() const;
};

struct GradientParams {
    double b_prime = 0.0;  // longitudinal gradient, T/m
    double e_b = 0.0;      // shift per unit field, rad/(s T)
    double cell_len = 0.0; // spin-wave extent L, m
    double b0 = 0.0;       // uniform offset, T; phase only, no effect on eta

    double rate() const { return b_prime * e_b * cell_len; }  // rad/s of sinc argument *2
    void validate() const;
};

// eta(t)/eta(0) from radial diffusion; 1 at t = 0, strictly decreasing.
double diffusion_factor(const DiffusionParams& d, double t);

// eta(t)/eta(0) from the longitudinal gradient; first zero at t = 2 pi / (B' E_B L).
double gradient_factor(const GradientParams& g, double t);

double combined_decay(const DiffusionParams& d, const GradientParams& g, double t);

// First time at which combined_decay crosses 1/e, by bracketed bisection
// (first-crossing convention; sinc^2 revival lobes beyond the first gradient
// zero are ignored). Throws NumericFailure when no decay mechanism is active.
double storage_time_1e(const DiffusionParams& d, const GradientParams& g);

struct DecayDataPoint {
    double w = 0.0;         // m
    double pressure = 0.0;  // Torr
    double t1e = 0.0;       // measured 1/e time, s
};

struct DecayFitReport {
    bool converged = false;
    int evals = 0;
    double rms = 0.0;
    std::vector<double> residuals;  // model - measured, s
    bool gradient_at_lower_bound = false;
    bool rank_deficient = false;    // all data points identical
};

struct DecayFit {
    double d0 = 0.0;          // m^2/s
    double b_prime = 0.0;     // T/m, from the fitted product using the template's E_B and L
    double gradient_product = 0.0;  // B' E_B L, rad/s
    DecayFitReport report;
};

// Collective least-squares fit of (D0, B' E_B L) to measured 1/e times over a
// set of (w, P) points. Positivity is enforced by optimizing in log space;
// five log-spaced multi-starts around a closed-form initial guess.
DecayFit fit_decay_params(const std::vector<DecayDataPoint>& data,
                          const DiffusionParams& d_template, const GradientParams& g_template);

}  // namespace qmem
