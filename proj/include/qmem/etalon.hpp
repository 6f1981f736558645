// Fabry-Perot etalon transmission (Airy function), cascade suppression
// budgets, and a first-order thermal model of the etalon housing:
// the effective cavity temperature follows the room with steady-state gain
// 1/xi and time constant tau, and detunes the comb by thermal_tuning (Hz/K).

#pragma once

#include <utility>
#include <vector>

namespace qmem {

struct EtalonSpec {
    double fsr = 0.0;                 // Hz
    double finesse = 0.0;             // dimensionless, > 1
    double peak_transmission = 1.0;   // (0, 1]
    double thermal_tuning = -2.4e9;   // Hz/K (-2.4 MHz/mK)
    double detuning_offset = 0.0;     // Hz, comb alignment relative to the probe

    double fwhm() const { return fsr / finesse; }
    void validate() const;
};

struct ThermalParams {
    double xi = 0.0;     // isolation factor, > 0
    double tau = 0.0;    // s, > 0
    double t_set = 0.0;  // K setpoint (bookkeeping only)

    void validate() const;
};

// peak_transmission / (1 + (2 F / pi)^2 sin^2(pi (detuning - offset) / fsr)).
double airy_transmission(const EtalonSpec& e, double detuning_hz);

// -10 log10 of the stack transmission product at one detuning, evaluated with
// peak_transmission forced to 1 (insertion loss is budgeted separately).
double cascade_suppression_db(const std::vector<EtalonSpec>& stack, double detuning_hz);

// Band-averaged suppression of a flat noise band centered at center_hz.
double band_average_suppression_db(const std::vector<EtalonSpec>& stack, double center_hz,
                                   double width_hz, int n_points = 4001);

// Cavity temperature deviation after a room step of dT_room at t = 0:
// (dT_room / xi)(1 - exp(-t / tau)).
double thermal_step(const ThermalParams& tp, double dT_room, double t);

struct ThermalFitReport {
    bool converged = false;
    int evals = 0;
    double rms = 0.0;    // K
    bool xi_unbounded = false;  // trace indistinguishable from perfect isolation
};

struct ThermalFit {
    double xi = 0.0;
    double tau = 0.0;  // s
    ThermalFitReport report;
};

// Least-squares (xi, tau) from a measured step response (t, dT_cavity).
ThermalFit fit_thermal(const std::vector<std::pair<double, double>>& step_trace,
                       double dT_room);

// Drive the etalon with a uniformly sampled room-temperature trace (t, K):
// the cavity deviation is the exact zero-order-hold low-pass of the room
// deviation (gain 1/xi, time constant tau, referenced to the first sample),
// mapped to detuning through thermal_tuning and then through the Airy peak.
std::vector<std::pair<double, double>> transmission_trace(
    const EtalonSpec& e, const ThermalParams& tp,
    const std::vector<std::pair<double, double>>& room_trace, double probe_detuning_hz);

}  // namespace qmem
