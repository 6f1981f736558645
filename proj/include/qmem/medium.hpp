// Atomic-ensemble and control-field descriptions.
//
// Conventions:
//  * gamma_e holds HALF-linewidths (decay rate of the optical coherence, not
//    of the population). The D1 natural linewidth 2pi x 5.75 MHz corresponds
//    to gamma_e = 2pi x 2.87e6 rad/s.
//  * Optical depth d is defined through the resonant weak-probe intensity
//    transmission with the control off: T = exp(-d).
//  * Buffer-gas collisions broaden the full linewidth by
//    pressure_broadening_slope per Torr, so the half-linewidth used in the
//    dynamics is gamma_e[k] + slope * pressure / 2.

#pragma once

#include <cstddef>
#include <vector>

#include "qmem/constants.hpp"

namespace qmem {

struct MediumSpec {
    double od = 0.0;                      // optical depth, dimensionless
    std::vector<double> gamma_e;          // half-linewidths, rad/s, one per excited level
    std::vector<double> level_offsets;    // excited-level offsets s_k, rad/s (first 0)
    std::vector<double> coupling_signs;   // relative coupling factors f_k (first +1)
    double gamma_s0 = 0.0;                // intrinsic spin-wave decoherence, rad/s
    double gamma_s_density_coeff = 0.0;   // extra spin-wave decoherence per unit OD, rad/s
    double buffer_pressure = 0.0;         // Torr
    double pressure_broadening_slope = from_2pi_mhz(9.8);  // rad/s per Torr, full linewidth

    std::size_t num_levels() const { return gamma_e.size(); }
    double gamma_eff(std::size_t k) const {
        return gamma_e[k] + 0.5 * pressure_broadening_slope * buffer_pressure;
    }
    double gamma_s_eff() const { return gamma_s0 + gamma_s_density_coeff * od; }

    // Throws InvalidInput on violated invariants.
    void validate() const;
};

// Control-field power, Rabi calibration and switching sequence. The envelope
// is 1 before off_time, ramps to 0 over ramp_time (raised cosine), stays 0,
// then ramps back to 1 over [on_time, on_time + ramp_time].
struct ControlTiming {
    double power = 0.0;                 // W
    double rabi_per_sqrt_power = 0.0;   // rad/(s sqrt(W))
    double off_time = 0.0;              // s
    double on_time = 0.0;               // s
    double ramp_time = 0.0;             // s, full switching duration
    double single_photon_detuning = -from_2pi_mhz(120.0);  // Delta, rad/s
    double two_photon_detuning = 0.0;   // delta, rad/s

    double envelope(double t) const;
    double rabi_peak() const;
    double rabi(double t) const { return rabi_peak() * envelope(t); }

    void validate() const;
};

struct SimGrid {
    int nz = 0;       // spatial cells over normalized z in [0,1], >= 2
    int nt = 0;       // time steps, >= 2
    double dt = 0.0;  // s

    void validate() const;
};

}  // namespace qmem
