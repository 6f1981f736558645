// SNR and fidelity calculus for single-photon-level operation.
//
// The memory fidelity splits as F = F_o x F_m. F_m comes from the finite SNR
// of the retrieval, F_m = 1 - 1/(2 (1 + SNR)) for one incoming photon. F_o
// collects the state degradation in the optics: for two rails with intensity
// transmission ratio T the worst case over input states is
// 4 sqrt(T)/(1 + sqrt(T))^2, and a differential rail phase phi costs
// cos^2(phi/2) for the equal-superposition input.
//
// Noise is modeled as a flat rate while the control is on: per-trial counts
// floor + c_srs OD P_c + c_fwm OD^2 P_c^2, quoted over a reference window.

#pragma once

#include <cstdint>
#include <vector>

#include "qmem/bloch.hpp"

namespace qmem {

struct NoiseModel {
    double floor_per_trial = 0.0;     // photons per trial in the reference window
    double c_srs = 0.0;               // photons/(trial OD W)
    double c_fwm = 0.0;               // photons/(trial OD^2 W^2)
    double reference_window = 2e-6;   // s, window the per-trial counts refer to

    // photons per trial in the reference window
    double counts_per_trial(double od, double control_power_w) const;
    // flat noise rate, photons/s
    double rate_hz(double od, double control_power_w) const;
    void validate() const;
};

struct RailPair {
    double transmission_ratio = 1.0;  // T in (0, 1]
    double differential_phase = 0.0;  // rad

    double operation_fidelity() const;  // amplitude bound x phase factor
};

// F_m = 1 - 1/(2(1+snr)); snr >= 0.
double measurement_fidelity(double snr);

// Scale a measured SNR to an exactly-one-photon input: snr / n_bar.
double snr_single_photon(double snr_measured, double mean_photons);

// Worst case over input states of the differential-transmission fidelity.
double worst_case_amplitude_fidelity(double T);

// cos^2(phi / 2).
double worst_case_phase_fidelity(double phi);

// F = F_o x F_m with both in [0, 1].
double combined_fidelity(double f_o, double f_m);

struct WindowPoint {
    double window = 0.0;  // s
    double eta = 0.0;
    double snr_1 = 0.0;
    double fidelity = 0.0;
};

// Detection-window trade-off: per window W, signal = n_in eta(W), noise =
// rate W, snr_1 = eta(W)/(rate W), fidelity = f_o F_m(snr_1). Windows start
// at the record's retrieval_start. Zero or negative windows are rejected.
std::vector<WindowPoint> window_tradeoff(const FieldRecord& record, const NoiseModel& noise,
                                         double od, double control_power_w, double n_in,
                                         double f_o, const std::vector<double>& windows);

struct CountStats {
    std::vector<std::uint64_t> hist_signal;  // index = counts in signal window
    std::vector<std::uint64_t> hist_noise;   // index = counts in noise-only window
    double mean_signal = 0.0;
    double mean_noise = 0.0;
    double snr = 0.0;
    double snr_stderr = 0.0;
    std::uint64_t trials = 0;
};

// Poisson counting emulation of an SPCM experiment: per trial, draw counts
// with mean signal+noise (detection window) and mean noise (noise window).
// Deterministic for a fixed seed, independent of thread count.
CountStats simulate_counts(double signal, double noise, std::uint64_t trials,
                           std::uint64_t seed);

}  // namespace qmem
