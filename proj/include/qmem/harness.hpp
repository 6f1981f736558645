// Experiment recipes composing the solver, shaping, dephasing, filter and
// fidelity modules into figure-level data tables, driven by a single JSON
// config document. Unknown config keys are hard errors.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmem/bloch.hpp"
#include "qmem/dephasing.hpp"
#include "qmem/etalon.hpp"
#include "qmem/fidelity.hpp"
#include "qmem/medium.hpp"
#include "qmem/pulse.hpp"
#include "qmem/shaping.hpp"

namespace qmem {

using Json = nlohmann::ordered_json;

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    int jobs = 0;  // 0 = runtime default
    std::string output_dir = ".";
    std::string base_dir = ".";  // directory of the config file, for relative paths

    MediumSpec medium;
    ControlTiming control;
    ProbePulse pulse;
    SimGrid grid;
    DiffusionParams diffusion;
    GradientParams gradient;
    NoiseModel noise;
    bool has_medium = false, has_control = false, has_pulse = false, has_grid = false;
    bool has_dephasing = false, has_noise = false;

    Json params;  // experiment-specific section, validated by each runner

    std::string resolve_path(const std::string& p) const;
};

ExperimentConfig parse_config(const Json& doc, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

// ---- storage-time decay (single solver baseline x closed-form decay) ----

struct RailDecay {
    std::string label;
    double waist = 0.0;                                // m
    std::vector<std::pair<double, double>> rows;       // (t, eta_normalized)
    double fitted_t1e = 0.0;                           // s, from log-linear fit
    bool fit_valid = false;                            // false when the curve is flat
    double t1e_bisect = 0.0;                           // storage_time_1e for comparison
};

struct StorageDecayResult {
    double eta0 = 0.0;  // solver baseline efficiency
    std::vector<RailDecay> rails;
};

StorageDecayResult run_storage_decay(const ExperimentConfig& cfg);

// ---- buffer-gas pressure sweep (Fig. 4 style) ----

struct PressureSweepRow {
    double pressure = 0.0;  // Torr
    double eta_opt = 0.0;
    double t1e = 0.0;       // s
};

std::vector<PressureSweepRow> run_pressure_sweep(const ExperimentConfig& cfg);

// ---- optical-depth sweep (Fig. 3 style) ----

struct OdSweepRow {
    double od = 0.0;
    double eta_opt = 0.0;
    double noise_counts = 0.0;  // photons per trial in the detection window
    double snr_1 = 0.0;
};

std::vector<OdSweepRow> run_od_sweep(const ExperimentConfig& cfg);

// ---- control-power bandwidth sweep (Fig. 6 style) ----

struct BandwidthSweepRow {
    double power = 0.0;           // W
    double eit_fwhm = 0.0;        // rad/s
    double retrieved_fwhm = 0.0;  // rad/s, spectral FWHM of the retrieved photon
};

std::vector<BandwidthSweepRow> run_bandwidth_sweep(const ExperimentConfig& cfg);

// ---- single-photon-level protocol (Fig. 8 style) ----

struct MemoryResult {
    double eta_storage = 0.0;
    double eta_total = 0.0;
    double eta_window = 0.0;  // efficiency inside the detection window
    double window = 0.0;      // s
    double noise_counts = 0.0;
    double snr_1 = 0.0;
    double f_m = 0.0;
    double f_o = 1.0;
    double fidelity = 0.0;
    std::optional<double> t1e;
    ProbePulse retrieved;
    std::vector<WindowPoint> window_curve;
    CountStats counts;
    double snr_1_counted = 0.0;  // Monte-Carlo estimate scaled to n = 1
};

MemoryResult run_single_photon_protocol(const ExperimentConfig& cfg);

// ---- collective decay fit (Fig. 2(a) style) ----

struct DecayFitResult {
    DecayFit fit;
    std::vector<double> waists;     // m
    std::vector<double> pressures;  // Torr
    std::vector<std::vector<double>> t_fitted;       // [w][P], with the fitted gradient
    std::vector<std::vector<double>> t_no_gradient;  // [w][P], gradient forced to zero
};

DecayFitResult run_decay_fit(const ExperimentConfig& cfg);

// ---- EIT window scan ----

EitScan run_eit_scan(const ExperimentConfig& cfg);

}  // namespace qmem
