#include "qmem/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>

#include "qmem/constants.hpp"
#include "qmem/csv.hpp"
#include "qmem/errors.hpp"

namespace qmem {

namespace {

// ---- strict config helpers -------------------------------------------------

void check_keys(const Json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw InvalidInput("config: section '" + section + "' must be an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || item.key() == k;
        if (!ok)
            throw InvalidInput("config: unknown key '" + item.key() + "' in section '" + section +
                               "'");
    }
}

const Json* find(const Json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double num(const Json& obj, const std::string& section, const char* key) {
    const Json* v = find(obj, key);
    if (!v) throw InvalidInput("config: missing key '" + std::string(key) + "' in '" + section + "'");
    if (!v->is_number())
        throw InvalidInput("config: key '" + std::string(key) + "' in '" + section +
                           "' must be a number");
    return v->get<double>();
}

double num_or(const Json& obj, const std::string& section, const char* key, double fallback) {
    return find(obj, key) ? num(obj, section, key) : fallback;
}

std::vector<double> num_list(const Json& obj, const std::string& section, const char* key) {
    const Json* v = find(obj, key);
    if (!v) throw InvalidInput("config: missing key '" + std::string(key) + "' in '" + section + "'");
    if (!v->is_array())
        throw InvalidInput("config: key '" + std::string(key) + "' in '" + section +
                           "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : *v) {
        if (!x.is_number())
            throw InvalidInput("config: key '" + std::string(key) + "' in '" + section +
                               "' must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

MediumSpec parse_medium(const Json& j) {
    check_keys(j, "medium",
               {"od", "gamma_e_2pi_mhz", "level_offsets_2pi_mhz", "coupling_signs",
                "gamma_s0_2pi_khz", "gamma_s_density_coeff_2pi_khz", "buffer_pressure_torr",
                "pressure_broadening_2pi_mhz_per_torr"});
    MediumSpec m;
    m.od = num(j, "medium", "od");
    for (double g : num_list(j, "medium", "gamma_e_2pi_mhz")) m.gamma_e.push_back(from_2pi_mhz(g));
    if (find(j, "level_offsets_2pi_mhz"))
        for (double s : num_list(j, "medium", "level_offsets_2pi_mhz"))
            m.level_offsets.push_back(from_2pi_mhz(s));
    else
        m.level_offsets.assign(m.gamma_e.size(), 0.0);
    if (find(j, "coupling_signs"))
        m.coupling_signs = num_list(j, "medium", "coupling_signs");
    else
        m.coupling_signs.assign(m.gamma_e.size(), 1.0);
    m.gamma_s0 = from_2pi_khz(num_or(j, "medium", "gamma_s0_2pi_khz", 0.0));
    m.gamma_s_density_coeff =
        from_2pi_khz(num_or(j, "medium", "gamma_s_density_coeff_2pi_khz", 0.0));
    m.buffer_pressure = num_or(j, "medium", "buffer_pressure_torr", 0.0);
    m.pressure_broadening_slope =
        from_2pi_mhz(num_or(j, "medium", "pressure_broadening_2pi_mhz_per_torr", 9.8));
    m.validate();
    return m;
}

ControlTiming parse_control(const Json& j) {
    check_keys(j, "control",
               {"power_mw", "rabi_per_sqrt_power_2pi_mhz_per_sqrt_w", "off_time_us", "on_time_us",
                "ramp_time_ns", "single_photon_detuning_2pi_mhz", "two_photon_detuning_2pi_mhz"});
    ControlTiming c;
    c.power = num(j, "control", "power_mw") * 1e-3;
    c.rabi_per_sqrt_power = from_2pi_mhz(num(j, "control", "rabi_per_sqrt_power_2pi_mhz_per_sqrt_w"));
    c.off_time = num(j, "control", "off_time_us") * 1e-6;
    c.on_time = num(j, "control", "on_time_us") * 1e-6;
    c.ramp_time = num_or(j, "control", "ramp_time_ns", 100.0) * 1e-9;
    c.single_photon_detuning = from_2pi_mhz(num_or(j, "control", "single_photon_detuning_2pi_mhz", -120.0));
    c.two_photon_detuning = from_2pi_mhz(num_or(j, "control", "two_photon_detuning_2pi_mhz", 0.0));
    c.validate();
    return c;
}

ProbePulse parse_pulse(const Json& j, const std::string& base_dir) {
    check_keys(j, "pulse",
               {"shape", "start_us", "duration_us", "dt_ns", "mean_photons", "center_us",
                "fwhm_ns", "square_start_us", "square_duration_us", "csv_path"});
    const Json* shape = find(j, "shape");
    if (!shape || !shape->is_string())
        throw InvalidInput("config: pulse.shape must be 'gaussian', 'square' or 'csv'");
    const std::string s = shape->get<std::string>();
    const double n_bar = num_or(j, "pulse", "mean_photons", 1.0);

    if (s == "csv") {
        const Json* p = find(j, "csv_path");
        if (!p || !p->is_string()) throw InvalidInput("config: pulse.csv_path required for shape 'csv'");
        std::filesystem::path path(p->get<std::string>());
        if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
        ProbePulse pulse = read_pulse_csv(path.string());
        pulse.mean_photons = n_bar;
        return pulse;
    }

    const double t0 = num(j, "pulse", "start_us") * 1e-6;
    const double duration = num(j, "pulse", "duration_us") * 1e-6;
    const double dt = num(j, "pulse", "dt_ns") * 1e-9;
    if (!(duration > 0.0) || !(dt > 0.0)) throw InvalidInput("config: pulse duration and dt must be > 0");
    const auto n = static_cast<std::size_t>(std::lround(duration / dt));
    if (s == "gaussian") {
        return gaussian_pulse(num(j, "pulse", "center_us") * 1e-6, num(j, "pulse", "fwhm_ns") * 1e-9,
                              t0, dt, n, n_bar);
    }
    if (s == "square") {
        return square_pulse(num(j, "pulse", "square_start_us") * 1e-6,
                            num(j, "pulse", "square_duration_us") * 1e-6, t0, dt, n, n_bar);
    }
    throw InvalidInput("config: unknown pulse shape '" + s + "'");
}

SimGrid parse_grid(const Json& j) {
    check_keys(j, "grid", {"nz", "nt", "dt_ns"});
    SimGrid g;
    g.nz = static_cast<int>(num(j, "grid", "nz"));
    g.nt = static_cast<int>(num(j, "grid", "nt"));
    g.dt = num(j, "grid", "dt_ns") * 1e-9;
    g.validate();
    return g;
}

void parse_dephasing(const Json& j, ExperimentConfig& cfg) {
    check_keys(j, "dephasing",
               {"waist_mm", "d0_m2_per_s", "p0_torr", "pressure_torr", "b_prime_t_per_m",
                "e_b_rad_per_s_t", "cell_len_m", "b0_t"});
    cfg.diffusion.w = num(j, "dephasing", "waist_mm") * 1e-3;
    cfg.diffusion.d0 = num(j, "dephasing", "d0_m2_per_s");
    cfg.diffusion.p0 = num_or(j, "dephasing", "p0_torr", 760.0);
    cfg.diffusion.pressure = num(j, "dephasing", "pressure_torr");
    cfg.gradient.b_prime = num_or(j, "dephasing", "b_prime_t_per_m", 0.0);
    cfg.gradient.e_b = num_or(j, "dephasing", "e_b_rad_per_s_t", 0.0);
    cfg.gradient.cell_len = num_or(j, "dephasing", "cell_len_m", 0.08);
    cfg.gradient.b0 = num_or(j, "dephasing", "b0_t", 0.0);
    cfg.diffusion.validate();
    cfg.gradient.validate();
    cfg.has_dephasing = true;
}

NoiseModel parse_noise(const Json& j) {
    check_keys(j, "noise",
               {"floor_per_trial", "reference_window_us", "c_srs_per_od_w", "c_fwm_per_od2_w2"});
    NoiseModel n;
    n.floor_per_trial = num(j, "noise", "floor_per_trial");
    n.reference_window = num_or(j, "noise", "reference_window_us", 2.0) * 1e-6;
    n.c_srs = num_or(j, "noise", "c_srs_per_od_w", 0.0);
    n.c_fwm = num_or(j, "noise", "c_fwm_per_od2_w2", 0.0);
    n.validate();
    return n;
}

// Rethrow-after-join wrapper for parallel sweep loops.
template <typename F>
void parallel_sweep(std::size_t n, F&& body) {
    std::exception_ptr error;
    const auto nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < nn; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInput(msg);
}

// Re-center the two-photon detuning on the CW transparency peak. A second
// excited level light-shifts the Raman resonance by ~Omega^2/splitting, so a
// sweep that holds delta fixed would store off-resonance.
ControlTiming retune_two_photon(const MediumSpec& medium, const ControlTiming& control) {
    ControlTiming c = control;
    const double omega = c.rabi_peak();
    if (omega <= 0.0) return c;
    const double span = std::max(0.5 * omega, from_2pi_mhz(0.5));
    double best_delta = 0.0, best_t = -1.0;
    for (int i = 0; i <= 4000; ++i) {
        const double d = -span + 2.0 * span * static_cast<double>(i) / 4000.0;
        const double t = cw_transmission(medium, omega, d, c.single_photon_detuning);
        if (t > best_t) {
            best_t = t;
            best_delta = d;
        }
    }
    c.two_photon_detuning = best_delta;
    return c;
}

// log-linear least squares of eta(t) ~ exp(-t/T); returns (T, valid).
std::pair<double, bool> exponential_fit_t1e(const std::vector<std::pair<double, double>>& rows) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    double t_max = 0.0;
    for (const auto& [t, eta] : rows) {
        if (!(eta > 0.0)) continue;
        const double y = std::log(eta);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        t_max = std::max(t_max, t);
        ++n;
    }
    if (n < 2) return {0.0, false};
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return {0.0, false};
    const double slope = (n * sxy - sx * sy) / denom;
    if (!(slope < 0.0) || -slope * t_max < 1e-9) return {0.0, false};  // flat: infinite T
    return {-1.0 / slope, true};
}

}  // namespace

std::string ExperimentConfig::resolve_path(const std::string& p) const {
    std::filesystem::path path(p);
    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
    return path.string();
}

ExperimentConfig parse_config(const Json& doc, const std::string& base_dir) {
    check_keys(doc, "(top level)",
               {"experiment", "seed", "jobs", "output_dir", "medium", "control", "pulse", "grid",
                "dephasing", "noise", "params"});
    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    const Json* exp = find(doc, "experiment");
    if (!exp || !exp->is_string()) throw InvalidInput("config: 'experiment' (string) is required");
    cfg.experiment = exp->get<std::string>();
    if (const Json* s = find(doc, "seed")) {
        if (!s->is_number_integer() || s->get<long long>() < 0)
            throw InvalidInput("config: 'seed' must be a non-negative integer");
        cfg.seed = s->get<std::uint64_t>();
    }
    if (const Json* jjobs = find(doc, "jobs")) {
        if (!jjobs->is_number_integer() || jjobs->get<int>() < 0)
            throw InvalidInput("config: 'jobs' must be a non-negative integer");
        cfg.jobs = jjobs->get<int>();
    }
    if (const Json* od = find(doc, "output_dir")) {
        if (!od->is_string()) throw InvalidInput("config: 'output_dir' must be a string");
        cfg.output_dir = od->get<std::string>();
    }
    if (const Json* j = find(doc, "medium")) {
        cfg.medium = parse_medium(*j);
        cfg.has_medium = true;
    }
    if (const Json* j = find(doc, "control")) {
        cfg.control = parse_control(*j);
        cfg.has_control = true;
    }
    if (const Json* j = find(doc, "pulse")) {
        cfg.pulse = parse_pulse(*j, base_dir);
        cfg.has_pulse = true;
    }
    if (const Json* j = find(doc, "grid")) {
        cfg.grid = parse_grid(*j);
        cfg.has_grid = true;
    }
    if (const Json* j = find(doc, "dephasing")) parse_dephasing(*j, cfg);
    if (const Json* j = find(doc, "noise")) {
        cfg.noise = parse_noise(*j);
        cfg.has_noise = true;
    }
    if (const Json* j = find(doc, "params")) {
        if (!j->is_object()) throw InvalidInput("config: 'params' must be an object");
        cfg.params = *j;
    } else {
        cfg.params = Json::object();
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open config: " + path);
    Json doc;
    try {
        doc = Json::parse(f);
    } catch (const std::exception& e) {
        throw InvalidInput("config: JSON parse error in " + path + ": " + e.what());
    }
    return parse_config(doc, std::filesystem::path(path).parent_path().string());
}

// ---- runners ----------------------------------------------------------------

StorageDecayResult run_storage_decay(const ExperimentConfig& cfg) {
    require(cfg.has_medium && cfg.has_control && cfg.has_pulse && cfg.has_grid,
            "decay: medium, control, pulse, grid sections are required");
    require(cfg.has_dephasing, "decay: dephasing section is required");
    check_keys(cfg.params, "params", {"storage_times_us", "rails"});
    const std::vector<double> times_us = num_list(cfg.params, "params", "storage_times_us");
    require(!times_us.empty(), "decay: storage_times_us must be non-empty");

    struct Rail {
        std::string label;
        double waist;
    };
    std::vector<Rail> rails;
    if (const Json* jr = find(cfg.params, "rails")) {
        require(jr->is_array() && !jr->empty(), "decay: rails must be a non-empty array");
        for (const auto& r : *jr) {
            check_keys(r, "rails[]", {"label", "waist_mm"});
            const Json* lbl = find(r, "label");
            require(lbl && lbl->is_string(), "decay: rails[].label (string) required");
            rails.push_back({lbl->get<std::string>(), num(r, "rails[]", "waist_mm") * 1e-3});
        }
    } else {
        rails.push_back({"rail", cfg.diffusion.w});
    }

    StorageDecayResult result;
    FieldRecord baseline = simulate(cfg.medium, cfg.control, cfg.pulse, cfg.grid);
    result.eta0 = baseline.eta_total;

    for (const Rail& rail : rails) {
        RailDecay rd;
        rd.label = rail.label;
        rd.waist = rail.waist;
        DiffusionParams d = cfg.diffusion;
        d.w = rail.waist;
        for (double tus : times_us) {
            const double t = tus * 1e-6;
            rd.rows.emplace_back(t, combined_decay(d, cfg.gradient, t));
        }
        auto [t1e, valid] = exponential_fit_t1e(rd.rows);
        rd.fitted_t1e = t1e;
        rd.fit_valid = valid;
        if (d.d0 > 0.0 || cfg.gradient.rate() > 0.0) rd.t1e_bisect = storage_time_1e(d, cfg.gradient);
        result.rails.push_back(std::move(rd));
    }
    return result;
}

std::vector<PressureSweepRow> run_pressure_sweep(const ExperimentConfig& cfg) {
    require(cfg.has_medium && cfg.has_control && cfg.has_pulse && cfg.has_grid,
            "pressure-sweep: medium, control, pulse, grid sections are required");
    require(cfg.has_dephasing, "pressure-sweep: dephasing section is required");
    require(cfg.medium.num_levels() == 2,
            "pressure-sweep: two-excited-level medium required (gamma_e_2pi_mhz needs 2 entries)");
    check_keys(cfg.params, "params", {"pressures_torr", "max_iters", "tol"});
    const std::vector<double> pressures = num_list(cfg.params, "params", "pressures_torr");
    require(!pressures.empty(), "pressure-sweep: pressures_torr must be non-empty");
    const int max_iters = static_cast<int>(num_or(cfg.params, "params", "max_iters", 6));
    const double tol = num_or(cfg.params, "params", "tol", 1e-3);

    std::vector<PressureSweepRow> rows(pressures.size());
    parallel_sweep(pressures.size(), [&](std::size_t i) {
        MediumSpec m = cfg.medium;
        m.buffer_pressure = pressures[i];
        ControlTiming c = retune_two_photon(m, cfg.control);
        ShapingReport rep = optimize_pulse(m, c, cfg.pulse, cfg.grid, max_iters, tol);
        DiffusionParams d = cfg.diffusion;
        d.pressure = pressures[i];
        rows[i] = {pressures[i], rep.final_eta(), storage_time_1e(d, cfg.gradient)};
    });
    return rows;
}

std::vector<OdSweepRow> run_od_sweep(const ExperimentConfig& cfg) {
    require(cfg.has_medium && cfg.has_control && cfg.has_pulse && cfg.has_grid,
            "od-sweep: medium, control, pulse, grid sections are required");
    require(cfg.has_noise, "od-sweep: noise section is required");
    check_keys(cfg.params, "params", {"od_values", "window_ns", "max_iters", "tol"});
    const std::vector<double> ods = num_list(cfg.params, "params", "od_values");
    require(!ods.empty(), "od-sweep: od_values must be non-empty");
    const double window = num(cfg.params, "params", "window_ns") * 1e-9;
    const int max_iters = static_cast<int>(num_or(cfg.params, "params", "max_iters", 6));
    const double tol = num_or(cfg.params, "params", "tol", 1e-3);

    std::vector<OdSweepRow> rows(ods.size());
    parallel_sweep(ods.size(), [&](std::size_t i) {
        MediumSpec m = cfg.medium;
        m.od = ods[i];
        ControlTiming c = retune_two_photon(m, cfg.control);
        ShapingReport rep = optimize_pulse(m, c, cfg.pulse, cfg.grid, max_iters, tol);
        const double counts = cfg.noise.rate_hz(ods[i], cfg.control.power) * window;
        rows[i] = {ods[i], rep.final_eta(), counts, rep.final_eta() / counts};
    });
    return rows;
}

std::vector<BandwidthSweepRow> run_bandwidth_sweep(const ExperimentConfig& cfg) {
    require(cfg.has_medium && cfg.has_control && cfg.has_pulse && cfg.has_grid,
            "bandwidth-sweep: medium, control, pulse, grid sections are required");
    check_keys(cfg.params, "params",
               {"powers_mw", "delta_min_2pi_mhz", "delta_max_2pi_mhz", "n_delta", "max_iters",
                "tol"});
    std::vector<double> powers;
    for (double mw : num_list(cfg.params, "params", "powers_mw")) powers.push_back(mw * 1e-3);
    require(!powers.empty(), "bandwidth-sweep: powers_mw must be non-empty");
    const double dmin = from_2pi_mhz(num(cfg.params, "params", "delta_min_2pi_mhz"));
    const double dmax = from_2pi_mhz(num(cfg.params, "params", "delta_max_2pi_mhz"));
    const int n_delta = static_cast<int>(num_or(cfg.params, "params", "n_delta", 801));
    const int max_iters = static_cast<int>(num_or(cfg.params, "params", "max_iters", 4));
    const double tol = num_or(cfg.params, "params", "tol", 1e-3);

    const EitScan scan = eit_scan(cfg.medium, cfg.control, powers, dmin, dmax, n_delta);

    std::vector<BandwidthSweepRow> rows(powers.size());
    parallel_sweep(powers.size(), [&](std::size_t i) {
        ControlTiming c = cfg.control;
        c.power = powers[i];
        ShapingReport rep = optimize_pulse(cfg.medium, c, cfg.pulse, cfg.grid, max_iters, tol);
        // retrieved envelope of the optimal pulse
        FieldRecord rec = simulate(cfg.medium, c, rep.final_pulse, cfg.grid);
        ProbePulse retrieved;
        retrieved.t0 = c.on_time;
        retrieved.dt = cfg.grid.dt;
        for (std::size_t n = 0; n < rec.e_out.size(); ++n)
            if (rec.time(n) >= c.on_time) retrieved.samples.push_back(rec.e_out[n]);
        require(scan.fwhm[i].has_value(), "bandwidth-sweep: no EIT window at power point");
        rows[i] = {powers[i], *scan.fwhm[i], pulse_bandwidth(retrieved)};
    });
    return rows;
}

MemoryResult run_single_photon_protocol(const ExperimentConfig& cfg) {
    require(cfg.has_medium && cfg.has_control && cfg.has_pulse && cfg.has_grid,
            "single-photon: medium, control, pulse, grid sections are required");
    require(cfg.has_noise, "single-photon: noise section is required");
    check_keys(cfg.params, "params",
               {"window_ns", "windows_ns", "trials", "f_o", "rail_transmission_ratio",
                "rail_phase_rad", "eta_override"});
    const double window = num(cfg.params, "params", "window_ns") * 1e-9;
    const auto trials = static_cast<std::uint64_t>(num_or(cfg.params, "params", "trials", 100000));

    double f_o = 1.0;
    if (find(cfg.params, "f_o")) {
        f_o = num(cfg.params, "params", "f_o");
        require(!find(cfg.params, "rail_transmission_ratio") && !find(cfg.params, "rail_phase_rad"),
                "single-photon: give either f_o or the rail parameters, not both");
    } else if (find(cfg.params, "rail_transmission_ratio") || find(cfg.params, "rail_phase_rad")) {
        RailPair rail;
        rail.transmission_ratio = num_or(cfg.params, "params", "rail_transmission_ratio", 1.0);
        rail.differential_phase = num_or(cfg.params, "params", "rail_phase_rad", 0.0);
        f_o = rail.operation_fidelity();
    }

    MemoryResult res;
    FieldRecord rec = simulate(cfg.medium, cfg.control, cfg.pulse, cfg.grid);
    res.eta_storage = rec.eta_storage;
    res.eta_total = rec.eta_total;
    res.window = window;
    res.f_o = f_o;

    res.retrieved.t0 = rec.retrieval_start;
    res.retrieved.dt = cfg.grid.dt;
    for (std::size_t n = 0; n < rec.e_out.size(); ++n)
        if (rec.time(n) >= rec.retrieval_start) res.retrieved.samples.push_back(rec.e_out[n]);

    const double eta_window = storage_efficiency(rec, rec.retrieval_start, window);
    res.eta_window = find(cfg.params, "eta_override")
                         ? num(cfg.params, "params", "eta_override")
                         : eta_window;

    const double rate = cfg.noise.rate_hz(cfg.medium.od, cfg.control.power);
    res.noise_counts = rate * window;
    res.snr_1 = res.noise_counts > 0.0
                    ? res.eta_window / res.noise_counts
                    : (res.eta_window > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    res.f_m = measurement_fidelity(res.snr_1);
    res.fidelity = combined_fidelity(f_o, res.f_m);

    if (find(cfg.params, "windows_ns")) {
        std::vector<double> windows;
        for (double w : num_list(cfg.params, "params", "windows_ns")) windows.push_back(w * 1e-9);
        res.window_curve = window_tradeoff(rec, cfg.noise, cfg.medium.od, cfg.control.power,
                                           cfg.pulse.mean_photons, f_o, windows);
    }

    const double n_bar = cfg.pulse.mean_photons;
    res.counts = simulate_counts(n_bar * res.eta_window, res.noise_counts, trials, cfg.seed);
    res.snr_1_counted = res.counts.snr / n_bar;

    if (cfg.has_dephasing &&
        (cfg.diffusion.d0 > 0.0 || cfg.gradient.rate() > 0.0))
        res.t1e = storage_time_1e(cfg.diffusion, cfg.gradient);
    return res;
}

DecayFitResult run_decay_fit(const ExperimentConfig& cfg) {
    require(cfg.has_dephasing, "fit-decay: dephasing section (templates) is required");
    check_keys(cfg.params, "params",
               {"data", "data_csv", "prediction_waists_mm", "prediction_pressures_torr"});

    std::vector<DecayDataPoint> data;
    if (const Json* jd = find(cfg.params, "data")) {
        require(jd->is_array(), "fit-decay: data must be an array of [w_m, P_torr, T1e_s]");
        for (const auto& row : *jd) {
            require(row.is_array() && row.size() == 3,
                    "fit-decay: data rows must be [w_m, P_torr, T1e_s]");
            data.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
        }
    } else if (const Json* jp = find(cfg.params, "data_csv")) {
        require(jp->is_string(), "fit-decay: data_csv must be a path string");
        for (const auto& row :
             read_csv_file(cfg.resolve_path(jp->get<std::string>()), "w_m,P_torr,T1e_s"))
            data.push_back({row[0], row[1], row[2]});
    } else {
        throw InvalidInput("fit-decay: either data or data_csv is required");
    }

    DecayFitResult res;
    res.fit = fit_decay_params(data, cfg.diffusion, cfg.gradient);

    if (find(cfg.params, "prediction_waists_mm"))
        for (double w : num_list(cfg.params, "params", "prediction_waists_mm"))
            res.waists.push_back(w * 1e-3);
    else
        for (const auto& pt : data)
            if (std::find(res.waists.begin(), res.waists.end(), pt.w) == res.waists.end())
                res.waists.push_back(pt.w);
    if (find(cfg.params, "prediction_pressures_torr"))
        res.pressures = num_list(cfg.params, "params", "prediction_pressures_torr");
    else
        for (const auto& pt : data)
            if (std::find(res.pressures.begin(), res.pressures.end(), pt.pressure) ==
                res.pressures.end())
                res.pressures.push_back(pt.pressure);
    std::sort(res.waists.begin(), res.waists.end());
    std::sort(res.pressures.begin(), res.pressures.end());

    GradientParams g_fit = cfg.gradient;
    g_fit.e_b = 1.0;
    g_fit.cell_len = 1.0;
    for (double w : res.waists) {
        std::vector<double> solid, dashed;
        for (double p : res.pressures) {
            DiffusionParams d = cfg.diffusion;
            d.d0 = res.fit.d0;
            d.w = w;
            d.pressure = p;
            g_fit.b_prime = std::max(res.fit.gradient_product, 0.0);
            GradientParams none = g_fit;
            none.b_prime = 0.0;
            solid.push_back(res.fit.gradient_product > 0.0 ? storage_time_1e(d, g_fit)
                                                           : storage_time_1e(d, none));
            dashed.push_back(storage_time_1e(d, none));
        }
        res.t_fitted.push_back(std::move(solid));
        res.t_no_gradient.push_back(std::move(dashed));
    }
    return res;
}

EitScan run_eit_scan(const ExperimentConfig& cfg) {
    require(cfg.has_medium && cfg.has_control, "eit-scan: medium and control sections are required");
    check_keys(cfg.params, "params",
               {"powers_mw", "delta_min_2pi_mhz", "delta_max_2pi_mhz", "n_delta"});
    std::vector<double> powers;
    for (double mw : num_list(cfg.params, "params", "powers_mw")) powers.push_back(mw * 1e-3);
    const double dmin = from_2pi_mhz(num(cfg.params, "params", "delta_min_2pi_mhz"));
    const double dmax = from_2pi_mhz(num(cfg.params, "params", "delta_max_2pi_mhz"));
    const int n_delta = static_cast<int>(num_or(cfg.params, "params", "n_delta", 801));
    return eit_scan(cfg.medium, cfg.control, powers, dmin, dmax, n_delta);
}

}  // namespace qmem
