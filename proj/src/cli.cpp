#include "qmem/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmem/constants.hpp"
#include "qmem/csv.hpp"
#include "qmem/errors.hpp"
#include "qmem/harness.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qmem::cli {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;  // overrides config output_dir when set
    std::optional<std::uint64_t> seed;
    int jobs = -1;  // -1 = not set
};

void add_common(CLI::App* sub, CommonOpts& c) {
    sub->add_option("--config", c.config_path, "experiment JSON config")->required();
    sub->add_option("--out-dir", c.out_dir, "output directory (overrides config output_dir)");
    sub->add_option("--seed", c.seed, "seed override");
    sub->add_option("--jobs", c.jobs, "worker threads (default: logical cores)");
}

void apply_jobs(int jobs) {
#ifdef _OPENMP
    if (jobs <= 0) {
        if (const char* env = std::getenv("QMEMSIM_JOBS")) jobs = std::atoi(env);
    }
    if (jobs > 0) omp_set_num_threads(jobs);
#else
    (void)jobs;
#endif
}

ExperimentConfig load_common(const CommonOpts& c, const std::string& expected_experiment) {
    ExperimentConfig cfg = load_config(c.config_path);
    if (cfg.experiment != expected_experiment)
        throw InvalidInput("config experiment is '" + cfg.experiment + "' but subcommand is '" +
                           expected_experiment + "'");
    if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
    if (c.seed) cfg.seed = *c.seed;
    apply_jobs(c.jobs >= 0 ? c.jobs : cfg.jobs);
    fs::create_directories(cfg.output_dir);
    return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
}

void check_params_keys(const Json& obj, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw InvalidInput("config: section 'params' must be an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || item.key() == k;
        if (!ok) throw InvalidInput("config: unknown key '" + item.key() + "' in section 'params'");
    }
}

void write_eout_csv(const FieldRecord& rec, const std::string& path) {
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < rec.e_out.size(); ++n)
        rows.push_back({rec.time(n), rec.e_out[n].real(), rec.e_out[n].imag()});
    write_csv_file(path, "t_seconds,re_eout,im_eout", rows);
}

void write_profile_csv(const std::vector<std::complex<double>>& v, const std::string& path) {
    std::vector<std::vector<double>> rows;
    const double dz = 1.0 / static_cast<double>(v.size() - 1);
    for (std::size_t j = 0; j < v.size(); ++j)
        rows.push_back({dz * static_cast<double>(j), v[j].real(), v[j].imag()});
    write_csv_file(path, "z_normalized,re,im", rows);
}

// ---- subcommand bodies ------------------------------------------------------

Json cmd_store(const CommonOpts& c) {
    ExperimentConfig cfg = load_common(c, "store");
    check_params_keys(cfg.params, {"snapshot_times_us", "retrieval_start_us"});
    std::vector<double> snaps;
    if (cfg.params.contains("snapshot_times_us"))
        for (const auto& v : cfg.params["snapshot_times_us"]) snaps.push_back(v.get<double>() * 1e-6);
    SolveOptions opts;
    if (cfg.params.contains("retrieval_start_us"))
        opts.retrieval_start = cfg.params["retrieval_start_us"].get<double>() * 1e-6;

    FieldRecord rec = simulate(cfg.medium, cfg.control, cfg.pulse, cfg.grid, snaps, opts);
    write_eout_csv(rec, out_path(cfg, "eout.csv"));
    Json files = Json::object();
    files["eout"] = out_path(cfg, "eout.csv");
    for (std::size_t i = 0; i < rec.spinwave_snapshots.size(); ++i) {
        const std::string sw = out_path(cfg, "spinwave_" + std::to_string(i) + ".csv");
        write_profile_csv(rec.spinwave_snapshots[i], sw);
        files["spinwave_" + std::to_string(i)] = sw;
        for (std::size_t k = 0; k < rec.polarization_snapshots[i].size(); ++k) {
            const std::string pk = out_path(cfg, "polarization_" + std::to_string(i) + "_level" +
                                                     std::to_string(k) + ".csv");
            write_profile_csv(rec.polarization_snapshots[i][k], pk);
            files["polarization_" + std::to_string(i) + "_level" + std::to_string(k)] = pk;
        }
    }
    Json j;
    j["experiment"] = "store";
    j["eta_storage"] = rec.eta_storage;
    j["eta_total"] = rec.eta_total;
    j["energy_in"] = rec.energy_in;
    j["retrieval_start_s"] = rec.retrieval_start;
    j["outputs"] = files;
    return j;
}

Json cmd_optimize_pulse(const CommonOpts& c) {
    ExperimentConfig cfg = load_common(c, "optimize-pulse");
    check_params_keys(cfg.params, {"max_iters", "tol"});
    const int max_iters =
        cfg.params.contains("max_iters") ? cfg.params["max_iters"].get<int>() : 8;
    const double tol = cfg.params.contains("tol") ? cfg.params["tol"].get<double>() : 1e-3;

    ShapingReport rep = optimize_pulse(cfg.medium, cfg.control, cfg.pulse, cfg.grid, max_iters, tol);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < rep.iterations.size(); ++i)
        rows.push_back({static_cast<double>(i), rep.iterations[i].eta});
    write_csv_file(out_path(cfg, "iterations.csv"), "iteration,eta", rows);
    write_pulse_csv(rep.final_pulse, out_path(cfg, "final_pulse.csv"));

    Json j;
    j["experiment"] = "optimize-pulse";
    j["converged"] = rep.converged;
    j["iterations"] = rep.passes();
    j["eta_final"] = rep.final_eta();
    j["outputs"] = {{"iterations", out_path(cfg, "iterations.csv")},
                    {"final_pulse", out_path(cfg, "final_pulse.csv")}};
    return j;
}

Json cmd_decay(const CommonOpts& c) {
    ExperimentConfig cfg = load_common(c, "decay");
    StorageDecayResult res = run_storage_decay(cfg);
    Json rails = Json::array();
    Json files = Json::object();
    for (const RailDecay& rd : res.rails) {
        std::vector<std::vector<double>> rows;
        for (const auto& [t, eta] : rd.rows) rows.push_back({t, eta});
        const std::string path = out_path(cfg, "decay_" + rd.label + ".csv");
        write_csv_file(path, "storage_time_s,eta_normalized", rows);
        files[rd.label] = path;
        Json r;
        r["label"] = rd.label;
        r["waist_m"] = rd.waist;
        r["fit_valid"] = rd.fit_valid;
        if (rd.fit_valid)
            r["fitted_t1e_s"] = rd.fitted_t1e;
        else
            r["fitted_t1e_s"] = nullptr;  // flat curve: infinite T flagged
        r["t1e_bisect_s"] = rd.t1e_bisect;
        rails.push_back(r);
    }
    Json j;
    j["experiment"] = "decay";
    j["eta0"] = res.eta0;
    j["rails"] = rails;
    j["outputs"] = files;
    return j;
}

Json cmd_fit_decay(const CommonOpts& c) {
    ExperimentConfig cfg = load_common(c, "fit-decay");
    DecayFitResult res = run_decay_fit(cfg);

    std::vector<std::vector<double>> rows;
    for (std::size_t iw = 0; iw < res.waists.size(); ++iw)
        for (std::size_t ip = 0; ip < res.pressures.size(); ++ip)
            rows.push_back({res.waists[iw], res.pressures[ip], res.t_fitted[iw][ip],
                            res.t_no_gradient[iw][ip]});
    const std::string pred = out_path(cfg, "predictions.csv");
    write_csv_file(pred, "waist_m,pressure_torr,t1e_fitted_s,t1e_no_gradient_s", rows);

    Json j;
    j["experiment"] = "fit-decay";
    j["D0"] = res.fit.d0;
    j["b_prime_times_eb_l"] = res.fit.gradient_product;
    j["b_prime"] = res.fit.b_prime;
    j["gradient_at_lower_bound"] = res.fit.report.gradient_at_lower_bound;
    j["converged"] = res.fit.report.converged;
    j["rms_s"] = res.fit.report.rms;
    j["residuals"] = res.fit.report.residuals;
    j["outputs"] = {{"predictions", pred}};
    return j;
}

Json cmd_pressure_sweep(const CommonOpts& c) {
    ExperimentConfig cfg = load_common(c, "pressure-sweep");
    auto rows = run_pressure_sweep(cfg);
    std::vector<std::vector<double>> csv;
    for (const auto& r : rows) csv.push_back({r.pressure, r.eta_opt, r.t1e});
    const std::string path = out_path(cfg, "pressure_sweep.csv");
    write_csv_file(path, "pressure_torr,eta_opt,t1e_s", csv);
    Json j;
    j["experiment"] = "pressure-sweep";
    j["rows"] = Json::array();
    for (const auto& r : rows)
        j["rows"].push_back({{"pressure_torr", r.pressure}, {"eta_opt", r.eta_opt}, {"t1e_s", r.t1e}});
    j["outputs"] = {{"table", path}};
    return j;
}

Json cmd_od_sweep(const CommonOpts& c) {
    ExperimentConfig cfg = load_common(c, "od-sweep");
    auto rows = run_od_sweep(cfg);
    std::vector<std::vector<double>> csv;
    for (const auto& r : rows) csv.push_back({r.od, r.eta_opt, r.noise_counts, r.snr_1});
    const std::string path = out_path(cfg, "od_sweep.csv");
    write_csv_file(path, "od,eta_opt,noise_counts_per_trial,snr_1", csv);
    Json j;
    j["experiment"] = "od-sweep";
    j["rows"] = Json::array();
    for (const auto& r : rows)
        j["rows"].push_back({{"od", r.od},
                             {"eta_opt", r.eta_opt},
                             {"noise_counts_per_trial", r.noise_counts},
                             {"snr_1", r.snr_1}});
    j["outputs"] = {{"table", path}};
    return j;
}

Json cmd_bandwidth_sweep(const CommonOpts& c) {
    ExperimentConfig cfg = load_common(c, "bandwidth-sweep");
    auto rows = run_bandwidth_sweep(cfg);
    std::vector<std::vector<double>> csv;
    for (const auto& r : rows)
        csv.push_back({r.power * 1e3, to_2pi_mhz(r.eit_fwhm), to_2pi_mhz(r.retrieved_fwhm)});
    const std::string path = out_path(cfg, "bandwidth_sweep.csv");
    write_csv_file(path, "power_mw,eit_fwhm_2pi_mhz,retrieved_fwhm_2pi_mhz", csv);
    Json j;
    j["experiment"] = "bandwidth-sweep";
    j["rows"] = Json::array();
    for (const auto& r : rows)
        j["rows"].push_back({{"power_mw", r.power * 1e3},
                             {"eit_fwhm_2pi_mhz", to_2pi_mhz(r.eit_fwhm)},
                             {"retrieved_fwhm_2pi_mhz", to_2pi_mhz(r.retrieved_fwhm)}});
    j["outputs"] = {{"table", path}};
    return j;
}

Json cmd_single_photon(const CommonOpts& c) {
    ExperimentConfig cfg = load_common(c, "single-photon");
    MemoryResult res = run_single_photon_protocol(cfg);

    Json files = Json::object();
    write_pulse_csv(res.retrieved, out_path(cfg, "retrieved_pulse.csv"));
    files["retrieved_pulse"] = out_path(cfg, "retrieved_pulse.csv");
    if (!res.window_curve.empty()) {
        std::vector<std::vector<double>> csv;
        for (const auto& p : res.window_curve)
            csv.push_back({p.window, p.eta, p.snr_1, p.fidelity});
        const std::string path = out_path(cfg, "window_curve.csv");
        write_csv_file(path, "window_s,eta,snr_single_photon,fidelity", csv);
        files["window_curve"] = path;
    }
    {
        std::vector<std::vector<double>> csv;
        const std::size_t n = std::max(res.counts.hist_signal.size(), res.counts.hist_noise.size());
        for (std::size_t i = 0; i < n; ++i)
            csv.push_back({static_cast<double>(i),
                           i < res.counts.hist_signal.size()
                               ? static_cast<double>(res.counts.hist_signal[i])
                               : 0.0,
                           i < res.counts.hist_noise.size()
                               ? static_cast<double>(res.counts.hist_noise[i])
                               : 0.0});
        const std::string path = out_path(cfg, "count_histogram.csv");
        write_csv_file(path, "counts,trials_signal_window,trials_noise_window", csv);
        files["count_histogram"] = path;
    }

    Json j;
    j["experiment"] = "single-photon";
    j["window_s"] = res.window;
    j["eta"] = res.eta_window;
    j["snr_single_photon"] = res.snr_1;
    j["fidelity"] = res.fidelity;
    j["f_o"] = res.f_o;
    j["noise_rate_hz"] = res.noise_counts / res.window;
    j["f_m"] = res.f_m;
    j["eta_storage"] = res.eta_storage;
    j["eta_total"] = res.eta_total;
    j["snr_single_photon_counted"] = res.snr_1_counted;
    j["snr_counted_stderr"] = res.counts.snr_stderr;
    if (res.t1e) j["t1e_s"] = *res.t1e;
    j["outputs"] = files;
    return j;
}

Json cmd_eit_scan(const CommonOpts& c) {
    ExperimentConfig cfg = load_common(c, "eit-scan");
    EitScan scan = run_eit_scan(cfg);
    std::vector<std::vector<double>> csv;
    for (std::size_t ip = 0; ip < scan.powers.size(); ++ip)
        for (std::size_t id = 0; id < scan.deltas.size(); ++id)
            csv.push_back({scan.powers[ip] * 1e3, to_2pi_mhz(scan.deltas[id]),
                           scan.transmission[ip][id]});
    const std::string path = out_path(cfg, "eit_scan.csv");
    write_csv_file(path, "power_mw,delta_2pi_mhz,transmission", csv);
    Json j;
    j["experiment"] = "eit-scan";
    j["fwhm"] = Json::array();
    for (std::size_t ip = 0; ip < scan.powers.size(); ++ip) {
        Json r;
        r["power_mw"] = scan.powers[ip] * 1e3;
        if (scan.fwhm[ip])
            r["fwhm_2pi_mhz"] = to_2pi_mhz(*scan.fwhm[ip]);
        else
            r["fwhm_2pi_mhz"] = nullptr;
        j["fwhm"].push_back(r);
    }
    j["outputs"] = {{"table", path}};
    return j;
}

// ---- calculators ------------------------------------------------------------

std::vector<EtalonSpec> load_stack(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open stack file: " + path);
    Json doc;
    try {
        doc = Json::parse(f);
    } catch (const std::exception& e) {
        throw InvalidInput(std::string("stack file: JSON parse error: ") + e.what());
    }
    if (!doc.is_array() || doc.empty())
        throw InvalidInput("stack file must be a non-empty JSON array of etalon objects");
    std::vector<EtalonSpec> stack;
    for (const auto& je : doc) {
        for (const auto& item : je.items()) {
            const std::string& k = item.key();
            if (k != "fsr_ghz" && k != "finesse" && k != "peak_transmission" &&
                k != "detuning_offset_ghz" && k != "thermal_tuning_mhz_per_mk")
                throw InvalidInput("stack file: unknown key '" + k + "'");
        }
        EtalonSpec e;
        if (!je.contains("fsr_ghz") || !je.contains("finesse"))
            throw InvalidInput("stack file: each etalon needs fsr_ghz and finesse");
        e.fsr = je["fsr_ghz"].get<double>() * 1e9;
        e.finesse = je["finesse"].get<double>();
        if (je.contains("peak_transmission")) e.peak_transmission = je["peak_transmission"].get<double>();
        if (je.contains("detuning_offset_ghz")) e.detuning_offset = je["detuning_offset_ghz"].get<double>() * 1e9;
        if (je.contains("thermal_tuning_mhz_per_mk"))
            e.thermal_tuning = je["thermal_tuning_mhz_per_mk"].get<double>() * 1e9;
        e.validate();
        stack.push_back(e);
    }
    return stack;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"qmemsim: warm-vapor EIT quantum memory simulation toolkit"};
    app.require_subcommand(0, 1);

    CommonOpts store_o, opt_o, decay_o, fitdecay_o, psweep_o, odsweep_o, bwsweep_o, sp_o, eit_o;
    add_common(app.add_subcommand("store", "single storage/retrieval run"), store_o);
    add_common(app.add_subcommand("optimize-pulse", "iterative time-reversal pulse shaping"), opt_o);
    add_common(app.add_subcommand("decay", "storage-time decay curve from the dephasing model"),
               decay_o);
    add_common(app.add_subcommand("fit-decay", "collective (D0, gradient) fit to measured 1/e times"),
               fitdecay_o);
    add_common(app.add_subcommand("pressure-sweep", "optimized efficiency and storage time vs Ne pressure"),
               psweep_o);
    add_common(app.add_subcommand("od-sweep", "optimized efficiency, noise and SNR vs optical depth"),
               odsweep_o);
    add_common(app.add_subcommand("bandwidth-sweep", "EIT window and retrieved-photon bandwidth vs control power"),
               bwsweep_o);
    add_common(app.add_subcommand("single-photon", "single-photon-level protocol with Poisson counting"),
               sp_o);
    add_common(app.add_subcommand("eit-scan", "CW transmission vs two-photon detuning"), eit_o);

    // etalon calculator
    auto* etalon_cmd = app.add_subcommand("etalon", "Fabry-Perot transmission and cascade suppression");
    double fsr_ghz = 0.0, finesse = 0.0, peak_tr = 1.0, detuning_ghz = 0.0;
    double band_center_ghz = 0.0, band_width_ghz = 0.0;
    std::string stack_path;
    etalon_cmd->add_option("--fsr-ghz", fsr_ghz, "free spectral range, GHz");
    etalon_cmd->add_option("--finesse", finesse, "finesse");
    etalon_cmd->add_option("--peak-transmission", peak_tr, "on-resonance transmission (default 1)");
    etalon_cmd->add_option("--detuning-ghz", detuning_ghz, "probe detuning from the comb, GHz")
        ->required();
    etalon_cmd->add_option("--stack", stack_path, "JSON file with a list of etalons");
    etalon_cmd->add_option("--band-center-ghz", band_center_ghz,
                           "flat noise band center for band-averaged suppression, GHz");
    etalon_cmd->add_option("--band-width-ghz", band_width_ghz, "flat noise band width, GHz");

    // thermal calculator
    auto* thermal_cmd = app.add_subcommand("thermal", "etalon thermal step fit / transmission trace");
    std::string step_path, room_path, trace_out = "transmission_trace.csv";
    double dt_room_k = 0.0, xi = 0.0, tau_min = 0.0, tuning_mhz_per_mk = -2.4;
    double th_fsr_ghz = 13.0, th_finesse = 325.0, th_peak = 1.0, probe_det_mhz = 0.0;
    thermal_cmd->add_option("--step-trace", step_path,
                            "CSV t_seconds,temp_kelvin of cavity deviation after a room step");
    thermal_cmd->add_option("--dt-room-k", dt_room_k, "room step size, K");
    thermal_cmd->add_option("--room-trace", room_path, "CSV t_seconds,temp_kelvin of room temperature");
    thermal_cmd->add_option("--xi", xi, "isolation factor");
    thermal_cmd->add_option("--tau-min", tau_min, "thermal time constant, minutes");
    thermal_cmd->add_option("--tuning-mhz-per-mk", tuning_mhz_per_mk,
                            "thermal tuning coefficient, MHz/mK (default -2.4)");
    thermal_cmd->add_option("--fsr-ghz", th_fsr_ghz, "etalon FSR, GHz (default 13)");
    thermal_cmd->add_option("--finesse", th_finesse, "etalon finesse (default 325)");
    thermal_cmd->add_option("--peak-transmission", th_peak, "peak transmission (default 1)");
    thermal_cmd->add_option("--probe-detuning-mhz", probe_det_mhz, "probe detuning from comb, MHz");
    thermal_cmd->add_option("--trace-out", trace_out, "output CSV for the transmission trace");

    // fidelity calculator
    auto* fid_cmd = app.add_subcommand("fidelity", "SNR/fidelity calculus");
    double snr = -1.0, mean_photons = 1.0;
    double rail_ratio = -1.0, rail_phase = 0.0;
    fid_cmd->add_option("--snr", snr, "measured SNR (>= 0)");
    fid_cmd->add_option("--mean-photons", mean_photons, "mean photon number the SNR was measured at");
    fid_cmd->add_option("--rail-transmission-ratio", rail_ratio, "two-rail transmission ratio T in (0,1]");
    fid_cmd->add_option("--rail-phase-rad", rail_phase, "differential rail phase, rad");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help() << std::endl;
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    }

    if (app.get_subcommands().empty()) {
        err << app.help() << std::endl;
        return 1;
    }

    try {
        Json j;
        if (app.got_subcommand("store")) j = cmd_store(store_o);
        else if (app.got_subcommand("optimize-pulse")) j = cmd_optimize_pulse(opt_o);
        else if (app.got_subcommand("decay")) j = cmd_decay(decay_o);
        else if (app.got_subcommand("fit-decay")) j = cmd_fit_decay(fitdecay_o);
        else if (app.got_subcommand("pressure-sweep")) j = cmd_pressure_sweep(psweep_o);
        else if (app.got_subcommand("od-sweep")) j = cmd_od_sweep(odsweep_o);
        else if (app.got_subcommand("bandwidth-sweep")) j = cmd_bandwidth_sweep(bwsweep_o);
        else if (app.got_subcommand("single-photon")) j = cmd_single_photon(sp_o);
        else if (app.got_subcommand("eit-scan")) j = cmd_eit_scan(eit_o);
        else if (app.got_subcommand("etalon")) {
            std::vector<EtalonSpec> stack;
            if (!stack_path.empty()) {
                stack = load_stack(stack_path);
            } else {
                if (!(fsr_ghz > 0.0) || !(finesse > 1.0))
                    throw InvalidInput("etalon: give --stack or both --fsr-ghz and --finesse");
                EtalonSpec e;
                e.fsr = fsr_ghz * 1e9;
                e.finesse = finesse;
                e.peak_transmission = peak_tr;
                stack.push_back(e);
            }
            const double det = detuning_ghz * 1e9;
            double product = 1.0;
            Json per = Json::array();
            for (const EtalonSpec& e : stack) {
                const double t = airy_transmission(e, det);
                product *= t;
                per.push_back({{"fsr_ghz", e.fsr / 1e9},
                               {"finesse", e.finesse},
                               {"transmission", t},
                               {"fwhm_mhz", e.fwhm() / 1e6}});
            }
            j["transmission"] = product;
            j["suppression_db"] = cascade_suppression_db(stack, det);
            j["etalons"] = per;
            if (band_width_ghz > 0.0)
                j["band_average_suppression_db"] = band_average_suppression_db(
                    stack, band_center_ghz * 1e9, band_width_ghz * 1e9);
        } else if (app.got_subcommand("thermal")) {
            if (!step_path.empty()) {
                if (dt_room_k == 0.0) throw InvalidInput("thermal: --dt-room-k required with --step-trace");
                std::vector<std::pair<double, double>> trace;
                for (const auto& row : read_csv_file(step_path, "t_seconds,temp_kelvin"))
                    trace.emplace_back(row[0], row[1]);
                ThermalFit fit = fit_thermal(trace, dt_room_k);
                j["xi"] = fit.report.xi_unbounded ? Json(nullptr) : Json(fit.xi);
                j["xi_unbounded"] = fit.report.xi_unbounded;
                j["tau_s"] = fit.tau;
                j["tau_min"] = fit.tau / 60.0;
                j["rms_k"] = fit.report.rms;
            } else if (!room_path.empty()) {
                if (!(xi > 0.0) || !(tau_min > 0.0))
                    throw InvalidInput("thermal: --xi and --tau-min required with --room-trace");
                std::vector<std::pair<double, double>> room;
                for (const auto& row : read_csv_file(room_path, "t_seconds,temp_kelvin"))
                    room.emplace_back(row[0], row[1]);
                EtalonSpec e;
                e.fsr = th_fsr_ghz * 1e9;
                e.finesse = th_finesse;
                e.peak_transmission = th_peak;
                e.thermal_tuning = tuning_mhz_per_mk * 1e9;  // MHz/mK == GHz/K
                ThermalParams tp{xi, tau_min * 60.0, 0.0};
                auto trace = transmission_trace(e, tp, room, probe_det_mhz * 1e6);
                std::vector<std::vector<double>> rows;
                double mean = 0.0;
                for (const auto& [t, tr] : trace) {
                    rows.push_back({t, tr});
                    mean += tr;
                }
                mean /= static_cast<double>(trace.size());
                double var = 0.0;
                for (const auto& [t, tr] : trace) var += (tr - mean) * (tr - mean);
                var /= static_cast<double>(trace.size());
                write_csv_file(trace_out, "t_seconds,transmission", rows);
                j["mean_transmission"] = mean;
                j["relative_std"] = std::sqrt(var) / mean;
                j["outputs"] = {{"trace", trace_out}};
            } else {
                throw InvalidInput("thermal: give --step-trace (fit mode) or --room-trace (trace mode)");
            }
        } else if (app.got_subcommand("fidelity")) {
            if (snr >= 0.0) {
                const double snr1 = snr_single_photon(snr, mean_photons);
                if (mean_photons != 1.0) j["snr_single_photon"] = snr1;
                j["f_m"] = measurement_fidelity(snr1);
            }
            if (rail_ratio > 0.0 || fid_cmd->count("--rail-phase-rad") > 0) {
                RailPair rail;
                rail.transmission_ratio = rail_ratio > 0.0 ? rail_ratio : 1.0;
                rail.differential_phase = rail_phase;
                j["f_amplitude"] = worst_case_amplitude_fidelity(rail.transmission_ratio);
                j["f_phase"] = worst_case_phase_fidelity(rail.differential_phase);
                j["f_o"] = rail.operation_fidelity();
                if (j.contains("f_m"))
                    j["fidelity"] = combined_fidelity(j["f_o"].get<double>(), j["f_m"].get<double>());
            }
            if (j.empty()) throw InvalidInput("fidelity: nothing to compute; give --snr and/or rail flags");
        }

        out << j.dump(2) << std::endl;
        return 0;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericFailure& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        err << "error: config value has the wrong type: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace qmem::cli
