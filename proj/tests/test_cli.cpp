#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qmem/cli.hpp"
#include "qmem/constants.hpp"
#include "qmem/etalon.hpp"
#include "qmem/pulse.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
    Json json() const { return Json::parse(out); }
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = qmem::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path test_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "qmem_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
    const fs::path p = test_dir() / name;
    std::ofstream f(p);
    f << content;
    return p.string();
}

std::string store_config(const std::string& name, const std::string& extra_params = "") {
    return write_file(name, R"({
  "experiment": "store",
  "seed": 5,
  "medium": {"od": 2.0, "gamma_e_2pi_mhz": [2.87]},
  "control": {"power_mw": 20.0, "rabi_per_sqrt_power_2pi_mhz_per_sqrt_w": 12.0,
              "off_time_us": 1.3, "on_time_us": 2.6, "ramp_time_ns": 100.0,
              "single_photon_detuning_2pi_mhz": 0.0},
  "pulse": {"shape": "gaussian", "start_us": 0.0, "duration_us": 1.3, "dt_ns": 4.0,
            "center_us": 0.9, "fwhm_ns": 250.0},
  "grid": {"nz": 64, "nt": 1150, "dt_ns": 4.0},
  "params": {)" + extra_params + R"(}
})");
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("no arguments prints usage and exits 1") {
    CliResult r = run_cli({});
    CHECK(r.code == 1);
    CHECK(r.err.find("qmemsim") != std::string::npos);
}

TEST_CASE("unknown subcommand exits 1") {
    CliResult r = run_cli({"frobnicate"});
    CHECK(r.code == 1);
}

TEST_CASE("fidelity --snr 8.63 prints the measurement fidelity") {
    CliResult r = run_cli({"fidelity", "--snr", "8.63"});
    REQUIRE(r.code == 0);
    CHECK(r.json()["f_m"].get<double>() == doctest::Approx(0.9481).epsilon(5e-4));
}

TEST_CASE("fidelity with rails combines worst-case factors") {
    CliResult r = run_cli({"fidelity", "--snr", "8.63", "--rail-transmission-ratio", "0.81",
                           "--rail-phase-rad", "0.284"});
    REQUIRE(r.code == 0);
    Json j = r.json();
    CHECK(j["f_amplitude"].get<double>() == doctest::Approx(0.99723).epsilon(1e-4));
    CHECK(j["f_phase"].get<double>() == doctest::Approx(0.98).epsilon(1e-3));
    CHECK(j["fidelity"].get<double>() ==
          doctest::Approx(j["f_o"].get<double>() * j["f_m"].get<double>()).epsilon(1e-12));
    // out-of-domain value is a validation error
    CHECK(run_cli({"fidelity", "--snr", "-2"}).code == 2);
}

TEST_CASE("etalon --stack reproduces the control-field suppression budget") {
    const std::string stack = write_file("stack.json", R"([
  {"fsr_ghz": 13.0, "finesse": 325.0},
  {"fsr_ghz": 21.0, "finesse": 210.0}
])");
    CliResult r = run_cli({"etalon", "--stack", stack, "--detuning-ghz", "6.834"});
    REQUIRE(r.code == 0);
    Json j = r.json();
    CHECK(j["suppression_db"].get<double>() == doctest::Approx(87.4).epsilon(0.01));
    CHECK(j["suppression_db"].get<double>() > 80.0);

    CliResult band = run_cli({"etalon", "--stack", stack, "--detuning-ghz", "6.834",
                              "--band-center-ghz", "6.834", "--band-width-ghz", "0.5"});
    REQUIRE(band.code == 0);
    CHECK(band.json()["band_average_suppression_db"].get<double>() >= 40.0);
}

TEST_CASE("etalon single cavity on resonance") {
    CliResult r =
        run_cli({"etalon", "--fsr-ghz", "13", "--finesse", "325", "--detuning-ghz", "0"});
    REQUIRE(r.code == 0);
    CHECK(r.json()["transmission"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.json()["etalons"][0]["fwhm_mhz"].get<double>() == doctest::Approx(40.0).epsilon(1e-9));
}

TEST_CASE("thermal fit mode recovers xi and tau from a synthetic step") {
    qmem::ThermalParams truth{58.0, 63.0 * 60.0, 0.0};
    std::ostringstream csv;
    csv << "t_seconds,temp_kelvin\n";
    for (int i = 0; i <= 200; ++i) {
        const double t = i * (6.0 * truth.tau / 200.0);
        csv << t << "," << qmem::thermal_step(truth, 6.3, t) << "\n";
    }
    const std::string path = write_file("step.csv", csv.str());
    CliResult r = run_cli({"thermal", "--step-trace", path, "--dt-room-k", "6.3"});
    REQUIRE(r.code == 0);
    CHECK(r.json()["xi"].get<double>() == doctest::Approx(58.0).epsilon(1e-3));
    CHECK(r.json()["tau_min"].get<double>() == doctest::Approx(63.0).epsilon(1e-3));
}

TEST_CASE("thermal trace mode: constant room gives constant transmission") {
    std::ostringstream csv;
    csv << "t_seconds,temp_kelvin\n";
    for (int i = 0; i < 100; ++i) csv << 10.0 * i << ",295.0\n";
    const std::string path = write_file("room.csv", csv.str());
    const std::string trace_out = (test_dir() / "trace.csv").string();
    CliResult r = run_cli({"thermal", "--room-trace", path, "--xi", "58", "--tau-min", "63",
                           "--probe-detuning-mhz", "0", "--trace-out", trace_out});
    REQUIRE(r.code == 0);
    CHECK(r.json()["relative_std"].get<double>() < 1e-12);
    CHECK(r.json()["mean_transmission"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fs::exists(trace_out));
}

TEST_CASE("store writes the field record and a JSON summary") {
    const std::string cfg = store_config("store.json", R"("snapshot_times_us": [1.5])");
    const std::string out_dir = (test_dir() / "store_out").string();
    CliResult r = run_cli({"store", "--config", cfg, "--out-dir", out_dir});
    REQUIRE(r.code == 0);
    Json j = r.json();
    CHECK(j["eta_storage"].get<double>() > 0.0);
    CHECK(j["eta_total"].get<double>() > 0.0);
    CHECK(fs::exists(fs::path(out_dir) / "eout.csv"));
    CHECK(fs::exists(fs::path(out_dir) / "spinwave_0.csv"));
    const std::string head = read_file((fs::path(out_dir) / "eout.csv").string()).substr(0, 26);
    CHECK(head == "t_seconds,re_eout,im_eout\n");
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    const std::string cfg = store_config("store_det.json");
    const std::string d1 = (test_dir() / "det1").string();
    const std::string d2 = (test_dir() / "det2").string();
    CliResult r1 = run_cli({"store", "--config", cfg, "--out-dir", d1});
    CliResult r2 = run_cli({"store", "--config", cfg, "--out-dir", d2});
    REQUIRE(r1.code == 0);
    REQUIRE(r2.code == 0);
    // JSON summaries differ only in the output paths
    CHECK(read_file(d1 + "/eout.csv") == read_file(d2 + "/eout.csv"));
    CHECK(r1.out.size() == r2.out.size());
}

TEST_CASE("unknown config keys exit with code 2") {
    const std::string cfg = store_config("store_bad.json", R"("not_a_key": 1)");
    CliResult r = run_cli({"store", "--config", cfg});
    CHECK(r.code == 2);
    CHECK(r.err.find("not_a_key") != std::string::npos);

    // wrong experiment name for the subcommand is also a config error
    CliResult r2 = run_cli({"decay", "--config", store_config("store2.json")});
    CHECK(r2.code == 2);

    // missing file
    CHECK(run_cli({"store", "--config", (test_dir() / "nope.json").string()}).code == 2);
}

TEST_CASE("numerical failures exit with code 3") {
    // no decay mechanism at all: the 1/e search cannot bracket a crossing
    const std::string cfg = write_file("psweep_bad.json", R"({
  "experiment": "pressure-sweep",
  "medium": {"od": 2.0, "gamma_e_2pi_mhz": [2.87, 2.87],
             "level_offsets_2pi_mhz": [0.0, 6.0], "coupling_signs": [1.0, -1.0]},
  "control": {"power_mw": 20.0, "rabi_per_sqrt_power_2pi_mhz_per_sqrt_w": 12.0,
              "off_time_us": 1.3, "on_time_us": 2.6, "ramp_time_ns": 100.0,
              "single_photon_detuning_2pi_mhz": 0.0},
  "pulse": {"shape": "gaussian", "start_us": 0.0, "duration_us": 1.3, "dt_ns": 0.9,
            "center_us": 0.9, "fwhm_ns": 250.0},
  "grid": {"nz": 64, "nt": 5100, "dt_ns": 0.9},
  "dephasing": {"waist_mm": 1.6, "d0_m2_per_s": 0.0, "pressure_torr": 10.0},
  "params": {"pressures_torr": [2.0], "max_iters": 1}
})");
    CliResult r = run_cli({"pressure-sweep", "--config", cfg});
    CHECK(r.code == 3);
}

TEST_CASE("optimize-pulse emits a per-iteration table and the final pulse") {
    const std::string cfg = write_file("opt.json", R"({
  "experiment": "optimize-pulse",
  "medium": {"od": 2.0, "gamma_e_2pi_mhz": [2.87]},
  "control": {"power_mw": 20.0, "rabi_per_sqrt_power_2pi_mhz_per_sqrt_w": 12.0,
              "off_time_us": 1.3, "on_time_us": 2.6, "ramp_time_ns": 100.0,
              "single_photon_detuning_2pi_mhz": 0.0},
  "pulse": {"shape": "square", "start_us": 0.0, "duration_us": 1.3, "dt_ns": 4.0,
            "square_start_us": 0.5, "square_duration_us": 0.6},
  "grid": {"nz": 64, "nt": 1150, "dt_ns": 4.0},
  "params": {"max_iters": 6, "tol": 1e-3}
})");
    const std::string out_dir = (test_dir() / "opt_out").string();
    CliResult r = run_cli({"optimize-pulse", "--config", cfg, "--out-dir", out_dir});
    REQUIRE(r.code == 0);
    CHECK(r.json()["converged"].get<bool>());
    CHECK(r.json()["eta_final"].get<double>() > 0.05);

    std::ifstream table(fs::path(out_dir) / "iterations.csv");
    std::string line;
    std::getline(table, line);
    CHECK(line == "iteration,eta");
    double prev = -1.0;
    while (std::getline(table, line)) {
        const double eta = std::stod(line.substr(line.find(',') + 1));
        CHECK(eta >= prev - 1e-4);
        prev = eta;
    }
    // the final pulse round-trips through the pulse CSV reader
    std::ifstream pf(fs::path(out_dir) / "final_pulse.csv");
    qmem::ProbePulse final_pulse = qmem::read_pulse_csv(pf);
    CHECK(qmem::pulse_energy(final_pulse) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("single-photon summary carries the documented report schema") {
    const std::string cfg = write_file("sp.json", R"({
  "experiment": "single-photon",
  "seed": 11,
  "medium": {"od": 2.0, "gamma_e_2pi_mhz": [2.87]},
  "control": {"power_mw": 20.0, "rabi_per_sqrt_power_2pi_mhz_per_sqrt_w": 12.0,
              "off_time_us": 1.3, "on_time_us": 2.6, "ramp_time_ns": 100.0,
              "single_photon_detuning_2pi_mhz": 0.0},
  "pulse": {"shape": "gaussian", "start_us": 0.0, "duration_us": 1.3, "dt_ns": 4.0,
            "center_us": 0.9, "fwhm_ns": 218.0, "mean_photons": 2.74},
  "grid": {"nz": 64, "nt": 1150, "dt_ns": 4.0},
  "noise": {"floor_per_trial": 1.9e-3, "reference_window_us": 2.0},
  "params": {"window_ns": 200.0, "trials": 20000, "f_o": 0.978}
})");
    const std::string out_dir = (test_dir() / "sp_out").string();
    CliResult r = run_cli({"single-photon", "--config", cfg, "--out-dir", out_dir});
    REQUIRE(r.code == 0);
    Json j = r.json();
    for (const char* key :
         {"window_s", "eta", "snr_single_photon", "fidelity", "f_o", "noise_rate_hz"})
        CHECK(j.contains(key));
    CHECK(j["fidelity"].get<double>() ==
          doctest::Approx(j["f_o"].get<double>() * j["f_m"].get<double>()).epsilon(1e-12));
    CHECK(j["noise_rate_hz"].get<double>() == doctest::Approx(950.0).epsilon(1e-9));
    CHECK(fs::exists(fs::path(out_dir) / "count_histogram.csv"));
}

}  // TEST_SUITE
