#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "qmem/constants.hpp"
#include "qmem/errors.hpp"
#include "qmem/fidelity.hpp"

using namespace qmem;

TEST_SUITE("fidelity") {

TEST_CASE("measurement fidelity: paper operating points and limits") {
    CHECK(measurement_fidelity(8.63) == doctest::Approx(0.9481).epsilon(5e-4));
    CHECK(measurement_fidelity(8.63) == doctest::Approx(1.0 - 1.0 / (2.0 * 9.63)).epsilon(1e-15));
    CHECK(measurement_fidelity(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(measurement_fidelity(17.3) == doctest::Approx(0.9727).epsilon(5e-4));
    CHECK_THROWS_AS(measurement_fidelity(-0.1), InvalidInput);

    double prev = 0.0;
    for (double s : {0.0, 0.5, 2.0, 10.0, 100.0, 1e6}) {
        const double f = measurement_fidelity(s);
        CHECK(f >= 0.5);
        CHECK(f < 1.0);
        CHECK(f >= prev);
        prev = f;
    }
}

TEST_CASE("snr scaling to one photon") {
    CHECK(snr_single_photon(23.65, 2.74) == doctest::Approx(8.63).epsilon(1e-3));
    CHECK(snr_single_photon(5.5, 1.0) == doctest::Approx(5.5).epsilon(1e-15));
    CHECK(snr_single_photon(0.0, 3.0) == 0.0);
    CHECK_THROWS_AS(snr_single_photon(1.0, 0.0), InvalidInput);
    CHECK_THROWS_AS(snr_single_photon(1.0, -2.0), InvalidInput);
}

TEST_CASE("amplitude worst case: closed form values") {
    CHECK(worst_case_amplitude_fidelity(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(worst_case_amplitude_fidelity(0.81) == doctest::Approx(4.0 * 0.9 / (1.9 * 1.9)).epsilon(1e-15));
    CHECK(worst_case_amplitude_fidelity(0.81) == doctest::Approx(0.99723).epsilon(1e-5));
    // T = 0.9: error ~6.9e-4, inside the paper's < 0.002 memory bound
    const double err = 1.0 - worst_case_amplitude_fidelity(0.9);
    CHECK(err == doctest::Approx(6.93e-4).epsilon(2e-3));
    CHECK(err < 0.002);
    CHECK_THROWS_AS(worst_case_amplitude_fidelity(0.0), InvalidInput);
    CHECK_THROWS_AS(worst_case_amplitude_fidelity(1.2), InvalidInput);
}

TEST_CASE("amplitude worst case equals the grid minimum over input states") {
    // F(B; t) = (1 + B(t-1))^2 / (1 + B(t^2-1)) minimized over B in [0, 1]
    for (double T : {0.25, 0.5, 0.81, 0.95}) {
        const double t = std::sqrt(T);
        double fmin = 2.0;
        for (int i = 0; i < 1000; ++i) {
            const double B = static_cast<double>(i) / 999.0;
            const double num = 1.0 + B * (t - 1.0);
            const double f = num * num / (1.0 + B * (t * t - 1.0));
            fmin = std::min(fmin, f);
        }
        CHECK(worst_case_amplitude_fidelity(T) == doctest::Approx(fmin).epsilon(1e-6));
        // the minimizing state is at B = 1/(1+t)
        const double b_star = 1.0 / (1.0 + t);
        const double num_star = 1.0 + b_star * (t - 1.0);
        CHECK(worst_case_amplitude_fidelity(T) ==
              doctest::Approx(num_star * num_star / (1.0 + b_star * (t * t - 1.0))).epsilon(1e-12));
    }
}

TEST_CASE("phase worst case: cos^2(phi/2)") {
    CHECK(worst_case_phase_fidelity(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(worst_case_phase_fidelity(pi) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    // phi = 0.284 rad costs about 0.02, the filter-unit bound
    CHECK(worst_case_phase_fidelity(0.284) == doctest::Approx(0.98).epsilon(1e-3));
}

TEST_CASE("combined fidelity is the plain product with domain checks") {
    CHECK(combined_fidelity(1.0, 0.73) == doctest::Approx(0.73).epsilon(1e-15));
    CHECK(combined_fidelity(0.42, 1.0) == doctest::Approx(0.42).epsilon(1e-15));
    CHECK(combined_fidelity(0.998 * 0.98, 0.948) == doctest::Approx(0.927).epsilon(1e-3));
    CHECK_THROWS_AS(combined_fidelity(-0.1, 0.5), InvalidInput);
    CHECK_THROWS_AS(combined_fidelity(0.5, 1.1), InvalidInput);
}

TEST_CASE("density-matrix composition reproduces the SNR formula to 1e-12") {
    // rho = A |psi><psi| + B I/2 with A = SNR/(1+SNR): <psi|rho|psi> must
    // equal 1 - 1/(2(1+SNR)) for any pure state
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double theta = std::acos(2.0 * u(rng) - 1.0);
        const double phi = two_pi * u(rng);
        const std::complex<double> alpha = std::cos(theta / 2.0);
        const std::complex<double> beta =
            std::sin(theta / 2.0) * std::complex<double>(std::cos(phi), std::sin(phi));
        const double snr = 30.0 * u(rng);
        const double A = snr / (1.0 + snr);
        const double B = 1.0 / (1.0 + snr);

        // rho in the {H, V} basis
        std::complex<double> rho[2][2] = {
            {A * alpha * std::conj(alpha) + B * 0.5, A * alpha * std::conj(beta)},
            {A * beta * std::conj(alpha), A * beta * std::conj(beta) + B * 0.5}};
        const std::complex<double> overlap =
            std::conj(alpha) * (rho[0][0] * alpha + rho[0][1] * beta) +
            std::conj(beta) * (rho[1][0] * alpha + rho[1][1] * beta);
        CHECK(overlap.imag() == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
        CHECK(overlap.real() == doctest::Approx(measurement_fidelity(snr)).epsilon(1e-12));
    }
}

TEST_CASE("window tradeoff on a synthetic record") {
    // build a record with a gaussian retrieval centered after retrieval_start
    FieldRecord rec;
    rec.grid.nz = 2;
    rec.grid.nt = 4000;
    rec.grid.dt = 2e-9;
    rec.t_start = 0.0;
    rec.energy_in = 1.0;
    rec.retrieval_start = 3e-6;
    const double sigma = 100e-9, center = 3.5e-6;
    double retrieved_energy = 0.0;
    for (int n = 0; n < rec.grid.nt; ++n) {
        const double t = rec.time(n);
        const double a = 0.2 * std::exp(-(t - center) * (t - center) / (2.0 * sigma * sigma));
        rec.e_out.emplace_back(a, 0.0);
        retrieved_energy += a * a * rec.grid.dt;
    }
    (void)retrieved_energy;

    NoiseModel noise;
    noise.floor_per_trial = 1.9e-3;
    noise.reference_window = 2e-6;

    std::vector<double> windows;
    for (int i = 1; i <= 24; ++i) windows.push_back(i * 0.2e-6);
    auto curve = window_tradeoff(rec, noise, 2.0, 20e-3, 1.0, 0.99, windows);

    // eta monotone non-decreasing in the window
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].eta >= curve[i - 1].eta - 1e-15);
    // once the pulse is fully captured the fidelity strictly decreases
    bool decreasing = true;
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].window > center - rec.retrieval_start + 5.0 * sigma &&
            curve[i].fidelity >= curve[i - 1].fidelity)
            decreasing = false;
    CHECK(decreasing);
    // fidelity never exceeds f_o
    for (const auto& pt : curve) CHECK(pt.fidelity <= 0.99 + 1e-12);

    CHECK_THROWS_AS(window_tradeoff(rec, noise, 2.0, 20e-3, 1.0, 0.99, {0.0}), InvalidInput);
    CHECK_THROWS_AS(window_tradeoff(rec, noise, 2.0, 20e-3, 1.0, 0.99, {1.0}), InvalidInput);
}

TEST_CASE("noise model: rate is monotone and window-linear") {
    NoiseModel noise;
    noise.floor_per_trial = 1.9e-3;
    noise.reference_window = 2e-6;
    noise.c_srs = 1e-3;
    noise.c_fwm = 1e-4;
    double prev = 0.0;
    for (double od : {0.0, 1.0, 2.0, 4.0}) {
        const double r = noise.rate_hz(od, 20e-3);
        CHECK(r >= prev);
        prev = r;
    }
    CHECK(noise.counts_per_trial(2.0, 20e-3) ==
          doctest::Approx(noise.rate_hz(2.0, 20e-3) * 2e-6).epsilon(1e-12));
}

TEST_CASE("simulate_counts: deterministic for a fixed seed") {
    auto a = simulate_counts(0.0164, 1.9e-3, 200000, 99);
    auto b = simulate_counts(0.0164, 1.9e-3, 200000, 99);
    CHECK(a.hist_signal == b.hist_signal);
    CHECK(a.hist_noise == b.hist_noise);
    CHECK(a.snr == b.snr);
    auto c = simulate_counts(0.0164, 1.9e-3, 200000, 100);
    CHECK(a.hist_signal != c.hist_signal);
}

TEST_CASE("simulate_counts: zero signal estimates zero snr within error") {
    auto st = simulate_counts(0.0, 5e-3, 400000, 3);
    CHECK(std::abs(st.snr) < 3.0 * st.snr_stderr + 1e-12);
}

TEST_CASE("simulate_counts: large-trials estimate converges to the true snr") {
    const double noise = 1.9e-3;
    const double signal = 8.63 * noise;
    auto st = simulate_counts(signal, noise, 1000000, 12345);
    CHECK(std::abs(st.snr - 8.63) < 3.0 * st.snr_stderr);
    // stderr shrinks as 1/sqrt(trials)
    auto st2 = simulate_counts(signal, noise, 4000000, 12345);
    CHECK(st2.snr_stderr < st.snr_stderr);
}

}  // TEST_SUITE
