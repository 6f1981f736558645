#include <doctest.h>

#include <cmath>
#include <limits>

#include "qmem/constants.hpp"
#include "qmem/errors.hpp"
#include "qmem/shaping.hpp"

using namespace qmem;

namespace {

MediumSpec test_medium(double od = 2.0) {
    MediumSpec m;
    m.od = od;
    m.gamma_e = {from_2pi_mhz(2.87)};
    m.level_offsets = {0.0};
    m.coupling_signs = {1.0};
    return m;
}

ControlTiming test_control() {
    ControlTiming c;
    c.power = 20e-3;
    c.rabi_per_sqrt_power = from_2pi_mhz(12.0);
    c.off_time = 1.3e-6;
    c.on_time = 2.6e-6;
    c.ramp_time = 100e-9;
    c.single_photon_detuning = 0.0;
    c.two_photon_detuning = 0.0;
    return c;
}

SimGrid test_grid() { return {96, 1150, 4e-9}; }

double pulse_l2_distance(const ProbePulse& a, const ProbePulse& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) acc += std::norm(a.samples[i] - b.samples[i]);
    return std::sqrt(acc * a.dt);
}

}  // namespace

TEST_SUITE("shaping") {

TEST_CASE("time_reverse: symmetric gaussian maps to itself") {
    ProbePulse p = gaussian_pulse(0.65e-6, 218e-9, 0.0, 4e-9, 325);
    ProbePulse r = time_reverse(p);
    double max_err = 0.0;
    for (std::size_t i = 0; i < p.samples.size(); ++i)
        max_err = std::max(max_err, std::abs(p.samples[i] - r.samples[i]));
    // center sits half a sample off the grid midpoint, hence the small slack
    CHECK(max_err / std::abs(p.samples[162]) < 0.03);
    CHECK(pulse_energy(r) == doctest::Approx(pulse_energy(p)).epsilon(1e-15));
}

TEST_CASE("time_reverse: rising exponential becomes decaying, phases conjugate") {
    ProbePulse p;
    p.t0 = 0.0;
    p.dt = 1e-9;
    for (int i = 0; i < 400; ++i)
        p.samples.push_back(std::exp(i * 5e-3) *
                            std::complex<double>(std::cos(0.01 * i), std::sin(0.01 * i)));
    ProbePulse r = time_reverse(p);
    // magnitudes reversed
    for (int i = 0; i < 400; ++i)
        CHECK(std::abs(r.samples[i]) == doctest::Approx(std::abs(p.samples[399 - i])).epsilon(1e-12));
    // rising became decaying
    CHECK(std::abs(r.samples.front()) > std::abs(r.samples.back()));
    // phases conjugated
    CHECK(r.samples[10].imag() == doctest::Approx(-p.samples[389].imag()).epsilon(1e-12));
}

TEST_CASE("time_reverse: double application is the identity") {
    ProbePulse p = gaussian_pulse(0.4e-6, 150e-9, 0.0, 2e-9, 500);
    for (auto& s : p.samples) s *= std::complex<double>(0.6, 0.8);
    ProbePulse rr = time_reverse(time_reverse(p));
    for (std::size_t i = 0; i < p.samples.size(); ++i)
        CHECK(std::abs(rr.samples[i] - p.samples[i]) < 1e-15);
}

TEST_CASE("optimize_pulse: square seed improves monotonically and converges fast") {
    ProbePulse seed = square_pulse(0.5e-6, 0.6e-6, 0.0, 4e-9, 325);
    ShapingReport rep = optimize_pulse(test_medium(), test_control(), seed, test_grid(), 8, 1e-3);

    CHECK(rep.converged);
    CHECK(rep.passes() <= 5);
    for (std::size_t i = 1; i < rep.iterations.size(); ++i)
        CHECK(rep.iterations[i].eta >= rep.iterations[i - 1].eta - 1e-4);
    // shaping actually helps
    CHECK(rep.final_eta() > 1.5 * rep.iterations[0].eta);
    // all iterates are unit-energy
    for (const auto& it : rep.iterations)
        CHECK(pulse_energy(it.pulse) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("optimize_pulse: infinite tolerance performs exactly one pass") {
    ProbePulse seed = gaussian_pulse(0.9e-6, 250e-9, 0.0, 4e-9, 325);
    ShapingReport rep = optimize_pulse(test_medium(), test_control(), seed, test_grid(), 8,
                                       std::numeric_limits<double>::infinity());
    CHECK(rep.converged);
    CHECK(rep.passes() == 1);
}

TEST_CASE("optimize_pulse: an already-optimal seed converges in one pass") {
    ProbePulse seed = square_pulse(0.5e-6, 0.6e-6, 0.0, 4e-9, 325);
    ShapingReport first = optimize_pulse(test_medium(), test_control(), seed, test_grid(), 10, 1e-4);
    REQUIRE(first.converged);

    ShapingReport again =
        optimize_pulse(test_medium(), test_control(), first.final_pulse, test_grid(), 10, 1e-3);
    CHECK(again.converged);
    CHECK(again.passes() == 1);
    CHECK(std::abs(again.final_eta() - first.final_eta()) < 2e-3);
}

TEST_CASE("optimize_pulse: converged point is a fixed point of the iteration") {
    ProbePulse seed = gaussian_pulse(0.9e-6, 250e-9, 0.0, 4e-9, 325);
    const double tol = 1e-3;
    ShapingReport rep = optimize_pulse(test_medium(), test_control(), seed, test_grid(), 12, tol);
    REQUIRE(rep.converged);

    ShapingReport extra = optimize_pulse(test_medium(), test_control(), rep.final_pulse,
                                         test_grid(), 1, std::numeric_limits<double>::infinity());
    CHECK(std::abs(extra.final_eta() - rep.final_eta()) < tol);
    CHECK(pulse_l2_distance(extra.final_pulse, normalize(rep.final_pulse)) < 10.0 * tol);
}

TEST_CASE("optimize_pulse: optimized efficiency is seed-independent") {
    const double tol = 1e-3;
    ProbePulse s1 = square_pulse(0.5e-6, 0.6e-6, 0.0, 4e-9, 325);
    ProbePulse s2 = gaussian_pulse(0.9e-6, 250e-9, 0.0, 4e-9, 325);
    ProbePulse s3 = gaussian_pulse(0.6e-6, 400e-9, 0.0, 4e-9, 325);
    const double e1 = optimize_pulse(test_medium(), test_control(), s1, test_grid(), 12, tol).final_eta();
    const double e2 = optimize_pulse(test_medium(), test_control(), s2, test_grid(), 12, tol).final_eta();
    const double e3 = optimize_pulse(test_medium(), test_control(), s3, test_grid(), 12, tol).final_eta();
    CHECK(std::abs(e1 - e2) < 2.0 * tol);
    CHECK(std::abs(e1 - e3) < 2.0 * tol);
}

TEST_CASE("optimize_pulse: degenerate seed raises") {
    // pulse entirely after the retrieval switch stores nothing
    ProbePulse seed = gaussian_pulse(4.2e-6, 100e-9, 3.9e-6, 4e-9, 150);
    CHECK_THROWS_AS(optimize_pulse(test_medium(), test_control(), seed, test_grid(), 5, 1e-3),
                    InvalidInput);
}

TEST_CASE("two-excited-level mode: destructive interference caps the efficiency") {
    // f = (+1, -1) with a finite splitting: optimized eta below the
    // single-level value at equal total od, dropping further with pressure
    MediumSpec two = test_medium(2.0);
    two.gamma_e.push_back(from_2pi_mhz(2.87));
    two.level_offsets.push_back(from_2pi_mhz(10.0));
    two.coupling_signs.push_back(-1.0);

    ProbePulse seed = square_pulse(0.5e-6, 0.6e-6, 0.0, 4e-9, 325);
    const double eta_single =
        optimize_pulse(test_medium(2.0), test_control(), seed, test_grid(), 5, 1e-3).final_eta();

    std::vector<double> etas;
    for (double pressure : {0.0, 4.0, 10.0}) {
        MediumSpec m = two;
        m.buffer_pressure = pressure;
        const double rate =
            m.gamma_eff(1) + std::abs(test_control().single_photon_detuning - m.level_offsets[1]);
        const double dt = std::min(4e-9, 1.0 / (8.5 * rate));
        SimGrid grid{96, static_cast<int>(4.6e-6 / dt), dt};
        ProbePulse s = square_pulse(0.5e-6, 0.6e-6, 0.0, dt,
                                    static_cast<std::size_t>(std::lround(1.3e-6 / dt)));
        etas.push_back(optimize_pulse(m, test_control(), s, grid, 5, 1e-3).final_eta());
    }
    CHECK(etas[0] < eta_single);
    CHECK(etas[1] < etas[0]);
    CHECK(etas[2] < etas[1]);
}

}  // TEST_SUITE
