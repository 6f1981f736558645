// Serial vs OpenMP benchmark for the hot kernels: the Maxwell-Bloch RK4
// stepper at several spatial resolutions and the Poisson counting
// Monte Carlo. Prints a timing table with speedups.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "qmem/bloch.hpp"
#include "qmem/constants.hpp"
#include "qmem/fidelity.hpp"
#include "qmem/medium.hpp"
#include "qmem/pulse.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace qmem;

namespace {

double wall_ms(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

struct StorageSetup {
    MediumSpec medium;
    ControlTiming control;
    ProbePulse pulse;
    SimGrid grid;
};

StorageSetup storage_setup(int nz) {
    StorageSetup s;
    s.medium.od = 2.0;
    s.medium.gamma_e = {from_2pi_mhz(2.87)};
    s.medium.level_offsets = {0.0};
    s.medium.coupling_signs = {1.0};

    s.control.power = 20e-3;
    s.control.rabi_per_sqrt_power = from_2pi_mhz(12.0);
    s.control.off_time = 1.5e-6;
    s.control.on_time = 3.0e-6;
    s.control.ramp_time = 100e-9;
    s.control.single_photon_detuning = 0.0;

    s.pulse = gaussian_pulse(1.1e-6, 300e-9, 0.0, 2e-9, 725);

    s.grid.nz = nz;
    s.grid.nt = 2500;
    s.grid.dt = 2e-9;
    return s;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both columns run the serial kernel\n\n");
#endif

    std::printf("Maxwell-Bloch storage run (nt = 2500, RK4):\n");
    std::printf("%8s %12s %12s %9s\n", "nz", "serial/ms", "openmp/ms", "speedup");
    for (int nz : {128, 512, 2048, 8192}) {
        StorageSetup s = storage_setup(nz);
        SolveOptions ser, par;
        ser.backend = Backend::serial;
        par.backend = Backend::openmp;
        // warm-up
        simulate(s.medium, s.control, s.pulse, s.grid, {}, par);
        const double t_ser =
            wall_ms([&] { simulate(s.medium, s.control, s.pulse, s.grid, {}, ser); });
        const double t_par =
            wall_ms([&] { simulate(s.medium, s.control, s.pulse, s.grid, {}, par); });
        std::printf("%8d %12.1f %12.1f %8.2fx\n", nz, t_ser, t_par, t_ser / t_par);
    }

    std::printf("\nPoisson counting Monte Carlo (signal 0.0164, noise 1.9e-3):\n");
    std::printf("%10s %12s %12s %9s\n", "trials", "1 thread/ms", "all/ms", "speedup");
    for (std::uint64_t trials : {1000000ULL, 4000000ULL}) {
#ifdef _OPENMP
        const int max_threads = omp_get_max_threads();
        omp_set_num_threads(1);
#endif
        const double t_ser = wall_ms([&] { simulate_counts(0.0164, 1.9e-3, trials, 7); });
#ifdef _OPENMP
        omp_set_num_threads(max_threads);
#endif
        const double t_par = wall_ms([&] { simulate_counts(0.0164, 1.9e-3, trials, 7); });
        std::printf("%10llu %12.1f %12.1f %8.2fx\n", static_cast<unsigned long long>(trials),
                    t_ser, t_par, t_ser / t_par);
    }
    return 0;
}
