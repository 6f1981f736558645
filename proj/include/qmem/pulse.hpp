// Complex temporal envelopes on uniform grids, plus the pulse metrics the
// rest of the toolkit is built on (energy, FWHM, spectral width).

#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace qmem {

struct ProbePulse {
    double t0 = 0.0;  // start time of sample 0, s
    double dt = 0.0;  // sample spacing, s
    std::vector<std::complex<double>> samples;
    double mean_photons = 1.0;  // n-bar of the pulse when used at single-photon level

    std::size_t size() const { return samples.size(); }
    double end_time() const { return t0 + dt * static_cast<double>(samples.size()); }

    // Linear interpolation of the envelope; zero outside the sampled window.
    std::complex<double> at(double t) const;
};

// Sum |s|^2 dt. Dimensionless energy in envelope units.
double pulse_energy(const ProbePulse& p);

// Scale to unit energy. Throws InvalidInput on a zero pulse.
ProbePulse normalize(const ProbePulse& p);

// Full width at half maximum of |s|^2, linearly interpolated between samples.
// Requires a single interior intensity maximum (an adjacent-sample plateau is
// fine); separated equal maxima or a peak touching the window edge throw
// InvalidInput.
double pulse_fwhm(const ProbePulse& p);

// FWHM of |FFT|^2 around its peak, in rad/s. The envelope is zero-padded so
// the spectral peak is finely resolved.
double pulse_bandwidth(const ProbePulse& p);

// Shared FWHM-of-samples helper: width of y (already an intensity-like,
// non-negative curve) at half of its global max, in units of dx.
// Used for temporal, spectral and EIT-window widths.
double fwhm_of_samples(const std::vector<double>& y, double dx);

// Pulse constructors used by the harness and tests.
ProbePulse gaussian_pulse(double center, double fwhm, double t0, double dt,
                          std::size_t n, double mean_photons = 1.0);
ProbePulse square_pulse(double start, double duration, double t0, double dt,
                        std::size_t n, double mean_photons = 1.0);

// CSV with required header "t_seconds,re,im".
void write_pulse_csv(const ProbePulse& p, std::ostream& out);
void write_pulse_csv(const ProbePulse& p, const std::string& path);
ProbePulse read_pulse_csv(std::istream& in);
ProbePulse read_pulse_csv(const std::string& path);

}  // namespace qmem
