#include "qmem/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qmem/constants.hpp"
#include "qmem/errors.hpp"
#include "qmem/fft.hpp"

namespace qmem {

std::complex<double> ProbePulse::at(double t) const {
    if (samples.empty() || dt <= 0.0) return {0.0, 0.0};
    double x = (t - t0) / dt;
    // half-ulp guard so grid-aligned sample times are never dropped
    const double edge = static_cast<double>(samples.size() - 1);
    if (x < -1e-9 || x > edge + 1e-9) return {0.0, 0.0};
    x = std::clamp(x, 0.0, edge);
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= samples.size()) return samples.back();
    const double f = x - static_cast<double>(i);
    return samples[i] * (1.0 - f) + samples[i + 1] * f;
}

double pulse_energy(const ProbePulse& p) {
    if (p.samples.empty()) throw InvalidInput("pulse_energy: empty sample sequence");
    if (p.dt <= 0.0) throw InvalidInput("pulse_energy: non-positive dt");
    double acc = 0.0;
    for (const auto& s : p.samples) acc += std::norm(s);
    return acc * p.dt;
}

ProbePulse normalize(const ProbePulse& p) {
    const double e = pulse_energy(p);
    if (e <= 0.0) throw InvalidInput("normalize: zero-energy pulse");
    ProbePulse out = p;
    const double scale = 1.0 / std::sqrt(e);
    for (auto& s : out.samples) s *= scale;
    return out;
}

double fwhm_of_samples(const std::vector<double>& y, double dx) {
    const std::size_t n = y.size();
    if (n < 3) throw InvalidInput("fwhm: need at least 3 samples");

    double ymax = y[0];
    for (double v : y) ymax = std::max(ymax, v);
    if (!(ymax > 0.0)) throw InvalidInput("fwhm: all-zero curve");

    // Locate the global maximum; tolerate an adjacent-sample plateau but
    // reject separated equal maxima (ambiguous) and boundary peaks.
    const double tol = ymax * 1e-9;
    std::size_t first = n, last = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] >= ymax - tol) {
            first = std::min(first, i);
            last = std::max(last, i);
        }
    }
    for (std::size_t i = first; i <= last; ++i)
        if (y[i] < ymax - tol)
            throw InvalidInput("fwhm: two separated global maxima (ambiguous peak)");
    if (first == 0 || last == n - 1)
        throw InvalidInput("fwhm: peak touches the window boundary");

    const double half = 0.5 * ymax;
    // left crossing: last index below half when scanning outward from the peak
    double xl = 0.0, xr = 0.0;
    bool found = false;
    for (std::size_t i = first; i-- > 0;) {
        if (y[i] < half) {
            const double f = (half - y[i]) / (y[i + 1] - y[i]);
            xl = (static_cast<double>(i) + f) * dx;
            found = true;
            break;
        }
    }
    if (!found) throw InvalidInput("fwhm: no half-maximum crossing left of peak");
    found = false;
    for (std::size_t i = last + 1; i < n; ++i) {
        if (y[i] < half) {
            const double f = (y[i - 1] - half) / (y[i - 1] - y[i]);
            xr = (static_cast<double>(i - 1) + f) * dx;
            found = true;
            break;
        }
    }
    if (!found) throw InvalidInput("fwhm: no half-maximum crossing right of peak");
    return xr - xl;
}

double pulse_fwhm(const ProbePulse& p) {
    if (p.samples.size() < 3) throw InvalidInput("pulse_fwhm: need at least 3 samples");
    std::vector<double> intensity(p.samples.size());
    for (std::size_t i = 0; i < p.samples.size(); ++i) intensity[i] = std::norm(p.samples[i]);
    return fwhm_of_samples(intensity, p.dt);
}

double pulse_bandwidth(const ProbePulse& p) {
    if (p.samples.empty()) throw InvalidInput("pulse_bandwidth: empty pulse");
    if (pulse_energy(p) <= 0.0) throw InvalidInput("pulse_bandwidth: zero pulse");

    // Zero-pad heavily so the interpolated spectral FWHM is grid-insensitive.
    const std::size_t nfft = std::max<std::size_t>(next_pow2(p.samples.size() * 16), 4096);
    std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
    std::copy(p.samples.begin(), p.samples.end(), buf.begin());
    fft_inplace(buf);

    // fftshift so the peak sits in the interior of the scanned curve
    std::vector<double> spec(nfft);
    const std::size_t half = nfft / 2;
    for (std::size_t i = 0; i < nfft; ++i) spec[i] = std::norm(buf[(i + half) % nfft]);

    const double domega = two_pi / (static_cast<double>(nfft) * p.dt);
    return fwhm_of_samples(spec, domega);
}

ProbePulse gaussian_pulse(double center, double fwhm, double t0, double dt,
                          std::size_t n, double mean_photons) {
    if (n < 2 || dt <= 0.0 || fwhm <= 0.0)
        throw InvalidInput("gaussian_pulse: need n >= 2, dt > 0, fwhm > 0");
    // fwhm is the intensity FWHM; |E|^2 = exp(-t^2/sigma_i^2)
    const double sigma_i = fwhm / (2.0 * std::sqrt(std::log(2.0)));
    ProbePulse p;
    p.t0 = t0;
    p.dt = dt;
    p.mean_photons = mean_photons;
    p.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t0 + dt * static_cast<double>(i) - center;
        p.samples[i] = std::exp(-t * t / (2.0 * sigma_i * sigma_i));
    }
    return normalize(p);
}

ProbePulse square_pulse(double start, double duration, double t0, double dt,
                        std::size_t n, double mean_photons) {
    if (n < 2 || dt <= 0.0 || duration <= 0.0)
        throw InvalidInput("square_pulse: need n >= 2, dt > 0, duration > 0");
    ProbePulse p;
    p.t0 = t0;
    p.dt = dt;
    p.mean_photons = mean_photons;
    p.samples.assign(n, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t0 + dt * static_cast<double>(i);
        if (t >= start && t < start + duration) p.samples[i] = 1.0;
    }
    return normalize(p);
}

void write_pulse_csv(const ProbePulse& p, std::ostream& out) {
    out << "t_seconds,re,im\n";
    char line[96];
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
        const double t = p.t0 + p.dt * static_cast<double>(i);
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", t, p.samples[i].real(),
                      p.samples[i].imag());
        out << line;
    }
}

void write_pulse_csv(const ProbePulse& p, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InvalidInput("cannot open for writing: " + path);
    write_pulse_csv(p, f);
}

ProbePulse read_pulse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("pulse csv: empty file");
    // strip whitespace for header comparison
    std::string header;
    for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) header += c;
    if (header != "t_seconds,re,im")
        throw InvalidInput("pulse csv: expected header 't_seconds,re,im', got '" + line + "'");

    std::vector<double> ts;
    ProbePulse p;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        double t, re, im;
        char c1, c2;
        if (!(ss >> t >> c1 >> re >> c2 >> im) || c1 != ',' || c2 != ',')
            throw InvalidInput("pulse csv: malformed row '" + line + "'");
        ts.push_back(t);
        p.samples.emplace_back(re, im);
    }
    if (ts.size() < 2) throw InvalidInput("pulse csv: need at least 2 rows");
    p.t0 = ts.front();
    p.dt = ts[1] - ts[0];
    if (p.dt <= 0.0) throw InvalidInput("pulse csv: non-increasing time column");
    for (std::size_t i = 1; i < ts.size(); ++i) {
        const double expect = p.t0 + p.dt * static_cast<double>(i);
        if (std::abs(ts[i] - expect) > 1e-6 * p.dt + 1e-18)
            throw InvalidInput("pulse csv: non-uniform time grid near row " + std::to_string(i + 1));
    }
    return p;
}

ProbePulse read_pulse_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open: " + path);
    return read_pulse_csv(f);
}

}  // namespace qmem
