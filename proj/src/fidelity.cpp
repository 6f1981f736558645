#include "qmem/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "qmem/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qmem {

void NoiseModel::validate() const {
    if (floor_per_trial < 0.0 || c_srs < 0.0 || c_fwm < 0.0)
        throw InvalidInput("noise model: coefficients must be >= 0");
    if (!(reference_window > 0.0)) throw InvalidInput("noise model: reference window must be > 0");
}

double NoiseModel::counts_per_trial(double od, double control_power_w) const {
    return floor_per_trial + c_srs * od * control_power_w +
           c_fwm * od * od * control_power_w * control_power_w;
}

double NoiseModel::rate_hz(double od, double control_power_w) const {
    return counts_per_trial(od, control_power_w) / reference_window;
}

double measurement_fidelity(double snr) {
    if (snr < 0.0) throw InvalidInput("measurement_fidelity: snr must be >= 0");
    return 1.0 - 1.0 / (2.0 * (1.0 + snr));
}

double snr_single_photon(double snr_measured, double mean_photons) {
    if (!(mean_photons > 0.0)) throw InvalidInput("snr_single_photon: mean_photons must be > 0");
    return snr_measured / mean_photons;
}

double worst_case_amplitude_fidelity(double T) {
    if (!(T > 0.0 && T <= 1.0))
        throw InvalidInput("worst_case_amplitude_fidelity: T must be in (0, 1]");
    const double s = std::sqrt(T);
    return 4.0 * s / ((1.0 + s) * (1.0 + s));
}

double worst_case_phase_fidelity(double phi) {
    const double c = std::cos(0.5 * phi);
    return c * c;
}

double combined_fidelity(double f_o, double f_m) {
    if (!(f_o >= 0.0 && f_o <= 1.0) || !(f_m >= 0.0 && f_m <= 1.0))
        throw InvalidInput("combined_fidelity: factors must be in [0, 1]");
    return f_o * f_m;
}

double RailPair::operation_fidelity() const {
    return worst_case_amplitude_fidelity(transmission_ratio) *
           worst_case_phase_fidelity(differential_phase);
}

std::vector<WindowPoint> window_tradeoff(const FieldRecord& record, const NoiseModel& noise,
                                         double od, double control_power_w, double n_in,
                                         double f_o, const std::vector<double>& windows) {
    noise.validate();
    if (!(n_in > 0.0)) throw InvalidInput("window_tradeoff: n_in must be > 0");
    const double rate = noise.rate_hz(od, control_power_w);

    std::vector<WindowPoint> out;
    for (double w : windows) {
        if (!(w > 0.0)) throw InvalidInput("window_tradeoff: windows must be > 0");
        WindowPoint pt;
        pt.window = w;
        pt.eta = storage_efficiency(record, record.retrieval_start, w);
        const double noise_counts = rate * w;
        // noiseless operation: the measurement fidelity saturates at 1
        pt.snr_1 = noise_counts > 0.0
                       ? pt.eta / noise_counts  // (n_in eta / noise) / n_in
                       : (pt.eta > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        pt.fidelity = combined_fidelity(f_o, measurement_fidelity(pt.snr_1));
        out.push_back(pt);
    }
    return out;
}

namespace {

// splitmix64, used to derive well-separated per-block streams from one seed
std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Knuth multiplication sampler; exact for the small per-trial rates used
// here. Means above 60 are split into exact partial draws to avoid the
// exp() underflow.
std::uint64_t poisson_draw(double mean, std::mt19937_64& rng) {
    std::uint64_t total = 0;
    while (mean > 60.0) {
        // Poisson(a + b) = Poisson(a) + Poisson(b)
        double part = 60.0;
        const double l = std::exp(-part);
        double p = 1.0;
        std::uint64_t k = 0;
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        do {
            ++k;
            p *= u01(rng);
        } while (p > l);
        total += k - 1;
        mean -= part;
    }
    const double l = std::exp(-mean);
    double p = 1.0;
    std::uint64_t k = 0;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    do {
        ++k;
        p *= u01(rng);
    } while (p > l);
    return total + k - 1;
}

}  // namespace

CountStats simulate_counts(double signal, double noise, std::uint64_t trials,
                           std::uint64_t seed) {
    if (trials < 1) throw InvalidInput("simulate_counts: trials must be >= 1");
    if (signal < 0.0 || noise < 0.0)
        throw InvalidInput("simulate_counts: negative mean counts");

    constexpr std::uint64_t block_size = 1 << 16;
    const std::uint64_t n_blocks = (trials + block_size - 1) / block_size;

    struct Block {
        std::vector<std::uint64_t> hist_s, hist_n;
        std::uint64_t sum_s = 0, sum_n = 0;
        double sum_s2 = 0.0, sum_n2 = 0.0;
    };
    std::vector<Block> blocks(n_blocks);

    const auto nb = static_cast<long long>(n_blocks);
#pragma omp parallel for schedule(dynamic)
    for (long long b = 0; b < nb; ++b) {
        std::uint64_t mix = seed + 0x51ed2701a129f813ULL * static_cast<std::uint64_t>(b + 1);
        std::mt19937_64 rng(splitmix64(mix));
        Block& blk = blocks[b];
        const std::uint64_t begin = static_cast<std::uint64_t>(b) * block_size;
        const std::uint64_t end = std::min(trials, begin + block_size);
        for (std::uint64_t i = begin; i < end; ++i) {
            const std::uint64_t ks = poisson_draw(signal + noise, rng);
            const std::uint64_t kn = poisson_draw(noise, rng);
            if (ks >= blk.hist_s.size()) blk.hist_s.resize(ks + 1, 0);
            if (kn >= blk.hist_n.size()) blk.hist_n.resize(kn + 1, 0);
            ++blk.hist_s[ks];
            ++blk.hist_n[kn];
            blk.sum_s += ks;
            blk.sum_n += kn;
            blk.sum_s2 += static_cast<double>(ks) * static_cast<double>(ks);
            blk.sum_n2 += static_cast<double>(kn) * static_cast<double>(kn);
        }
    }

    // merge in block order: integer sums, deterministic for any thread count
    CountStats st;
    st.trials = trials;
    std::uint64_t sum_s = 0, sum_n = 0;
    double sum_s2 = 0.0, sum_n2 = 0.0;
    for (const Block& blk : blocks) {
        if (blk.hist_s.size() > st.hist_signal.size()) st.hist_signal.resize(blk.hist_s.size(), 0);
        if (blk.hist_n.size() > st.hist_noise.size()) st.hist_noise.resize(blk.hist_n.size(), 0);
        for (std::size_t i = 0; i < blk.hist_s.size(); ++i) st.hist_signal[i] += blk.hist_s[i];
        for (std::size_t i = 0; i < blk.hist_n.size(); ++i) st.hist_noise[i] += blk.hist_n[i];
        sum_s += blk.sum_s;
        sum_n += blk.sum_n;
        sum_s2 += blk.sum_s2;
        sum_n2 += blk.sum_n2;
    }

    const double nt = static_cast<double>(trials);
    st.mean_signal = static_cast<double>(sum_s) / nt;
    st.mean_noise = static_cast<double>(sum_n) / nt;
    if (st.mean_noise > 0.0) {
        st.snr = (st.mean_signal - st.mean_noise) / st.mean_noise;
        // delta method on snr = m_s/m_n - 1 with independent windows
        const double var_s = (sum_s2 / nt - st.mean_signal * st.mean_signal) / nt;
        const double var_n = (sum_n2 / nt - st.mean_noise * st.mean_noise) / nt;
        const double mn2 = st.mean_noise * st.mean_noise;
        st.snr_stderr = std::sqrt(var_s / mn2 +
                                  var_n * st.mean_signal * st.mean_signal / (mn2 * mn2));
    } else {
        st.snr = 0.0;
        st.snr_stderr = 0.0;
    }
    return st;
}

}  // namespace qmem
