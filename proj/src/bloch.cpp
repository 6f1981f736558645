#include "qmem/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "qmem/errors.hpp"

namespace qmem {

using cd = std::complex<double>;

namespace detail {

// Model constants and index layout for the state vector y:
// P_k lives at [k*nz + j], S at [nlev*nz + j], j = 0..nz-1.
struct ModelCtx {
    int nz = 0;
    int nlev = 0;
    double dz = 0.0;
    std::vector<cd> gamma_p;      // per-level damping + detuning, multiplies -P_k
    cd gamma_s{0.0, 0.0};         // spin-wave damping + two-photon detuning
    std::vector<double> coupling; // c_k
    std::vector<double> sign;     // f_k
    double gamma_bar = 0.0;
};

// Cumulative trapezoid of dE/dz = i sum_k c_k P_k from the input boundary.
// Sequential scan; identical in both backends.
static void field_profile(const ModelCtx& ctx, const cd* y, cd e_in, cd* E) {
    const int nz = ctx.nz;
    E[0] = e_in;
    for (int j = 0; j + 1 < nz; ++j) {
        cd rhs = 0.0;
        for (int k = 0; k < ctx.nlev; ++k) {
            const cd* P = y + static_cast<std::size_t>(k) * nz;
            rhs += ctx.coupling[k] * (P[j] + P[j + 1]);
        }
        E[j + 1] = E[j] + cd(0.0, 0.5 * ctx.dz) * rhs;
    }
}

// Serial reference: per-node derivative of (P_k, S) given the field profile.
static void derivative_serial(const ModelCtx& ctx, const cd* y, const cd* E, double omega,
                              cd* dy) {
    const int nz = ctx.nz, nlev = ctx.nlev;
    const cd* S = y + static_cast<std::size_t>(nlev) * nz;
    cd* dS = dy + static_cast<std::size_t>(nlev) * nz;
    for (int j = 0; j < nz; ++j) {
        cd sum_fp = 0.0;
        for (int k = 0; k < nlev; ++k) {
            const cd* P = y + static_cast<std::size_t>(k) * nz;
            cd* dP = dy + static_cast<std::size_t>(k) * nz;
            dP[j] = -ctx.gamma_p[k] * P[j] + cd(0.0, ctx.coupling[k] * ctx.gamma_bar) * E[j] +
                    cd(0.0, ctx.sign[k] * omega) * S[j];
            sum_fp += ctx.sign[k] * P[j];
        }
        dS[j] = -ctx.gamma_s * S[j] + cd(0.0, omega) * sum_fp;
    }
}

// Work-shared kernels: same per-node arithmetic as the serial reference.
// Orphaned "omp for" directives; the time loop opens one parallel region for
// the whole run so no per-kernel region overhead accrues.
static void derivative_wshare(const ModelCtx& ctx, const cd* y, const cd* E, double omega,
                              cd* dy) {
    const int nz = ctx.nz, nlev = ctx.nlev;
    const cd* S = y + static_cast<std::size_t>(nlev) * nz;
    cd* dS = dy + static_cast<std::size_t>(nlev) * nz;
#pragma omp for schedule(static)
    for (int j = 0; j < nz; ++j) {
        cd sum_fp = 0.0;
        for (int k = 0; k < nlev; ++k) {
            const cd* P = y + static_cast<std::size_t>(k) * nz;
            cd* dP = dy + static_cast<std::size_t>(k) * nz;
            dP[j] = -ctx.gamma_p[k] * P[j] + cd(0.0, ctx.coupling[k] * ctx.gamma_bar) * E[j] +
                    cd(0.0, ctx.sign[k] * omega) * S[j];
            sum_fp += ctx.sign[k] * P[j];
        }
        dS[j] = -ctx.gamma_s * S[j] + cd(0.0, omega) * sum_fp;
    }
}

static void axpy_serial(std::size_t m, const cd* y, double a, const cd* k, cd* out) {
    for (std::size_t i = 0; i < m; ++i) out[i] = y[i] + a * k[i];
}

static void axpy_wshare(std::size_t m, const cd* y, double a, const cd* k, cd* out) {
    const auto n = static_cast<long long>(m);
#pragma omp for schedule(static)
    for (long long i = 0; i < n; ++i) out[i] = y[i] + a * k[i];
}

static void rk4_combine_serial(std::size_t m, cd* y, double dt, const cd* k1, const cd* k2,
                               const cd* k3, const cd* k4) {
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < m; ++i) y[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

static void rk4_combine_wshare(std::size_t m, cd* y, double dt, const cd* k1, const cd* k2,
                               const cd* k3, const cd* k4) {
    const double w = dt / 6.0;
    const auto n = static_cast<long long>(m);
#pragma omp for schedule(static)
    for (long long i = 0; i < n; ++i) y[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace detail

namespace {

struct LevelWeights {
    std::vector<double> w;  // |f_k|^2 / sum |f_j|^2
    double sum_f2 = 0.0;
};

LevelWeights level_weights(const MediumSpec& m) {
    LevelWeights lw;
    for (double f : m.coupling_signs) lw.sum_f2 += f * f;
    for (double f : m.coupling_signs) lw.w.push_back(f * f / lw.sum_f2);
    return lw;
}

void resolution_check(const MediumSpec& medium, const ControlTiming& control,
                      const ProbePulse& input, const SimGrid& grid) {
    struct Scale {
        double tau;
        std::string name;
    };
    std::vector<Scale> scales;
    for (std::size_t k = 0; k < medium.num_levels(); ++k) {
        const double rate =
            medium.gamma_eff(k) + std::abs(control.single_photon_detuning - medium.level_offsets[k]);
        if (rate > 0.0)
            scales.push_back({1.0 / rate, "excited-level " + std::to_string(k) + " coherence"});
    }
    if (control.rabi_peak() > 0.0)
        scales.push_back({1.0 / control.rabi_peak(), "control Rabi period"});
    double pulse_scale;
    try {
        pulse_scale = pulse_fwhm(input);
    } catch (const InvalidInput&) {
        pulse_scale = input.dt * static_cast<double>(input.samples.size());
    }
    scales.push_back({pulse_scale, "input pulse width"});

    for (const auto& s : scales) {
        if (grid.dt > s.tau / 8.0) {
            char msg[192];
            std::snprintf(msg, sizeof(msg),
                          "grid under-resolved: %s has timescale %.3e s, need dt <= %.3e s but "
                          "dt = %.3e s",
                          s.name.c_str(), s.tau, s.tau / 8.0, grid.dt);
            throw ResolutionError(msg);
        }
    }
}

}  // namespace

FieldRecord simulate(const MediumSpec& medium, const ControlTiming& control,
                     const ProbePulse& input, const SimGrid& grid,
                     const std::vector<double>& snapshot_times, const SolveOptions& opts) {
    medium.validate();
    control.validate();
    grid.validate();
    if (input.samples.empty()) throw InvalidInput("simulate: empty input pulse");
    const double energy_in = pulse_energy(input);
    if (!(energy_in > 0.0)) throw InvalidInput("simulate: zero-energy input pulse");
    resolution_check(medium, control, input, grid);

    const int nz = grid.nz;
    const int nt = grid.nt;
    const int nlev = static_cast<int>(medium.num_levels());
    const double dt = grid.dt;
    const double t_start = input.t0;

    detail::ModelCtx ctx;
    ctx.nz = nz;
    ctx.nlev = nlev;
    ctx.dz = 1.0 / static_cast<double>(nz - 1);
    // gbar = broadened half-linewidth of the first level: od then means the
    // resonant depth measured at the operating pressure
    ctx.gamma_bar = medium.gamma_eff(0);
    const LevelWeights lw = level_weights(medium);
    for (int k = 0; k < nlev; ++k) {
        const double damp = opts.decay_off ? 0.0 : medium.gamma_eff(k);
        ctx.gamma_p.emplace_back(damp, control.single_photon_detuning - medium.level_offsets[k]);
        ctx.coupling.push_back(std::sqrt(0.5 * medium.od * lw.w[k]));
        ctx.sign.push_back(medium.coupling_signs[k]);
    }
    ctx.gamma_s = cd(opts.decay_off ? 0.0 : medium.gamma_s_eff(), control.two_photon_detuning);

    const std::size_t m = static_cast<std::size_t>(nlev + 1) * nz;
    std::vector<cd> y(m, cd{}), k1(m), k2(m), k3(m), k4(m), ytmp(m), E(nz);

    FieldRecord rec;
    rec.grid = grid;
    rec.t_start = t_start;
    rec.energy_in = energy_in;
    rec.gamma_bar = ctx.gamma_bar;
    rec.e_out.resize(nt);
    rec.retrieval_start =
        std::isnan(opts.retrieval_start) ? control.on_time : opts.retrieval_start;

    auto nearest_step = [&](double t) {
        long n = std::lround((t - t_start) / dt);
        return static_cast<int>(std::clamp<long>(n, 0, nt - 1));
    };
    std::vector<int> snap_steps;
    for (double ts : snapshot_times) snap_steps.push_back(nearest_step(ts));
    const int eta_step = nearest_step(control.off_time + 2.0 * control.ramp_time);

    const bool par = (opts.backend == Backend::openmp);

    auto atomic_norms = [&](double* s_norm, double* total_norm) {
        // trapezoid over z of |S|^2 and of sum_k |P_k|^2 + |S|^2, scaled by
        // 1/gamma_bar to be commensurate with the field energies
        double s_acc = 0.0, p_acc = 0.0;
        for (int comp = 0; comp <= nlev; ++comp) {
            const cd* v = y.data() + static_cast<std::size_t>(comp) * nz;
            double acc = 0.5 * (std::norm(v[0]) + std::norm(v[nz - 1]));
            for (int j = 1; j + 1 < nz; ++j) acc += std::norm(v[j]);
            acc *= ctx.dz;
            if (comp == nlev)
                s_acc = acc;
            else
                p_acc += acc;
        }
        *s_norm = s_acc / ctx.gamma_bar;
        *total_norm = (s_acc + p_acc) / ctx.gamma_bar;
    };

    double ein_grid = 0.0;
    int diverged_step = -1;

    // E must hold the field profile of the current state when this runs.
    auto record_step = [&](int n, double t) {
        rec.e_out[n] = E[nz - 1];
        ein_grid += std::norm(E[0]) * dt;
        if (n == eta_step) {
            double s_norm, total;
            atomic_norms(&s_norm, &total);
            rec.eta_storage = s_norm / energy_in;
        }
        for (std::size_t si = 0; si < snap_steps.size(); ++si) {
            if (snap_steps[si] != n) continue;
            rec.snapshot_times.push_back(t);
            rec.spinwave_snapshots.emplace_back(y.begin() + static_cast<long>(nlev) * nz,
                                                y.begin() + static_cast<long>(nlev + 1) * nz);
            std::vector<std::vector<cd>> pol;
            for (int k = 0; k < nlev; ++k)
                pol.emplace_back(y.begin() + static_cast<long>(k) * nz,
                                 y.begin() + static_cast<long>(k + 1) * nz);
            rec.polarization_snapshots.push_back(std::move(pol));
        }
        if ((n & 63) == 0 || n == nt - 1) {
            if (!std::isfinite(rec.e_out[n].real()) || !std::isfinite(rec.e_out[n].imag()))
                diverged_step = n;
        }
    };

    if (!par) {
        // serial reference stepper
        for (int n = 0; n < nt; ++n) {
            const double t = t_start + dt * static_cast<double>(n);
            detail::field_profile(ctx, y.data(), input.at(t), E.data());
            record_step(n, t);
            if (diverged_step >= 0 || n + 1 == nt) break;

            detail::derivative_serial(ctx, y.data(), E.data(), control.rabi(t), k1.data());
            detail::axpy_serial(m, y.data(), 0.5 * dt, k1.data(), ytmp.data());
            detail::field_profile(ctx, ytmp.data(), input.at(t + 0.5 * dt), E.data());
            detail::derivative_serial(ctx, ytmp.data(), E.data(), control.rabi(t + 0.5 * dt),
                                      k2.data());
            detail::axpy_serial(m, y.data(), 0.5 * dt, k2.data(), ytmp.data());
            detail::field_profile(ctx, ytmp.data(), input.at(t + 0.5 * dt), E.data());
            detail::derivative_serial(ctx, ytmp.data(), E.data(), control.rabi(t + 0.5 * dt),
                                      k3.data());
            detail::axpy_serial(m, y.data(), dt, k3.data(), ytmp.data());
            detail::field_profile(ctx, ytmp.data(), input.at(t + dt), E.data());
            detail::derivative_serial(ctx, ytmp.data(), E.data(), control.rabi(t + dt), k4.data());
            detail::rk4_combine_serial(m, y.data(), dt, k1.data(), k2.data(), k3.data(),
                                       k4.data());
        }
    } else {
        // one parallel region for the whole run; the serial z-scans and the
        // bookkeeping run in single blocks, whose implicit barriers order them
        // against the work-shared kernels
#pragma omp parallel default(shared)
        {
            for (int n = 0; n < nt; ++n) {
                const double t = t_start + dt * static_cast<double>(n);
#pragma omp single
                {
                    detail::field_profile(ctx, y.data(), input.at(t), E.data());
                    record_step(n, t);
                }
                if (diverged_step >= 0 || n + 1 == nt) break;

                detail::derivative_wshare(ctx, y.data(), E.data(), control.rabi(t), k1.data());
                detail::axpy_wshare(m, y.data(), 0.5 * dt, k1.data(), ytmp.data());
#pragma omp single
                detail::field_profile(ctx, ytmp.data(), input.at(t + 0.5 * dt), E.data());
                detail::derivative_wshare(ctx, ytmp.data(), E.data(),
                                          control.rabi(t + 0.5 * dt), k2.data());
                detail::axpy_wshare(m, y.data(), 0.5 * dt, k2.data(), ytmp.data());
#pragma omp single
                detail::field_profile(ctx, ytmp.data(), input.at(t + 0.5 * dt), E.data());
                detail::derivative_wshare(ctx, ytmp.data(), E.data(),
                                          control.rabi(t + 0.5 * dt), k3.data());
                detail::axpy_wshare(m, y.data(), dt, k3.data(), ytmp.data());
#pragma omp single
                detail::field_profile(ctx, ytmp.data(), input.at(t + dt), E.data());
                detail::derivative_wshare(ctx, ytmp.data(), E.data(), control.rabi(t + dt),
                                          k4.data());
                detail::rk4_combine_wshare(m, y.data(), dt, k1.data(), k2.data(), k3.data(),
                                           k4.data());
            }
        }
    }

    if (diverged_step >= 0) {
        char msg[96];
        std::snprintf(msg, sizeof(msg), "simulate: NaN in field at step %d (t = %.4e s)",
                      diverged_step, t_start + dt * diverged_step);
        throw DivergenceError(msg);
    }

    rec.energy_in_grid = ein_grid;
    double eout = 0.0;
    for (const cd& e : rec.e_out) eout += std::norm(e) * dt;
    rec.energy_out_grid = eout;
    double s_norm, total;
    atomic_norms(&s_norm, &total);
    rec.atomic_norm_end = total;

    // eta_total over the (clamped) retrieval window
    double acc = 0.0;
    for (int n = 0; n < nt; ++n) {
        const double t = t_start + dt * static_cast<double>(n);
        if (t >= rec.retrieval_start) acc += std::norm(rec.e_out[n]) * dt;
    }
    rec.eta_total = acc / energy_in;

    return rec;
}

std::complex<double> linear_susceptibility(const MediumSpec& medium, double omega_c,
                                           double delta, double Delta) {
    medium.validate();
    if (omega_c < 0.0) throw InvalidInput("linear_susceptibility: omega_c must be >= 0");
    const LevelWeights lw = level_weights(medium);
    const double gbar = medium.gamma_eff(0);

    // Per-unit-od steady state of the model equations (see header):
    //   chi = od * [C1 - Omega^2 A1^2 / (2 (Gamma_s + Omega^2 B))]
    // with amplitude evolution dE/dz = -gbar chi E.
    cd C1 = 0.0, A1 = 0.0, B = 0.0;
    for (std::size_t k = 0; k < medium.num_levels(); ++k) {
        const cd gp(medium.gamma_eff(k), Delta - medium.level_offsets[k]);
        const double f = medium.coupling_signs[k];
        C1 += 0.5 * lw.w[k] / gp;
        A1 += f * std::sqrt(lw.w[k]) / gp;
        B += f * f / gp;
    }
    const cd gs(medium.gamma_s_eff(), delta);
    const double o2 = omega_c * omega_c;
    // control off: pure two-level response (avoids 0/0 when gamma_s = delta = 0)
    const cd coherent = o2 > 0.0 ? o2 * A1 * A1 / (gs + o2 * B) : cd{0.0, 0.0};
    const cd chi_per_od = gbar * (2.0 * C1 - coherent);

    // Convention swap: absorption into the imaginary part, normalized so that
    // intensity transmission = exp(-od * Im chi).
    return cd(0.0, 1.0) * std::conj(chi_per_od);
}

double cw_transmission(const MediumSpec& medium, double omega_c, double delta, double Delta) {
    return std::exp(-medium.od * linear_susceptibility(medium, omega_c, delta, Delta).imag());
}

EitScan eit_scan(const MediumSpec& medium, const ControlTiming& calib,
                 const std::vector<double>& powers_w, double delta_min, double delta_max,
                 int n_delta) {
    if (powers_w.empty()) throw InvalidInput("eit_scan: empty power list");
    if (n_delta < 5) throw InvalidInput("eit_scan: need at least 5 delta points");
    if (!(delta_max > delta_min)) throw InvalidInput("eit_scan: empty delta range");

    EitScan scan;
    scan.powers = powers_w;
    scan.deltas.resize(n_delta);
    const double ddelta = (delta_max - delta_min) / static_cast<double>(n_delta - 1);
    for (int i = 0; i < n_delta; ++i)
        scan.deltas[i] = delta_min + ddelta * static_cast<double>(i);

    for (double p : powers_w) {
        if (p < 0.0) throw InvalidInput("eit_scan: negative power");
        const double omega = calib.rabi_per_sqrt_power * std::sqrt(p);
        std::vector<double> curve(n_delta);
        for (int i = 0; i < n_delta; ++i)
            curve[i] =
                cw_transmission(medium, omega, scan.deltas[i], calib.single_photon_detuning);

        std::size_t imax = 0;
        double tmax = curve[0], tmin = curve[0];
        for (int i = 0; i < n_delta; ++i) {
            if (curve[i] > tmax) {
                tmax = curve[i];
                imax = static_cast<std::size_t>(i);
            }
            tmin = std::min(tmin, curve[i]);
        }

        if (imax == 0 || imax + 1 == static_cast<std::size_t>(n_delta)) {
            if (omega == 0.0) {
                // no transparency window exists
                scan.fwhm.emplace_back(std::nullopt);
                scan.transmission.push_back(std::move(curve));
                continue;
            }
            throw InvalidInput("eit_scan: transparency peak not bracketed by delta range");
        }

        // half level between the peak and the flanking absorption floor
        const double half = 0.5 * (tmax + tmin);
        double xl = 0.0, xr = 0.0;
        bool okl = false, okr = false;
        for (std::size_t i = imax; i-- > 0;) {
            if (curve[i] < half) {
                const double f = (half - curve[i]) / (curve[i + 1] - curve[i]);
                xl = scan.deltas[i] + f * ddelta;
                okl = true;
                break;
            }
        }
        for (std::size_t i = imax + 1; i < static_cast<std::size_t>(n_delta); ++i) {
            if (curve[i] < half) {
                const double f = (curve[i - 1] - half) / (curve[i - 1] - curve[i]);
                xr = scan.deltas[i - 1] + f * ddelta;
                okr = true;
                break;
            }
        }
        if (!okl || !okr)
            throw InvalidInput("eit_scan: half-maximum crossings not bracketed by delta range");
        scan.fwhm.emplace_back(xr - xl);
        scan.transmission.push_back(std::move(curve));
    }
    return scan;
}

double storage_efficiency(const FieldRecord& record, double window_start, double window_len) {
    if (window_len < 0.0) throw InvalidInput("storage_efficiency: negative window length");
    const double dt = record.grid.dt;
    const double t_end = record.end_time();
    if (window_start < record.t_start - 0.5 * dt || window_start + window_len > t_end + dt)
        throw InvalidInput("storage_efficiency: window outside record");
    double acc = 0.0;
    for (std::size_t n = 0; n < record.e_out.size(); ++n) {
        const double t = record.time(n);
        if (t >= window_start && t < window_start + window_len)
            acc += std::norm(record.e_out[n]) * dt;
    }
    return acc / record.energy_in;
}

}  // namespace qmem
