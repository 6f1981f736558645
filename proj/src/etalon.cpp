#include "qmem/etalon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qmem/constants.hpp"
#include "qmem/errors.hpp"
#include "qmem/nelder_mead.hpp"

namespace qmem {

void EtalonSpec::validate() const {
    if (!(fsr > 0.0)) throw InvalidInput("etalon: fsr must be > 0");
    if (!(finesse > 1.0)) throw InvalidInput("etalon: finesse must be > 1");
    if (!(peak_transmission > 0.0 && peak_transmission <= 1.0))
        throw InvalidInput("etalon: peak_transmission must be in (0, 1]");
}

void ThermalParams::validate() const {
    if (!(xi > 0.0)) throw InvalidInput("thermal: xi must be > 0");
    if (!(tau > 0.0)) throw InvalidInput("thermal: tau must be > 0");
}

double airy_transmission(const EtalonSpec& e, double detuning_hz) {
    e.validate();
    const double coef = 2.0 * e.finesse / pi;
    const double s = std::sin(pi * (detuning_hz - e.detuning_offset) / e.fsr);
    return e.peak_transmission / (1.0 + coef * coef * s * s);
}

double cascade_suppression_db(const std::vector<EtalonSpec>& stack, double detuning_hz) {
    if (stack.empty()) throw InvalidInput("cascade_suppression_db: empty stack");
    double db = 0.0;
    for (EtalonSpec e : stack) {
        e.peak_transmission = 1.0;
        db += -10.0 * std::log10(airy_transmission(e, detuning_hz));
    }
    return db;
}

double band_average_suppression_db(const std::vector<EtalonSpec>& stack, double center_hz,
                                   double width_hz, int n_points) {
    if (stack.empty()) throw InvalidInput("band_average_suppression_db: empty stack");
    if (!(width_hz > 0.0) || n_points < 3)
        throw InvalidInput("band_average_suppression_db: bad band parameters");
    // midpoint rule over the flat band
    double acc = 0.0;
    for (int i = 0; i < n_points; ++i) {
        const double x = center_hz + width_hz * ((i + 0.5) / static_cast<double>(n_points) - 0.5);
        double t = 1.0;
        for (EtalonSpec e : stack) {
            e.peak_transmission = 1.0;
            t *= airy_transmission(e, x);
        }
        acc += t;
    }
    return -10.0 * std::log10(acc / static_cast<double>(n_points));
}

double thermal_step(const ThermalParams& tp, double dT_room, double t) {
    tp.validate();
    if (t < 0.0) throw InvalidInput("thermal_step: negative time");
    return (dT_room / tp.xi) * (1.0 - std::exp(-t / tp.tau));
}

ThermalFit fit_thermal(const std::vector<std::pair<double, double>>& step_trace,
                       double dT_room) {
    if (step_trace.size() < 3)
        throw InvalidInput("fit_thermal: need at least 3 points, got " +
                           std::to_string(step_trace.size()));
    if (dT_room == 0.0) throw InvalidInput("fit_thermal: dT_room must be nonzero");

    ThermalFit fit;
    const double t_max = step_trace.back().first;

    // Degenerate trace: cavity never moved -> xi unbounded.
    double peak = 0.0;
    for (const auto& [t, dc] : step_trace) peak = std::max(peak, std::abs(dc));
    if (peak < 1e-12 * std::abs(dT_room)) {
        fit.report.xi_unbounded = true;
        fit.xi = std::numeric_limits<double>::infinity();
        fit.tau = 0.0;
        fit.report.converged = true;
        return fit;
    }

    // Initial guess: steady state from the tail, tau from the 1 - 1/e crossing.
    double tail = 0.0;
    int ntail = 0;
    for (const auto& [t, dc] : step_trace) {
        if (t >= 0.75 * t_max) {
            tail += dc;
            ++ntail;
        }
    }
    tail /= std::max(ntail, 1);
    const double xi_guess = std::clamp(dT_room / (tail != 0.0 ? tail : peak), 1e-3, 1e9);
    double tau_guess = t_max / 3.0;
    for (const auto& [t, dc] : step_trace) {
        if (std::abs(dc) >= (1.0 - std::exp(-1.0)) * std::abs(tail) && t > 0.0) {
            tau_guess = t;
            break;
        }
    }
    if (!(tau_guess > 0.0)) tau_guess = t_max / 3.0;

    auto objective = [&](const std::vector<double>& u) {
        const ThermalParams p{std::exp(u[0]), std::exp(u[1]), 0.0};
        double acc = 0.0;
        for (const auto& [t, dc] : step_trace) {
            const double r = (dT_room / p.xi) * (1.0 - std::exp(-std::max(t, 0.0) / p.tau)) - dc;
            acc += r * r;
        }
        return acc;
    };

    NmOptions nm;
    nm.max_evals = 4000;
    NmResult best = nelder_mead(objective, {std::log(xi_guess), std::log(tau_guess)}, {0.5, 0.5},
                                nm);
    fit.xi = std::exp(best.x[0]);
    fit.tau = std::exp(best.x[1]);
    fit.report.converged = best.converged;
    fit.report.evals = best.evals;
    fit.report.rms = std::sqrt(best.fmin / static_cast<double>(step_trace.size()));
    if (!best.converged)
        throw FitFailure("fit_thermal: no convergence after " + std::to_string(best.evals) +
                         " evals; best rms " + std::to_string(fit.report.rms) + " K (xi = " +
                         std::to_string(fit.xi) + ", tau = " + std::to_string(fit.tau) + " s)");
    return fit;
}

std::vector<std::pair<double, double>> transmission_trace(
    const EtalonSpec& e, const ThermalParams& tp,
    const std::vector<std::pair<double, double>>& room_trace, double probe_detuning_hz) {
    e.validate();
    tp.validate();
    if (room_trace.size() < 2) throw InvalidInput("transmission_trace: need at least 2 samples");

    const double dt = room_trace[1].first - room_trace[0].first;
    if (!(dt > 0.0)) throw InvalidInput("transmission_trace: non-increasing time column");
    for (std::size_t i = 1; i < room_trace.size(); ++i) {
        const double expect = room_trace[0].first + dt * static_cast<double>(i);
        if (std::abs(room_trace[i].first - expect) > 1e-6 * dt)
            throw InvalidInput(
                "transmission_trace: non-uniform sampling near row " + std::to_string(i + 1) +
                "; resample the room trace first");
    }

    // Exact zero-order-hold discretization of tau c' + c = r / xi.
    const double a = std::exp(-dt / tp.tau);
    const double t_ref = room_trace[0].second;
    double c = 0.0;  // cavity equilibrated to the initial room temperature

    std::vector<std::pair<double, double>> out;
    out.reserve(room_trace.size());
    for (std::size_t i = 0; i < room_trace.size(); ++i) {
        const double detuning = probe_detuning_hz - e.thermal_tuning * c;
        out.emplace_back(room_trace[i].first, airy_transmission(e, detuning));
        const double r = room_trace[i].second - t_ref;
        c = c * a + (r / tp.xi) * (1.0 - a);
    }
    return out;
}

}  // namespace qmem
