#include "qmem/shaping.hpp"

#include <cmath>
#include <string>

#include "qmem/errors.hpp"

namespace qmem {

ProbePulse time_reverse(const ProbePulse& p) {
    if (p.samples.empty()) throw InvalidInput("time_reverse: empty pulse");
    ProbePulse out = p;
    const std::size_t n = p.samples.size();
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = std::conj(p.samples[n - 1 - i]);
    return out;
}

namespace {

// Linear interpolation on the record's output field.
std::complex<double> e_out_at(const FieldRecord& rec, double t) {
    const double x = (t - rec.t_start) / rec.grid.dt;
    if (x < 0.0 || x > static_cast<double>(rec.e_out.size() - 1)) return {0.0, 0.0};
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= rec.e_out.size()) return rec.e_out.back();
    const double f = x - static_cast<double>(i);
    return rec.e_out[i] * (1.0 - f) + rec.e_out[i + 1] * f;
}

}  // namespace

ShapingReport optimize_pulse(const MediumSpec& medium, const ControlTiming& control,
                             const ProbePulse& seed_pulse, const SimGrid& grid, int max_iters,
                             double tol, const SolveOptions& opts) {
    if (max_iters < 1) throw InvalidInput("optimize_pulse: max_iters must be >= 1");
    if (!(tol > 0.0)) throw InvalidInput("optimize_pulse: tol must be > 0");

    const double window_len =
        seed_pulse.dt * static_cast<double>(seed_pulse.samples.size()) + 5.0 / medium.gamma_e[0];
    const double t_end = seed_pulse.t0 + grid.dt * static_cast<double>(grid.nt - 1);
    if (control.on_time + window_len > t_end)
        throw InvalidInput("optimize_pulse: grid ends before the retrieval window; need t_end >= " +
                           std::to_string(control.on_time + window_len) + " s");

    SolveOptions sopts = opts;
    sopts.retrieval_start = control.on_time;

    ShapingReport report;
    ProbePulse current = normalize(seed_pulse);

    auto run = [&](const ProbePulse& p) {
        FieldRecord rec = simulate(medium, control, p, grid, {}, sopts);
        const double eta = storage_efficiency(rec, control.on_time, window_len);
        return std::make_pair(std::move(rec), eta);
    };

    auto [rec, eta] = run(current);
    if (!(eta > 1e-12))
        throw InvalidInput("optimize_pulse: degenerate seed, first-pass efficiency is zero");
    report.iterations.push_back({current, eta});

    // Mirror time chosen so the reversed switch-on ramp coincides with the
    // switch-off ramp: on_time + u maps to off_time + ramp_time - u.
    const double mirror_end = control.off_time + control.ramp_time;
    for (int it = 0; it < max_iters; ++it) {
        ProbePulse next = current;
        for (std::size_t i = 0; i < next.samples.size(); ++i) {
            const double t = next.t0 + next.dt * static_cast<double>(i);
            const double u = mirror_end - t;
            next.samples[i] = (u >= 0.0 && u <= window_len)
                                  ? std::conj(e_out_at(rec, control.on_time + u))
                                  : std::complex<double>{0.0, 0.0};
        }
        next = normalize(next);

        auto [rec2, eta2] = run(next);
        rec = std::move(rec2);
        report.iterations.push_back({next, eta2});
        current = next;

        if (std::abs(eta2 - report.iterations[report.iterations.size() - 2].eta) < tol) {
            report.converged = true;
            break;
        }
    }

    report.final_pulse = report.iterations.back().pulse;
    return report;
}

}  // namespace qmem
