#include "qmem/dephasing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qmem/constants.hpp"
#include "qmem/errors.hpp"

namespace qmem {

void DiffusionParams::validate() const {
    if (!(w > 0.0)) throw InvalidInput("diffusion: beam radius w must be > 0");
    if (!(d0 >= 0.0)) throw InvalidInput("diffusion: d0 must be >= 0");
    if (!(p0 > 0.0)) throw InvalidInput("diffusion: p0 must be > 0");
    if (!(pressure > 0.0)) throw InvalidInput("diffusion: pressure must be > 0");
}

void GradientParams::validate() const {
    if (!(cell_len > 0.0)) throw InvalidInput("gradient: cell_len must be > 0");
    if (b_prime < 0.0) throw InvalidInput("gradient: b_prime must be >= 0");
    if (e_b < 0.0) throw InvalidInput("gradient: e_b must be >= 0");
}

double diffusion_factor(const DiffusionParams& d, double t) {
    d.validate();
    if (t < 0.0) throw InvalidInput("diffusion_factor: negative time");
    const double w2 = d.w * d.w;
    const double wp2 = w2 + 8.0 * d.d_eff() * t;
    const double s = w2 + wp2;
    return 4.0 * w2 * wp2 / (s * s);
}

double gradient_factor(const GradientParams& g, double t) {
    g.validate();
    if (t < 0.0) throw InvalidInput("gradient_factor: negative time");
    const double x = 0.5 * g.rate() * t;
    if (x == 0.0) return 1.0;
    const double s = std::sin(x) / x;
    return s * s;
}

double combined_decay(const DiffusionParams& d, const GradientParams& g, double t) {
    return diffusion_factor(d, t) * gradient_factor(g, t);
}

namespace {

constexpr double inv_e = 0.36787944117144233;
// root of sinc^2(x) = 1/e on (0, pi), sinc x = sin x / x
constexpr double sinc2_inv_e_root = 1.6442727294778683;

// Pure-diffusion 1/e time: solve 4(1+x)/(2+x)^2 = 1/e for x = 8Dt/w^2.
double diffusion_t1e(const DiffusionParams& d) {
    const double em1 = std::exp(1.0) - 1.0;
    const double x = 2.0 * (em1 + std::sqrt(em1 * em1 + em1));
    return x * d.w * d.w / (8.0 * d.d_eff());
}

}  // namespace

double storage_time_1e(const DiffusionParams& d, const GradientParams& g) {
    d.validate();
    g.validate();
    const bool has_diffusion = d.d0 > 0.0;
    const bool has_gradient = g.rate() > 0.0;
    if (!has_diffusion && !has_gradient)
        throw NumericFailure("storage_time_1e: no decay mechanism active, 1/e never crossed");

    // The first crossing is bracketed by [0, t_hi] with t_hi inside the first
    // gradient lobe: combined <= each factor, so it crosses at or before the
    // smaller single-mechanism 1/e time, and the gradient factor reaches 0 at
    // its first zero.
    double t_hi = std::numeric_limits<double>::infinity();
    if (has_diffusion) t_hi = std::min(t_hi, diffusion_t1e(d));
    if (has_gradient) t_hi = std::min(t_hi, 2.0 * sinc2_inv_e_root / g.rate());
    // Guard against rounding at the bracket edge; the crossing sits at or
    // before the smaller single-mechanism 1/e time.
    int guard = 0;
    while (combined_decay(d, g, t_hi) > inv_e && guard++ < 8) t_hi *= 1.001;

    double lo = 0.0, hi = t_hi;
    for (int i = 0; i < 200 && (hi - lo) > 1e-9 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (combined_decay(d, g, mid) > inv_e)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

DecayFit fit_decay_params(const std::vector<DecayDataPoint>& data,
                          const DiffusionParams& d_template, const GradientParams& g_template) {
    if (data.size() < 2)
        throw InvalidInput("fit_decay_params: need at least 2 data points, got " +
                           std::to_string(data.size()));
    for (const auto& pt : data) {
        if (!(pt.w > 0.0) || !(pt.pressure > 0.0) || !(pt.t1e > 0.0))
            throw InvalidInput("fit_decay_params: data points must have w, P, T > 0");
    }
    if (!(g_template.cell_len > 0.0))
        throw InvalidInput("fit_decay_params: gradient template needs cell_len > 0");

    DecayFit fit;
    bool all_same = true;
    for (const auto& pt : data)
        all_same = all_same && pt.w == data[0].w && pt.pressure == data[0].pressure;
    fit.report.rank_deficient = all_same;

    // Model residuals as a function of u = (ln D0, ln G) with G = B' E_B L.
    const double g_floor = 1e-8;  // rad/s; "no gradient" lower bound
    auto model_t1e = [&](double d0, double gprod, const DecayDataPoint& pt) {
        DiffusionParams d = d_template;
        d.d0 = d0;
        d.w = pt.w;
        d.pressure = pt.pressure;
        GradientParams g = g_template;
        g.e_b = 1.0;
        g.cell_len = 1.0;
        g.b_prime = std::max(gprod, g_floor);
        return storage_time_1e(d, g);
    };
    auto objective = [&](const std::vector<double>& u) {
        const double d0 = std::exp(u[0]);
        const double gprod = std::exp(u[1]);
        double acc = 0.0;
        for (const auto& pt : data) {
            const double r = model_t1e(d0, gprod, pt) - pt.t1e;
            acc += r * r;
        }
        return acc;
    };

    // Closed-form initial guesses: pure diffusion explains the smallest-w
    // point, a pure gradient explains the largest-w (longest-T) point.
    const auto& small = *std::min_element(data.begin(), data.end(),
                                          [](const auto& a, const auto& b) { return a.w < b.w; });
    const auto& large = *std::max_element(data.begin(), data.end(),
                                          [](const auto& a, const auto& b) { return a.w < b.w; });
    const double x1e = 2.0 * ((std::exp(1.0) - 1.0) +
                              std::sqrt((std::exp(1.0) - 1.0) * (std::exp(1.0) - 1.0) +
                                        (std::exp(1.0) - 1.0)));
    const double d_guess = x1e * small.w * small.w / (8.0 * small.t1e);
    const double d0_guess = d_guess * small.pressure / d_template.p0;
    const double g_guess = 2.0 * sinc2_inv_e_root / large.t1e;

    NmOptions nm;
    nm.max_evals = 4000;
    nm.xtol = 1e-9;

    NmResult best;
    best.fmin = std::numeric_limits<double>::infinity();
    int total_evals = 0;
    // five log-spaced starts: scale both guesses together and a no-gradient start
    const double scales[5] = {0.1, 0.33, 1.0, 3.0, 10.0};
    for (double s : scales) {
        std::vector<double> u0 = {std::log(d0_guess * s), std::log(std::max(g_guess * s, g_floor))};
        NmResult r = nelder_mead(objective, u0, {0.7, 0.7}, nm);
        total_evals += r.evals;
        if (r.fmin < best.fmin) best = r;
    }
    {
        // gradient-free start, for data generated with B' = 0
        std::vector<double> u0 = {std::log(d0_guess), std::log(g_floor)};
        NmResult r = nelder_mead(objective, u0, {0.7, 0.7}, nm);
        total_evals += r.evals;
        if (r.fmin < best.fmin) best = r;
    }

    // If pinning the gradient at its lower bound costs nothing, the data do
    // not constrain it: report it at the bound and refit D0 alone.
    double t2 = 0.0;
    for (const auto& pt : data) t2 += pt.t1e * pt.t1e;
    const double u_d0 = best.x[0];
    auto objective_d0 = [&](const std::vector<double>& u) {
        return objective({u[0], std::log(g_floor)});
    };
    const double f_floor = objective({u_d0, std::log(g_floor)});
    if (f_floor <= best.fmin * (1.0 + 1e-9) + 1e-15 * t2) {
        NmResult r = nelder_mead(objective_d0, {u_d0}, {0.3}, nm);
        total_evals += r.evals;
        best.x = {r.x[0], std::log(g_floor)};
        best.fmin = r.fmin;
        best.converged = r.converged;
        fit.report.gradient_at_lower_bound = true;
    }

    fit.d0 = std::exp(best.x[0]);
    fit.gradient_product = fit.report.gradient_at_lower_bound ? 0.0 : std::exp(best.x[1]);
    const double eb = g_template.e_b > 0.0 ? g_template.e_b : 1.0;
    fit.b_prime = fit.gradient_product / (eb * g_template.cell_len);

    fit.report.converged = best.converged;
    fit.report.evals = total_evals;
    for (const auto& pt : data) {
        const double r = model_t1e(fit.d0, std::max(fit.gradient_product, g_floor), pt) - pt.t1e;
        fit.report.residuals.push_back(r);
        fit.report.rms += r * r;
    }
    fit.report.rms = std::sqrt(fit.report.rms / static_cast<double>(data.size()));
    if (!best.converged)
        throw FitFailure("fit_decay_params: no convergence after " + std::to_string(total_evals) +
                         " evals; best rms " + std::to_string(fit.report.rms) + " s with D0 = " +
                         std::to_string(fit.d0) + " m^2/s");
    return fit;
}

}  // namespace qmem
