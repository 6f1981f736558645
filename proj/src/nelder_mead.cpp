#include "qmem/nelder_mead.hpp"

#include <algorithm>
#include <cmath>

#include "qmem/errors.hpp"

namespace qmem {

NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                     const std::vector<double>& x0, const std::vector<double>& step,
                     const NmOptions& opts) {
    const std::size_t n = x0.size();
    if (n == 0 || step.size() != n) throw InvalidInput("nelder_mead: bad dimensions");

    // standard coefficients
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<std::vector<double>> xs(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) xs[i + 1][i] += step[i];

    NmResult res;
    std::vector<double> fs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        fs[i] = f(xs[i]);
        ++res.evals;
    }

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&] {
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return fs[a] < fs[b];
        });
    };

    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    while (res.evals < opts.max_evals) {
        sort_simplex();
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];

        double size = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            size = std::max(size, std::abs(xs[worst][i] - xs[best][i]));
        const double spread = std::abs(fs[worst] - fs[best]);
        if (size < opts.xtol ||
            spread < opts.ftol_rel * std::abs(fs[best]) + opts.ftol_abs) {
            res.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t d = 0; d < n; ++d) centroid[d] += xs[i][d];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        for (std::size_t d = 0; d < n; ++d) xr[d] = centroid[d] + alpha * (centroid[d] - xs[worst][d]);
        const double fr = f(xr);
        ++res.evals;

        if (fr < fs[best]) {
            for (std::size_t d = 0; d < n; ++d) xe[d] = centroid[d] + gamma * (xr[d] - centroid[d]);
            const double fe = f(xe);
            ++res.evals;
            if (fe < fr) {
                xs[worst] = xe;
                fs[worst] = fe;
            } else {
                xs[worst] = xr;
                fs[worst] = fr;
            }
        } else if (fr < fs[second]) {
            xs[worst] = xr;
            fs[worst] = fr;
        } else {
            const bool outside = fr < fs[worst];
            const std::vector<double>& pivot = outside ? xr : xs[worst];
            for (std::size_t d = 0; d < n; ++d) xc[d] = centroid[d] + rho * (pivot[d] - centroid[d]);
            const double fc = f(xc);
            ++res.evals;
            if (fc < std::min(fr, fs[worst])) {
                xs[worst] = xc;
                fs[worst] = fc;
            } else {
                // shrink toward the best vertex
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < n; ++d)
                        xs[i][d] = xs[best][d] + sigma * (xs[i][d] - xs[best][d]);
                    fs[i] = f(xs[i]);
                    ++res.evals;
                }
            }
        }
    }

    sort_simplex();
    res.x = xs[order[0]];
    res.fmin = fs[order[0]];
    return res;
}

}  // namespace qmem
