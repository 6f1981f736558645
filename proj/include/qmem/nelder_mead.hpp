// Small derivative-free simplex minimizer used by the calibration fits.

#pragma once

#include <functional>
#include <vector>

namespace qmem {

struct NmOptions {
    int max_evals = 2000;
    double xtol = 1e-9;       // simplex size, absolute
    double ftol_rel = 1e-11;  // function spread relative to |f_best|
    double ftol_abs = 1e-300;
};

struct NmResult {
    std::vector<double> x;
    double fmin = 0.0;
    int evals = 0;
    bool converged = false;
};

NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                     const std::vector<double>& x0, const std::vector<double>& step,
                     const NmOptions& opts = {});

}  // namespace qmem
