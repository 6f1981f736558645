// Iterative time-reversal pulse-shape optimization: store, measure the
// retrieved envelope, send its time-reversed (conjugated) copy back in,
// repeat. For time-symmetric control switching the storage efficiency is
// non-decreasing from one pass to the next and converges to the optimal
// storable mode of the medium.

#pragma once

#include "qmem/bloch.hpp"
#include "qmem/medium.hpp"
#include "qmem/pulse.hpp"

namespace qmem {

struct ShapingIterate {
    ProbePulse pulse;  // unit energy
    double eta = 0.0;  // storage-and-retrieval efficiency of this pulse
};

struct ShapingReport {
    // iterations[0] is the (normalized) seed; each later entry is one
    // time-reversal pass. "Converged in k iterations" = k passes beyond the
    // seed evaluation.
    std::vector<ShapingIterate> iterations;
    bool converged = false;
    ProbePulse final_pulse;

    double final_eta() const { return iterations.back().eta; }
    std::size_t passes() const { return iterations.size() - 1; }
};

// Reverse and conjugate the samples on the same grid; energy is preserved
// exactly.
ProbePulse time_reverse(const ProbePulse& p);

// Iterate simulate -> extract retrieved envelope -> time-reverse -> repeat.
// The retrieved envelope is read in [on_time, on_time + input duration +
// 5/gamma_1] and mirrored about the switch pair so that u after switch-on
// maps to u before switch-off; truncation outside the seed's grid is
// renormalized away. Stops when |eta_i - eta_{i-1}| < tol or after max_iters
// passes. Throws InvalidInput when the seed stores nothing.
ShapingReport optimize_pulse(const MediumSpec& medium, const ControlTiming& control,
                             const ProbePulse& seed_pulse, const SimGrid& grid, int max_iters,
                             double tol, const SolveOptions& opts = {});

}  // namespace qmem
