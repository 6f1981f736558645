#include "qmem/medium.hpp"

#include <cmath>
#include <string>

#include "qmem/errors.hpp"

namespace qmem {

void MediumSpec::validate() const {
    if (!(od >= 0.0)) throw InvalidInput("medium: od must be >= 0");
    if (gamma_e.empty() || gamma_e.size() > 2)
        throw InvalidInput("medium: need 1 or 2 excited levels, got " +
                           std::to_string(gamma_e.size()));
    if (level_offsets.size() != gamma_e.size() || coupling_signs.size() != gamma_e.size())
        throw InvalidInput("medium: gamma_e, level_offsets, coupling_signs must have equal length");
    for (double g : gamma_e)
        if (!(g > 0.0)) throw InvalidInput("medium: all gamma_e must be > 0");
    if (level_offsets[0] != 0.0) throw InvalidInput("medium: first level offset must be 0");
    if (coupling_signs[0] != 1.0) throw InvalidInput("medium: first coupling sign must be +1");
    for (double f : coupling_signs)
        if (f == 0.0) throw InvalidInput("medium: coupling signs must be nonzero");
    if (!(gamma_s0 >= 0.0)) throw InvalidInput("medium: gamma_s0 must be >= 0");
    if (!(buffer_pressure >= 0.0)) throw InvalidInput("medium: buffer_pressure must be >= 0");
    if (!(pressure_broadening_slope >= 0.0))
        throw InvalidInput("medium: pressure_broadening_slope must be >= 0");
}

double ControlTiming::rabi_peak() const { return rabi_per_sqrt_power * std::sqrt(power); }

double ControlTiming::envelope(double t) const {
    if (t < off_time) return 1.0;
    if (ramp_time > 0.0 && t < off_time + ramp_time) {
        const double x = (t - off_time) / ramp_time;  // 0 -> 1 across the ramp
        return 0.5 * (1.0 + std::cos(pi * x));
    }
    if (t < on_time) return 0.0;
    if (ramp_time > 0.0 && t < on_time + ramp_time) {
        const double x = (t - on_time) / ramp_time;
        return 0.5 * (1.0 - std::cos(pi * x));
    }
    return 1.0;
}

void ControlTiming::validate() const {
    if (!(power >= 0.0)) throw InvalidInput("control: power must be >= 0");
    if (!(rabi_per_sqrt_power >= 0.0))
        throw InvalidInput("control: rabi_per_sqrt_power must be >= 0");
    if (!(ramp_time >= 0.0)) throw InvalidInput("control: ramp_time must be >= 0");
    if (!(off_time < on_time)) throw InvalidInput("control: off_time must be < on_time");
    if (off_time + ramp_time > on_time)
        throw InvalidInput("control: ramps overlap (off_time + ramp_time > on_time)");
}

void SimGrid::validate() const {
    if (nz < 2) throw InvalidInput("grid: nz must be >= 2");
    if (nt < 2) throw InvalidInput("grid: nt must be >= 2");
    if (!(dt > 0.0)) throw InvalidInput("grid: dt must be > 0");
}

}  // namespace qmem
