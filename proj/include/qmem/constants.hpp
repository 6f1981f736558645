// Unit conventions shared across the toolkit.
//
// All frequencies and rates are angular (rad/s) internally. Config files and
// CLI flags carry explicit unit suffixes and are converted at the boundary;
// "2pi_mhz" style keys mean the value is quoted as nu with omega = 2*pi*nu,
// matching the usual "2 pi x ... MHz" notation.

#pragma once

namespace qmem {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Quoted-frequency helpers: value in MHz/kHz/GHz -> rad/s.
inline constexpr double from_2pi_mhz(double mhz) { return two_pi * mhz * 1e6; }
inline constexpr double from_2pi_khz(double khz) { return two_pi * khz * 1e3; }
inline constexpr double from_2pi_ghz(double ghz) { return two_pi * ghz * 1e9; }
inline constexpr double to_2pi_mhz(double rad_per_s) { return rad_per_s / (two_pi * 1e6); }

}  // namespace qmem
