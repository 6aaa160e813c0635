#pragma once

#include <cmath>

namespace fluxem {

// SI values (CODATA 2018)
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double k_boltzmann = 1.380649e-23; // J / K
inline constexpr double phi0 = 2.067833848e-15;     // flux quantum h/2e, Wb

inline constexpr double two_pi = 6.283185307179586;

// Config files carry ordinary frequencies in Hz; everything internal is
// angular (rad/s). These two helpers are the only conversion points.
inline constexpr double hz_to_rad(double f_hz) { return two_pi * f_hz; }
inline constexpr double rad_to_hz(double w) { return w / two_pi; }

inline double dbm_to_watt(double p_dbm) { return 1e-3 * std::pow(10.0, p_dbm / 10.0); }
inline double watt_to_dbm(double p_w) { return 10.0 * std::log10(p_w / 1e-3); }

} // namespace fluxem
