#pragma once

#include <array>
#include <complex>
#include <vector>

#include "fluxem/semiclassical.hpp"

namespace fluxem {

struct IntegrationConfig {
    double t_end = 0.0;       // s
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double sample_rate = 0.0; // output samples per second
    long long max_steps = 50000000;

    void check() const;
};

// Rotating frame at the drive throughout; samples land exactly on the
// requested grid (the controller steps to each boundary).
struct TimeSeries {
    std::vector<double> t;
    std::vector<std::complex<double>> alpha; // cavity
    std::vector<std::complex<double>> zeta;  // transmon (three-mode only)
    std::vector<std::complex<double>> beta;  // beam
    bool step_underflow = false; // integrator died (stiff blowup); a usable
                                 // instability signal in itself
    double failure_time = 0.0;
    long long steps = 0;
};

// Driven Kerr mode + beam (states x, y, u, v).
TimeSeries integrate_two_mode(const TwoModeParams& par, double detuning, double epsilon,
                              const std::array<double, 4>& init,
                              const IntegrationConfig& cfg);

// Full cavity + transmon + beam flow.
TimeSeries integrate_three_mode(const ThreeModeParams& par, const ThreeModeDrive& drive,
                                const ThreeModeState& init, const IntegrationConfig& cfg);

struct RunClassification {
    bool unstable = false;
    bool saturated = false;    // growth leveled off within the run
    double envelope_rate = 0.0; // d ln |beta - <beta>| / dt over the fit window
};

// Mechanical-envelope verdict: log-linear fit of the oscillating part of
// beta(t) after discarding the leading fraction of the run. step_underflow
// runs classify unstable outright.
RunClassification classify_run(const TimeSeries& series, double omega_m,
                               double discard_fraction = 0.3);

} // namespace fluxem
