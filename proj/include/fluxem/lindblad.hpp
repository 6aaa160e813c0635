#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "fluxem/device.hpp"
#include "fluxem/gridmap.hpp"

namespace fluxem {

// Driven-dissipative cavity + transmon master equation, truncated to a few
// levels per mode (total Hilbert dimension <= 16). Thermal dissipators act on
// both modes with the same occupation.
struct LindbladConfig {
    int cavity_levels = 3;
    int transmon_levels = 3;
    double n_th = 0.0;    // thermal occupation, both baths
    double gamma_q = 0.0; // transmon energy decay, rad/s
    double kappa = 0.0;   // cavity decay, rad/s
    double epsilon = 0.0; // cavity drive amplitude, rad/s

    void check() const;
};

struct LindbladSolution {
    Eigen::MatrixXcd rho;          // steady-state density matrix, trace 1
    std::complex<double> a_mean;   // <a>
    double rcond = 0.0;            // reciprocal condition estimate of the solve
};

// Steady state in the frame rotating at the drive frequency omega_d.
// omega_c/omega_q/alpha_T/J define the Hamiltonian (standard transmon
// ladder); throws numerical_error when the linear solve is ill-conditioned.
LindbladSolution lindblad_steady_state(double omega_c, double omega_q, double alpha_T,
                                       double J, double omega_d, const LindbladConfig& cfg);

struct TransmissionTrace {
    std::vector<double> omega;     // drive frequency, rad/s
    std::vector<double> response;  // |<a>|, proportional to |S21|
};

// Probe transmission across a frequency grid at one flux point.
TransmissionTrace lindblad_transmission(const DeviceParams& p, double phi_ratio,
                                        const LindbladConfig& cfg,
                                        const std::vector<double>& omega_grid,
                                        const ExecPolicy& exec = ExecPolicy{});

} // namespace fluxem
