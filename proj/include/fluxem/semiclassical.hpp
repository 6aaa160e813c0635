#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <vector>

#include "fluxem/device.hpp"
#include "fluxem/gridmap.hpp"

namespace fluxem {

// Mean-field model of cavity + transmon + beam under a cavity drive.
// Frequencies are lab-frame; detunings are formed against the drive.
struct ThreeModeParams {
    double omega_c = 0.0;  // rad/s
    double omega_q = 0.0;  // rad/s
    double kappa_b = 0.0;  // bare cavity linewidth
    double gamma = 0.0;    // transmon linewidth
    double gamma_m = 0.0;  // mechanical linewidth
    double omega_m = 0.0;  // mechanical frequency
    double alpha_T = 0.0;  // anharmonicity (positive number)
    double J = 0.0;        // cavity-transmon coupling
    double g0 = 0.0;       // transmon-beam coupling
    double atten_product = 0.0; // input-line calibration, s (power sweeps)

    double residual_tol = 1e-8;      // scaled fixed-point residual
    double stability_tol_rel = 1e-9; // x omega_m on Re(lambda)
    int scan_points = 2001;          // occupation scan resolution

    void check() const;
};

struct ThreeModeDrive {
    double omega_d = 0.0;  // rad/s
    double epsilon = 0.0;  // rad/s
};

// cavity alpha' = x + iy, transmon zeta = p + iq, beam beta = u + iv
struct ThreeModeState {
    double x = 0.0, y = 0.0;
    double p = 0.0, q = 0.0;
    double u = 0.0, v = 0.0;
};

// time derivatives of the six quadratures
ThreeModeState three_mode_flow(const ThreeModeParams& par, const ThreeModeDrive& drive,
                               const ThreeModeState& s);

// All fixed points: the steady-state conditions reduce to one scalar equation
// in the transmon occupation, solved by dense sign-scan + bisection over the
// physical bracket, then back-substituted. Throws numerical_error with the
// scan range if no bracket contains a root.
std::vector<ThreeModeState> find_fixed_points(const ThreeModeParams& par,
                                              const ThreeModeDrive& drive);

// Flow Jacobian at a fixed point. With validate set, a residual above
// residual_tol (scaled) is rejected.
Eigen::Matrix<double, 6, 6> three_mode_jacobian(const ThreeModeParams& par,
                                                const ThreeModeDrive& drive,
                                                const ThreeModeState& s,
                                                bool validate = true);

enum class Stability { stable, unstable, mechanically_unstable };

struct FixedPointReport {
    ThreeModeState state;
    std::array<std::complex<double>, 6> eigenvalues{};
    Stability classification = Stability::stable;
    int crossing_index = -1;     // eigenvalue with largest real part if unstable
    double mech_weight = 0.0;    // |w_u|^2 + |w_v|^2 of that eigenvector
    double eig_residual = 0.0;   // |S w - lambda w| for the crossing pair
};

FixedPointReport classify_stability(const ThreeModeParams& par, const ThreeModeDrive& drive,
                                    const ThreeModeState& s);

struct RegionPoint {
    double power_dbm = 0.0;
    double omega_d = 0.0;  // rad/s
    int n_fp = 0;          // -1 marks a solver failure
    int n_stable = 0;
    bool mech_unstable = false; // any fixed point mechanics-dominated unstable
    bool ok = true;
};

struct RegionMap {
    std::vector<double> power_dbm;
    std::vector<double> omega_d;
    std::vector<RegionPoint> points; // row-major, power rows
};

// Fixed-point census over a power x drive-frequency grid; per-point failures
// become labeled holes.
RegionMap region_map(const ThreeModeParams& par, const std::vector<double>& power_dbm,
                     const std::vector<double>& omega_d,
                     const ExecPolicy& exec = ExecPolicy{});

// Cavity-only limit check: with J = 0 and g0 = 0 the cavity fixed point has
// the linear Lorentzian occupation.
double lorentzian_occupation(double epsilon, double detuning, double kappa);

// Reduced model with the transmon eliminated (one Kerr mode + beam): the
// same machinery on a 4x4 system, shared by the instability criteria tests.
struct TwoModeParams {
    double kappa = 0.0;
    double kerr = 0.0;  // K >= 0, resonance pulls down with occupation
    double g = 0.0;
    double omega_m = 0.0;
    double gamma_m = 0.0;

    double stability_tol_rel = 1e-9;
};

struct TwoModeReport {
    std::array<double, 4> state{}; // x, y, u, v
    std::array<std::complex<double>, 4> eigenvalues{};
    Stability classification = Stability::stable;
    double mech_weight = 0.0;
};

std::vector<TwoModeReport> two_mode_fixed_points(const TwoModeParams& par, double detuning,
                                                 double epsilon);

} // namespace fluxem
