#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <vector>

#include "fluxem/gridmap.hpp"
#include "fluxem/polariton.hpp"

namespace fluxem {

// One flux-tunable transition reduced to a driven TLS longitudinally coupled
// to the beam through its flux responsivity.
struct TransitionTls {
    Transition label = Transition::lower;
    double omega = 0.0;          // rad/s
    double g = 0.0;              // rad/s
    double gamma = 0.0;          // energy decay, rad/s
    double gamma_phi = 0.0;      // pure dephasing, rad/s
    double thermal_weight = 0.0; // occupation of the transition's lower state

    double gamma_perp() const { return 0.5 * gamma + gamma_phi; }
};

// occupation of the cavity-transmon eigenstates feeding the four transitions
struct ThermalWeights {
    double ground = 0.82;
    double minus = 0.10;
    double plus = 0.08;
};

// The four modeled transitions with default rates (2 pi x {10,10,18,14} MHz
// decay, 2 pi x {4,4,8,9} MHz dephasing) and weights keyed by each
// transition's lower eigenstate.
std::vector<TransitionTls> enumerate_transitions(const PolaritonSpectrum& sp,
                                                 const ThermalWeights& w = {});

// the shared mechanical mode every TLS couples to
struct MechMode {
    double omega_m = 0.0;
    double gamma_m = 0.0;
};

// sigma_z = s, sigma_+ = p' + iq', beam = u + iv
struct TlsFixedPoint {
    double s = -1.0;
    double p_prime = 0.0;
    double q_prime = 0.0;
    double u = 0.0;
    double v = 0.0;
};

// time derivatives of (s, p', q', u, v)
std::array<double, 5> tls_flow(const TransitionTls& t, const MechMode& mech,
                               double detuning, double epsilon, const TlsFixedPoint& st);

// All mean-field fixed points: scalar root-solve in s over [-1, 0] by dense
// scan + bisection, then back-substitution. epsilon = 0 returns the ground
// state exactly. Throws numerical_error if the scan finds no root.
std::vector<TlsFixedPoint> tls_fixed_points(const TransitionTls& t, const MechMode& mech,
                                            double detuning, double epsilon,
                                            int scan_points = 400);

// perturbation evolution matrix at a fixed point, order (s, p', q', u, v)
Eigen::Matrix<double, 5, 5> tls_stability_matrix(const TransitionTls& t,
                                                 const MechMode& mech, double detuning,
                                                 double epsilon, const TlsFixedPoint& st);

struct TlsStabilityReport {
    std::array<std::complex<double>, 5> eigenvalues{};
    double max_real = 0.0;
    double mech_weight = 0.0; // |w_u|^2 + |w_v|^2 of the leading eigenvector
    bool unstable = false;
};

TlsStabilityReport tls_stability(const TransitionTls& t, const MechMode& mech,
                                 double detuning, double epsilon, const TlsFixedPoint& st,
                                 double tol_rel = 1e-9);

struct UnionPoint {
    double power_dbm = 0.0;
    double omega_d = 0.0;
    bool unstable = false;
    unsigned which = 0; // bit i set when transitions[i] destabilizes the beam
    bool ok = true;
};

struct UnionMap {
    std::vector<double> power_dbm;
    std::vector<double> omega_d;
    std::vector<UnionPoint> points; // row-major, power rows
};

// Per-point union over transitions: each TLS is driven with amplitude
// sqrt(thermal_weight) x the calibrated cavity drive; the point is unstable
// when any transition's model has an eigenvalue with positive real part at
// any of its fixed points.
UnionMap union_instability_map(const std::vector<TransitionTls>& transitions,
                               const MechMode& mech, const std::vector<double>& power_dbm,
                               const std::vector<double>& omega_d, double atten_product,
                               const ExecPolicy& exec = ExecPolicy{});

} // namespace fluxem
