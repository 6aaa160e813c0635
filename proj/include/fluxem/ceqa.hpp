#pragma once

#include <complex>
#include <vector>

#include "fluxem/kerr_mode.hpp"

namespace fluxem {

// Pump-probe drive for the absorption line shapes. delta = probe offset from
// the driven resonance (omega_p - omega_mode for the Kerr branch,
// omega_p - tilde_omega_q for the TLS), i.e. delta = delta_p + Delta with
// delta_p the probe-pump offset.
struct PumpProbeConfig {
    double epsilon_d = 0.0;      // pump amplitude, rad/s
    double epsilon_p = 0.0;      // probe amplitude, rad/s
    double detuning = 0.0;       // pump detuning Delta from the mode/TLS, rad/s
    double ratio_threshold = 0.5; // warn when epsilon_p/epsilon_d exceeds this

    bool ansatz_strained() const {
        return epsilon_d > 0.0 && epsilon_p / epsilon_d > ratio_threshold;
    }
};

// delta grid helper: +-40 gamma_m around the dip, odd count.
std::vector<double> default_delta_grid(double gamma_m, int points = 501, double span = 40.0);

struct ProbeResponse {
    std::vector<double> delta;                 // rad/s
    std::vector<std::complex<double>> a_minus; // probe-frequency field component
    std::vector<double> s21;                   // |kappa_ex * a_minus / epsilon_p|
    double n_pump = 0.0;                       // pump steady-state occupation
    bool ansatz_warning = false;
};

// Weak-anharmonicity probe absorption of the driven Kerr branch. The pump
// steady state comes from the same cubic as kerr_mode::steady_state; the
// default pump convention is red-detuned by one mechanical quantum
// (detuning = -omega_m).
ProbeResponse weak_kerr_response(const KerrModeConfig& cfg, const PumpProbeConfig& pp,
                                 const std::vector<double>& delta);

// Strong-anharmonicity limit: branch treated as a dissipative two-level
// system with longitudinal mechanical coupling.
struct TlsConfig {
    double tilde_omega_q = 0.0; // dressed qubit frequency, rad/s
    double gamma_q = 0.0;       // energy relaxation
    double gamma_phi = 0.0;     // pure dephasing
    double g0 = 0.0;            // longitudinal coupling
    double omega_m = 0.0;
    double gamma_m = 0.0;
    bool approx_delta = true;   // use Delta in place of the X0-shifted detuning

    double gamma_perp() const { return 0.5 * gamma_q + gamma_phi; }
    void check() const;
};

struct TlsStatics {
    double sz0 = 0.0;  // <sigma_z>
    double x0 = 0.0;   // static beam displacement (in X = beta + beta*)
    double delta_tilde = 0.0;
};

// Pump-only stationary TLS state and displaced detuning bookkeeping.
TlsStatics tls_statics(const TlsConfig& tls, double epsilon_d, double detuning);

// Probe response sigma^-_- of the driven TLS; returned a_minus is in the
// caller's normalization (proportional to the measured S21; absolute scale is
// a fit parameter downstream). Pump convention per the TLS equations:
// detuning = +omega_m.
ProbeResponse tls_response(const TlsConfig& tls, const PumpProbeConfig& pp,
                           const std::vector<double>& delta);

} // namespace fluxem
