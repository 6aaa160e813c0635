#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "fluxem/device.hpp"
#include "fluxem/gridmap.hpp"

namespace fluxem {

// One driven polariton branch reduced to a Kerr mode parametrically coupled
// to the beam. Sign convention: Kerr term -K/2 (a+ a+)(a a) with K >= 0 for
// the transmon-like softening, so the resonance pulls DOWN with occupation.
struct KerrModeConfig {
    double omega_plus = 0.0; // mode frequency, rad/s
    double kerr = 0.0;       // K, rad/s, >= 0
    double kappa = 0.0;      // total linewidth
    double kappa_ex = 0.0;   // output coupling (<= kappa); 0 = unspecified
    double kappa_0 = 0.0;    // remaining loss; 0 = unspecified
    double g = 0.0;          // single-photon electromechanical coupling
    double omega_m = 0.0;    // mechanical frequency
    double gamma_m = 0.0;    // mechanical linewidth

    void check() const;
};

// Drive expressed directly as an amplitude. Exactly one source of truth:
// construct either from epsilon or from power via drive_from_power.
struct DriveSpec {
    double detuning = 0.0; // omega_d - omega_plus, rad/s
    double epsilon = 0.0;  // rad/s
};

// epsilon^2 = P_in / (hbar * omega_d * atten_product); the one spot where the
// input-line calibration constant is interpreted.
DriveSpec drive_from_power(double power_dbm, double omega_d, double omega_plus,
                           double atten_product);
double power_from_epsilon(double epsilon, double omega_d, double atten_product);

struct SteadyBranch {
    double n = 0.0;                  // |alpha|^2
    std::complex<double> alpha;      // intracavity amplitude
    std::complex<double> beta;       // static mechanical amplitude
    bool em_stable = false;          // electromagnetic branch stability
};

// All real non-negative roots of n[(Delta + C n)^2 + kappa^2/4] = eps^2 with
// C = K + 2 g^2 omega_m / (omega_m^2 + gamma_m^2/4), ascending in n.
std::vector<SteadyBranch> steady_state(const KerrModeConfig& cfg, const DriveSpec& drive);

enum class BranchPolicy { lowest_stable, highest_stable, lowest };

const SteadyBranch& select_branch(const std::vector<SteadyBranch>& branches,
                                  BranchPolicy policy);

struct SelfEnergy {
    std::complex<double> sigma;  // Sigma_c[omega]
    double delta_tilde = 0.0;    // drive-shifted detuning
    std::complex<double> G;      // g * alpha
    std::complex<double> eta;    // K * alpha^2
};

// Cavity self-energy seen by the beam at sideband frequency omega, evaluated
// on one steady-state branch.
SelfEnergy self_energy(const KerrModeConfig& cfg, const DriveSpec& drive,
                       const SteadyBranch& branch, double omega);

// Same quantity parametrized by occupation alone (the branch determined by
// (Delta, n) rather than by drive amplitude); used for threshold scans.
SelfEnergy self_energy_at_occupation(const KerrModeConfig& cfg, double detuning,
                                     double n, double omega);

struct BackactionPoint {
    double power_dbm = 0.0;
    double detuning = 0.0;   // rad/s
    double n = 0.0;
    double gamma_eff = 0.0;  // gamma_m + 2 Re Sigma, rad/s
    double spring = 0.0;     // Im Sigma, rad/s
    int n_branches = 0;
    bool em_stable = false;
    bool ok = true;
};

struct BackactionMap {
    std::vector<double> power_dbm; // rows
    std::vector<double> detuning;  // cols, rad/s
    std::vector<BackactionPoint> points; // row-major
};

// Effective mechanical damping / frequency shift over a power x detuning
// grid. Powers in dBm (converted through atten_product), detunings in rad/s.
BackactionMap backaction_map(const KerrModeConfig& cfg, double atten_product,
                             const std::vector<double>& power_dbm,
                             const std::vector<double>& detuning,
                             BranchPolicy policy = BranchPolicy::lowest_stable,
                             const ExecPolicy& exec = ExecPolicy{});

// Power sweep along one detuning with branch continuation; fold points (where
// the followed branch disappears) are flagged.
struct BranchSweepPoint {
    double epsilon = 0.0;
    SteadyBranch branch;
    std::complex<double> sigma_m; // Sigma_c[omega_m]
    bool fold = false;
};
std::vector<BranchSweepPoint> branch_sweep(const KerrModeConfig& cfg, double detuning,
                                           const std::vector<double>& epsilons);

// Detunings where gamma_m + 2 Re Sigma_c[omega_m] changes sign at fixed
// drive, bisected to within `tol` (rad/s). One entry per sign change,
// ascending.
std::vector<double> instability_crossings(const KerrModeConfig& cfg, double epsilon,
                                          double det_lo, double det_hi, int scan_points,
                                          double tol = two_pi * 1e3,
                                          BranchPolicy policy = BranchPolicy::lowest_stable);

// Minimum occupation for net negative mechanical damping at the given
// detuning (bisection on n), or nullopt if stable up to n_max.
std::optional<double> threshold_occupation(const KerrModeConfig& cfg, double detuning,
                                           double n_max);

// Smallest threshold occupation over a detuning range (brute scan + local
// refinement); returns (detuning, n).
std::pair<double, double> min_threshold_occupation(const KerrModeConfig& cfg,
                                                   double det_lo, double det_hi,
                                                   int scan_points, double n_max);

} // namespace fluxem
