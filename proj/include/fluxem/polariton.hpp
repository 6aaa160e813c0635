#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <optional>
#include <vector>

#include "fluxem/device.hpp"

namespace fluxem {

// Transition labels for the coupled cavity-transmon level structure up to two
// excitations. States: ground, one-excitation |->,|+>, two-excitation
// |alpha>,|beta>,|gamma> (ascending within each block).
enum class Transition {
    lower,       // ground -> |->
    upper,       // ground -> |+>
    lower_alpha, // |-> -> |alpha>
    lower_beta,  // |-> -> |beta>
    upper_gamma, // |+> -> |gamma>
    gamma_half,  // two-photon, E(|gamma>)/2
};
inline constexpr std::array<Transition, 6> all_transitions = {
    Transition::lower,       Transition::upper,      Transition::lower_alpha,
    Transition::lower_beta,  Transition::upper_gamma, Transition::gamma_half};

const char* transition_name(Transition t);

struct PolaritonSpectrum {
    // Ground-subtracted energies, ascending within each excitation block:
    // E[0]=0, E[1..2] one-excitation, E[3..5] two-excitation.
    std::array<double, 6> energy{};
    // Eigenvectors in the bare product basis (columns match energy order).
    Eigen::Matrix<double, 6, 6> states = Eigen::Matrix<double, 6, 6>::Zero();
    std::array<double, 6> transition{};    // rad/s, indexed by Transition
    std::array<double, 6> responsivity{};  // dw_i/dPhi, rad/s per flux quantum
    std::array<double, 6> coupling{};      // g_i, rad/s
    double omega_q = 0.0;                  // transmon frequency at this flux
    double kerr_upper = 0.0;               // K_+ of the upper branch (set by spectrum_at)
};

// omega_q(Phi) = (omega_q_max + alpha_T) sqrt(|cos(pi Phi/Phi0)|) - alpha_T
double transmon_frequency(const DeviceParams& p, double phi_ratio);

// Coupled Hamiltonian on the {ground, one-, two-excitation} basis:
// diag {0, wq, wc, 2(wq - alpha_T), wc + wq, 2 wc}, off-diagonals J in the
// one-excitation block and sqrt(2) J in the two-excitation block.
Eigen::Matrix<double, 6, 6> build_hamiltonian(const DeviceParams& p, double phi_ratio);

// Eigenvalues/vectors of the 6x6 with the ground energy subtracted, ascending
// within each excitation block. Rejects non-symmetric input.
PolaritonSpectrum diagonalize(const Eigen::Matrix<double, 6, 6>& h);

// Fills spectrum.transition from spectrum.energy.
void transition_frequencies(PolaritonSpectrum& s);

// dw_i/dPhi by Richardson-refined central differences (h = 1e-4 flux quanta).
// Throws numerical_error when the refinement does not converge (only happens
// against the half-flux-quantum singularity).
std::array<double, 6> flux_responsivity(const DeviceParams& p, double phi_ratio,
                                        double h = 1e-4);

double zero_point_motion(const DeviceParams& p); // sqrt(hbar / 2 m omega_m)

// g_i = xi * G_i * B_par * l * x_zpf / Phi0 for responsivity in rad/s per
// flux quantum.
std::array<double, 6> coupling_g(const DeviceParams& p, const FluxPoint& fp,
                                 const std::array<double, 6>& responsivity);

// Rescale a coupling measured at one flux point to another via the
// responsivity ratio.
double scale_known_g(double g_ref, double G_ref, double G_new);

// Full spectrum at a flux point: energies, transitions, responsivities,
// couplings, upper-branch Kerr.
PolaritonSpectrum spectrum_at(const DeviceParams& p, const FluxPoint& fp);

enum class Branch { lower, upper };

struct KerrEstimate {
    double kerr = 0.0;             // K, rad/s, positive for transmon-like softening
    double truncation_shift = 0.0; // relative change when going 4 -> 5 levels
    bool truncation_warning = false;
};

// Extended Jaynes-Cummings ladder on n_levels x n_levels product states with
// the standard transmon ladder (two-excitation anharmonicity alpha_T). Used
// for the Kerr estimate and the driven-dissipative solver; the 6x6 block
// Hamiltonian above is kept for the polariton transition bookkeeping.
Eigen::MatrixXd build_jc_hamiltonian(double omega_c, double omega_q, double alpha_T,
                                     double J, int n_levels, double energy_offset = 0.0);

// Kerr of one polariton branch from the defect of the two-excitation ladder,
// K = 2 E(1 branch) - E(2 branch).
KerrEstimate polariton_kerr(double omega_c, double omega_q, double alpha_T, double J,
                            Branch branch, int n_levels = 4);
KerrEstimate kerr_estimate(const DeviceParams& p, double phi_ratio,
                           Branch branch = Branch::upper, int n_levels = 4);

// Smallest flux in [0, 0.5) where the given transition crosses target (rad/s).
// Bisection on the monotone branch; throws numerical_error if not bracketed.
double flux_for_transition(const DeviceParams& p, Transition t, double target);

// Max-overlap continuation of state labels along a flux sweep: returns, for
// each sweep point, the permutation mapping diagonalize() order to the labels
// tracked from the first point.
std::vector<std::array<int, 6>> track_labels(const std::vector<PolaritonSpectrum>& sweep);

} // namespace fluxem
