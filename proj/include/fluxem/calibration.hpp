#pragma once

#include <string>
#include <vector>

namespace fluxem {

struct CalibrationRecord {
    double chi = 0.0;           // dispersive shift, rad/s
    double atten_product = 0.0; // input-line calibration constant, s
    double gain_dB = 0.0;       // output-line power gain
    double n_m = 0.0;           // thermal phonon occupation
    double T_mode = 0.0;        // K
    double kappa_e = 0.0;       // rad/s
};

struct DispersiveShift {
    double chi = 0.0;
    bool near_pole = false; // |Delta| or |Delta - alpha_T| within 10 cavity linewidths
};

// chi = -(J^2/Delta) * alpha_T/(Delta - alpha_T), Delta = omega_q - omega_c
DispersiveShift dispersive_shift(double J, double delta, double alpha_T, double kappa_b);

// n_d = qubit_shift / (-2 chi)
double stark_photon_number(double qubit_shift, double chi);

// Linear fit of Stark-calibrated photon number against input power. The
// photon number model n_d = P_in/(hbar omega_d * atten * (detuning^2 +
// kappa^2/4)) is the one place the opaque attenuation constant (units of
// seconds) is interpreted.
double stark_atten_product(const std::vector<double>& power_watt,
                           const std::vector<double>& qubit_shift, double chi,
                           double omega_d, double probe_detuning, double kappa);

// slope of P_d = A_P * n_d * kappa_e * hbar * omega, reported in dB
double output_gain(const std::vector<double>& transmitted_power_watt,
                   const std::vector<double>& n_d, double kappa_e, double omega);

struct ThermometryParams {
    double g_plus = 0.0;   // rad/s
    double kappa = 0.0;    // rad/s
    double gamma_m = 0.0;  // rad/s
    double kappa_e = 0.0;  // rad/s
    double omega_m = 0.0;  // rad/s
    double gain_dB = 0.0;
};

struct ThermometryResult {
    double n_m = 0.0;
    double T_mode = 0.0;
    double intercept = 0.0; // A_P (1/2 + n_add), not used for n_m
};

// Sideband-peak PSD slope against pump photon number. svv_over_hw holds
// S_VV/(hbar omega) samples; the intercept absorbs the amplifier noise
// quanta, so n_m comes from the slope alone.
ThermometryResult sideband_thermometry(const std::vector<double>& svv_over_hw,
                                       const std::vector<double>& n_d,
                                       const ThermometryParams& par);

// Bose inversions: T from occupation and back.
double mode_temperature(double n_m, double omega_m);
double bose_occupation(double temperature, double omega_m);

struct ReflectionFitResult {
    double kappa_e = 0.0;
    double kappa_internal = 0.0; // kappa_i + kappa_in: magnitude traces fix only the sum
    double omega_c = 0.0;
    double kappa_e_sigma = 0.0;
    double kappa_internal_sigma = 0.0;
    double omega_c_sigma = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
    std::string message;
};

// |S11| = |1 - kappa_e/((kappa_internal + kappa_e)/2 + i(omega - omega_c))|.
// Both coupling branches are tried and the lower-residual one returned.
// Requires the trace to span >= 5 fitted linewidths.
ReflectionFitResult reflection_fit(const std::vector<double>& omega,
                                   const std::vector<double>& s11_mag);

std::string calibration_json(const CalibrationRecord& rec);

} // namespace fluxem
