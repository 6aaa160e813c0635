#pragma once

#include <stdexcept>
#include <string>

namespace fluxem {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Static parameters of one cavity + flux-tunable transmon + mechanical
// resonator device. All rates/frequencies in rad/s, mass in kg, lengths in m.
// kappa_in/kappa_e/kappa_0 may be zero, meaning "not characterized"; when all
// three are given their sum must agree with kappa_b.
struct DeviceParams {
    double omega_c = 0.0;      // bare cavity frequency
    double kappa_b = 0.0;      // bare cavity linewidth
    double kappa_in = 0.0;     // input coupling
    double kappa_e = 0.0;      // output coupling
    double kappa_0 = 0.0;      // internal loss
    double omega_q_max = 0.0;  // transmon frequency at zero flux
    double J = 0.0;            // cavity-transmon coupling
    double alpha_T = 0.0;      // transmon anharmonicity, stored positive
    double omega_m = 0.0;      // mechanical frequency
    double gamma_m = 0.0;      // mechanical linewidth
    double mass = 0.0;         // beam effective mass
    double length_l = 0.0;     // beam length
    double atten_product = 0.0; // input-line calibration constant, see calibration.hpp
    double gain_dB = 0.0;      // output-line gain
    double xi = 1.0;           // mode-shape reduction factor, in (0, 1]
};

// Operating point: flux through the SQUID in units of the flux quantum plus
// the applied in-plane / perpendicular field components (T).
struct FluxPoint {
    double phi_ratio = 0.0;
    double b_par = 0.0;
    double b_perp = 0.0;
};

// Throws config_error with the offending field named.
void validate(const DeviceParams& p, double kappa_sum_rel_tol = 1e-6);

// JSON file with frequencies in Hz (field names mirror the device tables;
// see configs/device1.json). Unknown fields are rejected.
DeviceParams load_device(const std::string& path);
std::string device_to_json(const DeviceParams& p);
DeviceParams device_from_json_text(const std::string& text);

} // namespace fluxem
