#include "fluxem/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fluxem/constants.hpp"
#include "fluxem/device.hpp"
#include "fluxem/lm.hpp"
#include <json.hpp>

namespace fluxem {

DispersiveShift dispersive_shift(double J, double delta, double alpha_T, double kappa_b) {
    if (delta == 0.0) throw config_error("dispersive_shift: zero qubit-cavity detuning");
    if (delta == alpha_T)
        throw config_error("dispersive_shift: detuning equals the anharmonicity");
    DispersiveShift out;
    out.chi = -(J * J / delta) * alpha_T / (delta - alpha_T);
    out.near_pole = std::abs(delta) < 10.0 * kappa_b ||
                    std::abs(delta - alpha_T) < 10.0 * kappa_b;
    return out;
}

double stark_photon_number(double qubit_shift, double chi) {
    if (chi == 0.0) throw config_error("stark_photon_number: zero dispersive shift");
    return qubit_shift / (-2.0 * chi);
}

namespace {

// least-squares slope through the origin
double origin_slope(const std::vector<double>& x, const std::vector<double>& y,
                    const char* what) {
    if (x.size() != y.size() || x.size() < 3)
        throw config_error(std::string(what) + ": need at least 3 matched points");
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    if (!(sxx > 0.0)) throw config_error(std::string(what) + ": degenerate abscissa");
    return sxy / sxx;
}

void line_fit(const std::vector<double>& x, const std::vector<double>& y,
              double& slope, double& intercept, const char* what) {
    if (x.size() != y.size() || x.size() < 3)
        throw config_error(std::string(what) + ": need at least 3 matched points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-300 * std::max(1.0, sxx))
        throw numerical_error(std::string(what) + ": degenerate abscissa");
    slope = (n * sxy - sx * sy) / det;
    intercept = (sy * sxx - sx * sxy) / det;
}

} // namespace

double stark_atten_product(const std::vector<double>& power_watt,
                           const std::vector<double>& qubit_shift, double chi,
                           double omega_d, double probe_detuning, double kappa) {
    std::vector<double> n_d(qubit_shift.size());
    for (size_t i = 0; i < qubit_shift.size(); ++i)
        n_d[i] = stark_photon_number(qubit_shift[i], chi);
    const double slope = origin_slope(power_watt, n_d, "stark_atten_product");
    if (!(slope > 0.0))
        throw numerical_error("stark_atten_product: non-positive photon-number slope");
    const double lorentz = probe_detuning * probe_detuning + 0.25 * kappa * kappa;
    return 1.0 / (slope * hbar * omega_d * lorentz);
}

double output_gain(const std::vector<double>& transmitted_power_watt,
                   const std::vector<double>& n_d, double kappa_e, double omega) {
    std::vector<double> flux(n_d.size());
    for (size_t i = 0; i < n_d.size(); ++i)
        flux[i] = n_d[i] * kappa_e * hbar * omega;
    const double gain = origin_slope(flux, transmitted_power_watt, "output_gain");
    if (!(gain > 0.0)) throw numerical_error("output_gain: non-positive gain slope");
    return 10.0 * std::log10(gain);
}

ThermometryResult sideband_thermometry(const std::vector<double>& svv_over_hw,
                                       const std::vector<double>& n_d,
                                       const ThermometryParams& par) {
    double slope = 0.0, intercept = 0.0;
    line_fit(n_d, svv_over_hw, slope, intercept, "sideband_thermometry");
    if (!(slope > 0.0))
        throw numerical_error("sideband_thermometry: non-positive sideband slope");
    const double gain = std::pow(10.0, par.gain_dB / 10.0);
    const double lorentz = par.kappa * par.kappa + 4.0 * par.omega_m * par.omega_m;
    const double denom = gain * (par.kappa_e / par.gamma_m) * 16.0 * par.g_plus * par.g_plus;
    if (!(denom > 0.0)) throw config_error("sideband_thermometry: parameters not positive");
    ThermometryResult out;
    out.n_m = slope * lorentz / denom;
    out.T_mode = mode_temperature(out.n_m, par.omega_m);
    out.intercept = intercept;
    return out;
}

double mode_temperature(double n_m, double omega_m) {
    if (n_m < 0.0) throw config_error("mode_temperature: negative occupation");
    if (n_m == 0.0) return 0.0;
    return hbar * omega_m / (k_boltzmann * std::log1p(1.0 / n_m));
}

double bose_occupation(double temperature, double omega_m) {
    if (temperature <= 0.0) return 0.0;
    return 1.0 / std::expm1(hbar * omega_m / (k_boltzmann * temperature));
}

ReflectionFitResult reflection_fit(const std::vector<double>& omega,
                                   const std::vector<double>& s11_mag) {
    const size_t n = omega.size();
    if (n != s11_mag.size() || n < 7)
        throw config_error("reflection_fit: need at least 7 matched samples");

    size_t imin = 0;
    for (size_t i = 1; i < n; ++i)
        if (s11_mag[i] < s11_mag[imin]) imin = i;
    const double wc0 = omega[imin];
    const double m0 = std::max(0.0, std::min(1.0, s11_mag[imin]));

    const double half = std::sqrt(0.5 * (1.0 + m0 * m0));
    size_t lo = imin, hi = imin;
    while (lo > 0 && s11_mag[lo] < half) --lo;
    while (hi + 1 < n && s11_mag[hi] < half) ++hi;
    double ktot0 = omega[hi] - omega[lo];
    if (!(ktot0 > 0.0)) ktot0 = (omega[n - 1] - omega[0]) / 10.0;

    auto resid = [&](const Eigen::VectorXd& p) {
        const double ke = p(0), ki = p(1), wc = p(2);
        const double kt = ke + ki;
        Eigen::VectorXd r(static_cast<int>(n));
        for (size_t i = 0; i < n; ++i) {
            const std::complex<double> s =
                1.0 - ke / std::complex<double>(0.5 * kt, omega[i] - wc);
            r(static_cast<int>(i)) = std::abs(s) - s11_mag[i];
        }
        return r;
    };

    // dip depth fixes kappa_e/kappa_tot up to the coupling branch; try both
    ReflectionFitResult best;
    best.residual_norm = std::numeric_limits<double>::infinity();
    for (double ratio : {0.5 * (1.0 - m0), 0.5 * (1.0 + m0)}) {
        Eigen::VectorXd x0(3);
        const double ke0 = std::clamp(ratio, 0.02, 0.98) * ktot0;
        x0 << ke0, ktot0 - ke0, wc0;
        LmOptions opts;
        opts.scales.resize(3);
        opts.scales << ktot0, ktot0, ktot0;
        opts.lower_bounds.resize(3);
        opts.lower_bounds << 0.0, 0.0, -std::numeric_limits<double>::infinity();
        const LmResult lm = lm_fit(resid, x0, opts);
        if (lm.residual_norm < best.residual_norm) {
            best.kappa_e = lm.params(0);
            best.kappa_internal = lm.params(1);
            best.omega_c = lm.params(2);
            best.kappa_e_sigma = lm.sigma(0);
            best.kappa_internal_sigma = lm.sigma(1);
            best.omega_c_sigma = lm.sigma(2);
            best.residual_norm = lm.residual_norm;
            best.converged = lm.converged;
            best.message = lm.message;
        }
    }
    if (!best.converged)
        throw numerical_error("reflection_fit: no coupling branch converged");
    const double span = omega[n - 1] - omega[0];
    const double kt = best.kappa_e + best.kappa_internal;
    if (span < 5.0 * kt)
        throw numerical_error("reflection_fit: trace spans fewer than 5 linewidths");
    return best;
}

std::string calibration_json(const CalibrationRecord& rec) {
    nlohmann::json j;
    j["chi_Hz"] = rad_to_hz(rec.chi);
    j["atten_product_s"] = rec.atten_product;
    j["gain_dB"] = rec.gain_dB;
    j["n_m"] = rec.n_m;
    j["T_mode_K"] = rec.T_mode;
    j["kappa_e_Hz"] = rad_to_hz(rec.kappa_e);
    return j.dump(2);
}

} // namespace fluxem
