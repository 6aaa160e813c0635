#include "fluxem/device.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fluxem/constants.hpp"

namespace fluxem {

void validate(const DeviceParams& p, double kappa_sum_rel_tol) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw config_error(std::string("device: ") + name + " must be positive");
    };
    positive(p.omega_c, "omega_c");
    positive(p.kappa_b, "kappa_b");
    positive(p.omega_q_max, "omega_q_max");
    positive(p.J, "J");
    positive(p.alpha_T, "alpha_T");
    positive(p.omega_m, "omega_m");
    positive(p.gamma_m, "gamma_m");
    positive(p.mass, "mass");
    positive(p.length_l, "length_l");
    if (p.atten_product < 0.0) throw config_error("device: atten_product must be >= 0");
    if (p.kappa_in < 0.0 || p.kappa_e < 0.0 || p.kappa_0 < 0.0)
        throw config_error("device: coupling rates must be >= 0");
    if (!(p.xi > 0.0) || p.xi > 1.0)
        throw config_error("device: xi must be in (0, 1]");
    if (p.kappa_in > 0.0 && p.kappa_e > 0.0 && p.kappa_0 > 0.0) {
        const double sum = p.kappa_in + p.kappa_e + p.kappa_0;
        if (std::abs(sum - p.kappa_b) > kappa_sum_rel_tol * p.kappa_b)
            throw config_error("device: kappa_in + kappa_e + kappa_0 inconsistent with kappa_b");
    }
}

namespace {

// Field names as they appear in device files; all frequencies/rates in Hz.
const std::map<std::string, double DeviceParams::*, std::less<>> hz_fields = {
    {"omega_c_Hz", &DeviceParams::omega_c},
    {"kappa_b_Hz", &DeviceParams::kappa_b},
    {"kappa_in_Hz", &DeviceParams::kappa_in},
    {"kappa_e_Hz", &DeviceParams::kappa_e},
    {"kappa_0_Hz", &DeviceParams::kappa_0},
    {"omega_q_max_Hz", &DeviceParams::omega_q_max},
    {"J_Hz", &DeviceParams::J},
    {"alpha_T_Hz", &DeviceParams::alpha_T},
    {"omega_m_Hz", &DeviceParams::omega_m},
    {"gamma_m_Hz", &DeviceParams::gamma_m},
};

const std::map<std::string, double DeviceParams::*, std::less<>> plain_fields = {
    {"mass_kg", &DeviceParams::mass},
    {"length_m", &DeviceParams::length_l},
    {"atten_product_s", &DeviceParams::atten_product},
    {"gain_dB", &DeviceParams::gain_dB},
    {"xi", &DeviceParams::xi},
};

} // namespace

DeviceParams device_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("device: bad JSON: ") + e.what());
    }
    if (!j.is_object()) throw config_error("device: top level must be an object");

    DeviceParams p;
    for (const auto& [key, val] : j.items()) {
        if (key == "name") continue; // free-form label, ignored
        if (!val.is_number())
            throw config_error("device: field '" + key + "' must be a number");
        if (auto it = hz_fields.find(key); it != hz_fields.end()) {
            p.*(it->second) = hz_to_rad(val.get<double>());
        } else if (auto it2 = plain_fields.find(key); it2 != plain_fields.end()) {
            p.*(it2->second) = val.get<double>();
        } else {
            throw config_error("device: unknown field '" + key + "'");
        }
    }
    validate(p);
    return p;
}

DeviceParams load_device(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("device: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return device_from_json_text(ss.str());
}

std::string device_to_json(const DeviceParams& p) {
    nlohmann::json j;
    for (const auto& [key, member] : hz_fields) j[key] = rad_to_hz(p.*member);
    for (const auto& [key, member] : plain_fields) j[key] = p.*member;
    return j.dump(2);
}

} // namespace fluxem
