#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "fluxem/constants.hpp"
#include "fluxem/device.hpp"

namespace testutil {

inline double rel(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

inline fluxem::DeviceParams make_device1() {
    using fluxem::hz_to_rad;
    fluxem::DeviceParams p;
    p.omega_c = hz_to_rad(5.846e9);
    p.kappa_b = hz_to_rad(8.0e6);
    p.kappa_e = hz_to_rad(6.2e6);
    p.omega_q_max = hz_to_rad(7.38e9);
    p.J = hz_to_rad(72.0e6);
    p.alpha_T = hz_to_rad(284.0e6);
    p.omega_m = hz_to_rad(3.97e6);
    p.gamma_m = hz_to_rad(6.0);
    p.mass = 7.5e-16;
    p.length_l = 40.0e-6;
    p.atten_product = 17444.0;
    p.gain_dB = 58.5;
    p.xi = 1.0;
    return p;
}

inline fluxem::DeviceParams make_device2() {
    using fluxem::hz_to_rad;
    fluxem::DeviceParams p;
    p.omega_c = hz_to_rad(5.744e9);
    p.kappa_b = hz_to_rad(8.0e6);
    p.omega_q_max = hz_to_rad(8.26e9);
    p.J = hz_to_rad(193.0e6);
    p.alpha_T = hz_to_rad(300.0e6);
    p.omega_m = hz_to_rad(3.97e6);
    p.gamma_m = hz_to_rad(6.0);
    p.mass = 7.5e-16;
    p.length_l = 40.0e-6;
    p.atten_product = 1647.0;
    p.gain_dB = 64.3;
    p.xi = 1.0;
    return p;
}

// self-deleting scratch directory for runs that write files
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag = "fluxem_test") {
        static std::mt19937_64 rng{std::random_device{}()};
        path = std::filesystem::temp_directory_path() /
               (tag + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

inline void spit(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs the CLI binary named by FLUXEM_CLI with the given argument string.
inline CliResult run_cli(const std::string& args) {
    const char* bin = std::getenv("FLUXEM_CLI");
    CliResult r;
    if (!bin) return r;
    TempDir cap("fluxem_cli_io");
    const std::string cmd = std::string("\"") + bin + "\" " + args + " >" +
                            cap.file("out") + " 2>" + cap.file("err");
    const int status = std::system(cmd.c_str());
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(cap.file("out"));
    r.err = slurp(cap.file("err"));
    return r;
}

inline std::string config_dir() {
    const char* d = std::getenv("FLUXEM_CONFIG_DIR");
    return d ? d : "configs";
}

} // namespace testutil
