#include <doctest.h>

#include <cmath>
#include <complex>

#include "fluxem/constants.hpp"
#include "fluxem/lindblad.hpp"
#include "fluxem/polariton.hpp"

#include "helpers.hpp"

using namespace fluxem;
using testutil::rel;

namespace {

LindbladConfig base_cfg() {
    LindbladConfig cfg;
    cfg.cavity_levels = 3;
    cfg.transmon_levels = 3;
    cfg.kappa = hz_to_rad(8.0e6);
    cfg.gamma_q = hz_to_rad(2.0e6);
    return cfg;
}

} // namespace

TEST_CASE("undriven zero-temperature steady state is the ground projector") {
    const DeviceParams p = testutil::make_device1();
    const double wq = transmon_frequency(p, 0.3);
    LindbladConfig cfg = base_cfg();
    const auto sol = lindblad_steady_state(p.omega_c, wq, p.alpha_T, p.J,
                                           p.omega_c, cfg);
    const int dim = cfg.cavity_levels * cfg.transmon_levels;
    REQUIRE(sol.rho.rows() == dim);
    CHECK(std::abs(sol.rho(0, 0).real() - 1.0) < 1e-10);
    CHECK(std::abs(sol.a_mean) < 1e-10);
    double off = 0.0;
    for (int i = 1; i < dim; ++i) off += std::abs(sol.rho(i, i));
    CHECK(off < 1e-10);
}

TEST_CASE("steady state is a density matrix") {
    const DeviceParams p = testutil::make_device1();
    const double wq = transmon_frequency(p, 0.32);
    LindbladConfig cfg = base_cfg();
    cfg.epsilon = hz_to_rad(1.0e6);
    cfg.n_th = 0.1;
    const auto sol = lindblad_steady_state(p.omega_c, wq, p.alpha_T, p.J,
                                           p.omega_c - hz_to_rad(2.0e6), cfg);
    CHECK(std::abs(sol.rho.trace().real() - 1.0) < 1e-9);
    CHECK(std::abs(sol.rho.trace().imag()) < 1e-12);
    CHECK((sol.rho - sol.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    // populations are non-negative
    for (int i = 0; i < sol.rho.rows(); ++i)
        CHECK(sol.rho(i, i).real() > -1e-12);
    CHECK(sol.rcond > 0.0);
}

TEST_CASE("decoupled driven cavity reproduces the Lorentzian response") {
    const DeviceParams p = testutil::make_device1();
    LindbladConfig cfg = base_cfg();
    cfg.cavity_levels = 4;
    cfg.transmon_levels = 2;
    cfg.epsilon = cfg.kappa / 20.0;
    const double wq = transmon_frequency(p, 0.3);
    for (int k = -3; k <= 3; ++k) {
        const double det = k * cfg.kappa / 2.0;
        const auto sol = lindblad_steady_state(p.omega_c, wq, p.alpha_T, 0.0,
                                               p.omega_c + det, cfg);
        const double expect = cfg.epsilon /
                              std::sqrt(det * det + cfg.kappa * cfg.kappa / 4.0);
        CHECK(rel(std::abs(sol.a_mean), expect) < 1e-2);
    }
}

TEST_CASE("thermal occupation obeys detailed balance on both ladders") {
    const DeviceParams p = testutil::make_device1();
    LindbladConfig cfg = base_cfg();
    cfg.cavity_levels = 4;
    cfg.transmon_levels = 4;
    cfg.n_th = 0.3;
    const double wq = transmon_frequency(p, 0.3);
    // no drive, no coupling: populations form a birth-death chain with the
    // geometric ratio n_th / (1 + n_th) per rung
    const auto sol = lindblad_steady_state(p.omega_c, wq, p.alpha_T, 0.0,
                                           p.omega_c, cfg);
    const int nc = cfg.cavity_levels, nq = cfg.transmon_levels;
    const double ratio = cfg.n_th / (1.0 + cfg.n_th);
    auto p_cav = [&](int n) {
        double s = 0.0;
        for (int q = 0; q < nq; ++q) s += sol.rho(n * nq + q, n * nq + q).real();
        return s;
    };
    auto p_tr = [&](int q) {
        double s = 0.0;
        for (int n = 0; n < nc; ++n) s += sol.rho(n * nq + q, n * nq + q).real();
        return s;
    };
    for (int n = 0; n + 2 < nc; ++n) // top rung feels the truncation
        CHECK(rel(p_cav(n + 1) / p_cav(n), ratio) < 1e-3);
    for (int q = 0; q + 2 < nq; ++q)
        CHECK(rel(p_tr(q + 1) / p_tr(q), ratio) < 1e-3);
}

TEST_CASE("transmission at the resonant flux shows the vacuum-split doublet") {
    const DeviceParams p = testutil::make_device1();
    // transmon tuned onto the cavity
    const double r = (p.omega_c + p.alpha_T) / (p.omega_q_max + p.alpha_T);
    const double phi = std::acos(r * r) / M_PI;

    LindbladConfig cfg = base_cfg();
    cfg.epsilon = cfg.kappa / 10.0;
    const int npts = 161;
    std::vector<double> grid(npts);
    for (int i = 0; i < npts; ++i)
        grid[i] = p.omega_c - 1.5 * p.J + 3.0 * p.J * i / (npts - 1);
    const auto trace = lindblad_transmission(p, phi, cfg, grid);
    REQUIRE(trace.response.size() == grid.size());

    std::vector<double> peaks;
    for (int i = 1; i + 1 < npts; ++i)
        if (trace.response[i] > trace.response[i - 1] &&
            trace.response[i] > trace.response[i + 1])
            peaks.push_back(trace.omega[i]);
    REQUIRE(peaks.size() == 2);
    const double split = peaks[1] - peaks[0];
    CHECK(std::abs(split - 2.0 * p.J) < cfg.kappa);
    // doublet centered on the bare cavity
    CHECK(std::abs(0.5 * (peaks[0] + peaks[1]) - p.omega_c) < cfg.kappa);
}

TEST_CASE("serial and parallel transmission agree bitwise") {
    const DeviceParams p = testutil::make_device1();
    LindbladConfig cfg = base_cfg();
    cfg.epsilon = cfg.kappa / 10.0;
    std::vector<double> grid;
    for (int i = 0; i < 24; ++i)
        grid.push_back(p.omega_c - p.J + 2.0 * p.J * i / 23.0);
    const auto serial = lindblad_transmission(p, 0.31, cfg, grid, ExecPolicy{false, 1});
    const auto par = lindblad_transmission(p, 0.31, cfg, grid, ExecPolicy{true, 0});
    REQUIRE(serial.response.size() == par.response.size());
    for (size_t i = 0; i < serial.response.size(); ++i)
        CHECK(serial.response[i] == par.response[i]);
}

TEST_CASE("configuration guards") {
    const DeviceParams p = testutil::make_device1();
    const double wq = transmon_frequency(p, 0.3);
    LindbladConfig cfg = base_cfg();
    cfg.cavity_levels = 5;
    cfg.transmon_levels = 5; // 25 > 16
    CHECK_THROWS_AS((void)lindblad_steady_state(p.omega_c, wq, p.alpha_T, p.J,
                                                p.omega_c, cfg),
                    config_error);
    cfg = base_cfg();
    cfg.kappa = -1.0;
    CHECK_THROWS_AS((void)lindblad_steady_state(p.omega_c, wq, p.alpha_T, p.J,
                                                p.omega_c, cfg),
                    config_error);
}
