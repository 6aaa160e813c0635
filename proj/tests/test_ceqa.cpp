#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fluxem/ceqa.hpp"
#include "fluxem/constants.hpp"

#include "helpers.hpp"

using namespace fluxem;
using testutil::rel;

namespace {

KerrModeConfig omit_cfg() {
    KerrModeConfig c;
    c.omega_plus = hz_to_rad(5.82e9);
    c.kerr = 0.0;
    c.kappa = hz_to_rad(50.0e3);
    c.kappa_ex = hz_to_rad(30.0e3);
    c.g = hz_to_rad(5.0e3);
    c.omega_m = hz_to_rad(3.97e6);
    c.gamma_m = hz_to_rad(6.0);
    return c;
}

// drive amplitude that lands the pump on occupation n at detuning -omega_m
// (the pull there is negligible for every config used here)
double eps_for_occupation(const KerrModeConfig& c, double n) {
    return std::sqrt(n * (c.omega_m * c.omega_m + 0.25 * c.kappa * c.kappa));
}

double outer_mean(const std::vector<double>& y) {
    const size_t edge = std::max<size_t>(1, y.size() / 20); // 5% per side
    double s = 0.0;
    for (size_t i = 0; i < edge; ++i) s += y[i] + y[y.size() - 1 - i];
    return s / (2.0 * edge);
}

// baseline-anchored profile: 0 at the wings, 1 at the extremum
std::vector<double> normalized_profile(const std::vector<double>& y) {
    const double ref = outer_mean(y);
    double ext = 0.0;
    for (double v : y) ext = std::max(ext, std::abs(v - ref));
    std::vector<double> p(y.size());
    for (size_t i = 0; i < y.size(); ++i) p[i] = std::abs(y[i] - ref) / ext;
    return p;
}

} // namespace

TEST_CASE("delta grid spans the requested window") {
    const double gm = hz_to_rad(6.0);
    const auto d = default_delta_grid(gm);
    CHECK(d.size() == 501);
    CHECK(d.front() == doctest::Approx(-40.0 * gm));
    CHECK(d.back() == doctest::Approx(40.0 * gm));
    CHECK(std::abs(d[250]) < 1e-9 * gm);
    const auto e = default_delta_grid(gm, 101, 10.0);
    CHECK(e.size() == 101);
    CHECK(e.front() == doctest::Approx(-10.0 * gm));
    CHECK_THROWS_AS(default_delta_grid(gm, 1), config_error);
}

TEST_CASE("probe response is linear in the probe amplitude") {
    const KerrModeConfig c = omit_cfg();
    PumpProbeConfig pp;
    pp.detuning = -c.omega_m;
    pp.epsilon_d = eps_for_occupation(c, 0.15);
    pp.epsilon_p = 1e-3 * pp.epsilon_d;
    const auto grid = default_delta_grid(c.gamma_m, 201, 10.0);

    auto r1 = weak_kerr_response(c, pp, grid);
    PumpProbeConfig pp2 = pp;
    pp2.epsilon_p /= 7.0;
    auto r2 = weak_kerr_response(c, pp2, grid);
    for (size_t i = 0; i < grid.size(); ++i) CHECK(rel(r1.s21[i], r2.s21[i]) < 1e-12);

    TlsConfig t;
    t.tilde_omega_q = hz_to_rad(5.9e9);
    t.gamma_q = hz_to_rad(1.0e6);
    t.g0 = hz_to_rad(300.0e3);
    t.omega_m = c.omega_m;
    t.gamma_m = c.gamma_m;
    auto s1 = tls_response(t, pp, grid);
    auto s2 = tls_response(t, pp2, grid);
    for (size_t i = 0; i < grid.size(); ++i) CHECK(rel(s1.s21[i], s2.s21[i]) < 1e-12);
}

TEST_CASE("decoupled linear mode reproduces the bare-cavity line exactly") {
    KerrModeConfig c = omit_cfg();
    c.g = 0.0;
    PumpProbeConfig pp;
    pp.detuning = -c.omega_m;
    pp.epsilon_d = eps_for_occupation(c, 0.15);
    pp.epsilon_p = 1e-3 * pp.epsilon_d;
    const auto grid = default_delta_grid(c.gamma_m, 201, 10.0);
    const auto r = weak_kerr_response(c, pp, grid);
    for (size_t i = 0; i < grid.size(); ++i) {
        const double env = c.kappa_ex / std::abs(std::complex<double>(0.5 * c.kappa, -grid[i]));
        CHECK(rel(r.s21[i], env) < 1e-12);
    }
}

TEST_CASE("both line shapes collapse to their undriven envelopes at weak pump") {
    const KerrModeConfig c = omit_cfg();
    PumpProbeConfig pp;
    pp.detuning = -c.omega_m;
    pp.epsilon_d = eps_for_occupation(c, 1e-12);
    pp.epsilon_p = 0.3 * pp.epsilon_d;
    const auto grid = default_delta_grid(c.gamma_m, 201, 10.0);

    const auto r = weak_kerr_response(c, pp, grid);
    CHECK_FALSE(r.ansatz_warning);
    for (size_t i = 0; i < grid.size(); ++i) {
        const double env = c.kappa_ex / std::abs(std::complex<double>(0.5 * c.kappa, -grid[i]));
        CHECK(rel(r.s21[i], env) < 1e-6);
    }

    TlsConfig t;
    t.tilde_omega_q = hz_to_rad(5.9e9);
    t.gamma_q = hz_to_rad(1.0e6);
    t.g0 = hz_to_rad(300.0e3);
    t.omega_m = c.omega_m;
    t.gamma_m = c.gamma_m;
    PumpProbeConfig tp = pp;
    tp.epsilon_d = 1e-5 * t.gamma_perp();
    tp.epsilon_p = 0.3 * tp.epsilon_d;
    const auto s = tls_response(t, tp, grid);
    for (size_t i = 0; i < grid.size(); ++i) {
        const double env = 1.0 / std::abs(std::complex<double>(t.gamma_perp(), -grid[i]));
        CHECK(rel(s.s21[i], env) < 1e-6);
    }
}

TEST_CASE("pump occupation reported by the response matches the steady-state cubic") {
    const KerrModeConfig c = omit_cfg();
    PumpProbeConfig pp;
    pp.detuning = -c.omega_m;
    pp.epsilon_d = eps_for_occupation(c, 0.15);
    pp.epsilon_p = 1e-3 * pp.epsilon_d;
    const auto r = weak_kerr_response(c, pp, default_delta_grid(c.gamma_m, 11, 1.0));
    DriveSpec d{pp.detuning, pp.epsilon_d};
    const auto& b = select_branch(steady_state(c, d), BranchPolicy::lowest_stable);
    CHECK(rel(r.n_pump, b.n) < 1e-12);
    CHECK(rel(r.n_pump, 0.15) < 1e-4); // the pull correction there is tiny
}

TEST_CASE("ansatz warning trips when the probe rivals the pump") {
    const KerrModeConfig c = omit_cfg();
    PumpProbeConfig pp;
    pp.detuning = -c.omega_m;
    pp.epsilon_d = eps_for_occupation(c, 0.15);
    pp.epsilon_p = 0.6 * pp.epsilon_d;
    const auto grid = default_delta_grid(c.gamma_m, 11, 1.0);
    CHECK(weak_kerr_response(c, pp, grid).ansatz_warning);
    pp.epsilon_p = 0.4 * pp.epsilon_d;
    CHECK_FALSE(weak_kerr_response(c, pp, grid).ansatz_warning);
    pp.epsilon_p = 0.0;
    CHECK_THROWS_AS(weak_kerr_response(c, pp, grid), config_error);
}

TEST_CASE("transparency window width follows the cooperativity law") {
    const KerrModeConfig c = omit_cfg();
    PumpProbeConfig pp;
    pp.detuning = -c.omega_m;
    pp.epsilon_d = eps_for_occupation(c, 0.15);
    pp.epsilon_p = 1e-3 * pp.epsilon_d;

    // the window is ~2 kHz wide inside a ~50 kHz cavity line: sample a grid
    // much wider than the window and divide out the cavity envelope
    const int npts = 16001;
    const auto grid = default_delta_grid(c.gamma_m, npts, 500.0);
    const auto r = weak_kerr_response(c, pp, grid);

    std::vector<double> y(npts);
    for (int i = 0; i < npts; ++i) {
        const double env = c.kappa_ex / std::abs(std::complex<double>(0.5 * c.kappa, -grid[i]));
        const double v = r.s21[i] / env;
        y[i] = v * v;
    }
    const double base = outer_mean(y);
    const auto it = std::min_element(y.begin(), y.end());
    const int imin = static_cast<int>(it - y.begin());
    const double level = 0.5 * (base + *it);
    auto cross = [&](int dir) {
        for (int i = imin; i > 0 && i < npts - 1; i += dir) {
            if ((y[i] - level) * (y[i + dir] - level) <= 0.0) {
                const double f = (level - y[i]) / (y[i + dir] - y[i]);
                return grid[i] + f * (grid[i + dir] - grid[i]);
            }
        }
        return grid[dir > 0 ? npts - 1 : 0];
    };
    const double width = cross(+1) - cross(-1);
    const double coop = 4.0 * c.g * c.g * r.n_pump / (c.kappa * c.gamma_m);
    CHECK(coop == doctest::Approx(50.0).epsilon(1e-3));
    CHECK(rel(width, c.gamma_m * (1.0 + coop)) < 0.01);
}

TEST_CASE("window center approaches the mode as the pump weakens") {
    KerrModeConfig c;
    c.omega_plus = hz_to_rad(5.82e9);
    c.kerr = 10.0 * hz_to_rad(1.0e6);
    c.kappa = hz_to_rad(1.0e6);
    c.kappa_ex = hz_to_rad(0.6e6);
    c.g = hz_to_rad(300.0e3);
    c.omega_m = hz_to_rad(3.97e6);
    c.gamma_m = hz_to_rad(6.0);

    TlsConfig t;
    t.tilde_omega_q = hz_to_rad(5.9e9);
    t.gamma_q = c.kappa;
    t.g0 = c.g;
    t.omega_m = c.omega_m;
    t.gamma_m = c.gamma_m;

    const double n = 1e-3;
    PumpProbeConfig pp;
    pp.detuning = -c.omega_m;
    pp.epsilon_d = eps_for_occupation(c, n);
    pp.epsilon_p = 1e-3 * pp.epsilon_d;
    const auto grid = default_delta_grid(c.gamma_m, 801, 10.0);

    for (const auto& resp : {weak_kerr_response(c, pp, grid), tls_response(t, pp, grid)}) {
        const double ref = outer_mean(resp.s21);
        size_t iext = 0;
        double best = -1.0;
        for (size_t i = 0; i < grid.size(); ++i) {
            const double dev = std::abs(resp.s21[i] - ref);
            if (dev > best) {
                best = dev;
                iext = i;
            }
        }
        CHECK(resp.s21[iext] < ref); // the feature is a dip
        CHECK(std::abs(grid[iext]) < c.gamma_m);
    }
}

TEST_CASE("anharmonic line shape walks from the soft model to the two-level one") {
    // raising K/kappa while holding the photon budget n ~ (kappa/K)^2 pushes
    // the branch into the blockaded regime where the TLS picture takes over
    KerrModeConfig c;
    c.omega_plus = hz_to_rad(5.82e9);
    c.kappa = hz_to_rad(1.0e6);
    c.kappa_ex = hz_to_rad(0.6e6);
    c.g = hz_to_rad(300.0e3);
    c.omega_m = hz_to_rad(3.97e6);
    c.gamma_m = hz_to_rad(6.0);

    TlsConfig t;
    t.tilde_omega_q = hz_to_rad(5.9e9);
    t.gamma_q = c.kappa;
    t.g0 = c.g;
    t.omega_m = c.omega_m;
    t.gamma_m = c.gamma_m;

    const auto grid = default_delta_grid(c.gamma_m, 801, 10.0);
    std::vector<double> devs;
    for (int k = 0; k < 4; ++k) {
        const double ratio = std::pow(10.0, 1.0 + k / 3.0);
        KerrModeConfig ck = c;
        ck.kerr = ratio * c.kappa;
        const double n = 0.1 / (ratio * ratio);
        PumpProbeConfig pp;
        pp.detuning = -c.omega_m;
        pp.epsilon_d = eps_for_occupation(ck, n);
        pp.epsilon_p = 1e-3 * pp.epsilon_d;

        const auto pw = normalized_profile(weak_kerr_response(ck, pp, grid).s21);
        const auto pt = normalized_profile(tls_response(t, pp, grid).s21);
        double dev = 0.0;
        for (size_t i = 0; i < grid.size(); ++i)
            dev = std::max(dev, std::abs(pw[i] - pt[i]));
        devs.push_back(dev);
    }
    for (size_t k = 0; k + 1 < devs.size(); ++k) CHECK(devs[k] > devs[k + 1]);
    CHECK(devs.front() > 0.01);
    CHECK(devs.back() < 0.01);
}

TEST_CASE("stationary two-level state follows the saturation formula") {
    TlsConfig t;
    t.tilde_omega_q = hz_to_rad(5.9e9);
    t.gamma_q = hz_to_rad(1.0e6);
    t.gamma_phi = 0.0;
    t.g0 = hz_to_rad(300.0e3);
    t.omega_m = hz_to_rad(3.97e6);
    t.gamma_m = hz_to_rad(6.0);
    const double gp = t.gamma_perp();
    CHECK(gp == doctest::Approx(0.5 * t.gamma_q));

    for (double det : {-t.omega_m, 0.0, 0.7 * t.omega_m}) {
        for (double ed : {0.01 * gp, gp, 40.0 * gp}) {
            const auto st = tls_statics(t, ed, det);
            const double expect = -(det * det + gp * gp) /
                                  (det * det + gp * gp + 2.0 * ed * ed);
            CHECK(rel(st.sz0, expect) < 1e-12);
            CHECK(st.sz0 <= 0.0);
            CHECK(st.sz0 >= -1.0);
            CHECK(rel(st.x0, -t.g0 * (st.sz0 + 1.0) / t.omega_m) < 1e-12);
            CHECK(st.delta_tilde == det); // approx_delta bookkeeping only
        }
    }

    // strong drive saturates toward sz0 = 0
    CHECK(tls_statics(t, 1e3 * gp, 0.0).sz0 > -1e-5);

    // self-consistent displaced detuning closes the fixed point
    TlsConfig t2 = t;
    t2.approx_delta = false;
    const auto st2 = tls_statics(t2, gp, -t.omega_m);
    CHECK(rel(st2.delta_tilde, -t.omega_m - t2.g0 * st2.x0) < 1e-12);
    CHECK(st2.delta_tilde != -t.omega_m);

    // excited population lands in n_pump
    PumpProbeConfig pp;
    pp.detuning = -t.omega_m;
    pp.epsilon_d = gp;
    pp.epsilon_p = 1e-3 * gp;
    const auto r = tls_response(t, pp, default_delta_grid(t.gamma_m, 11, 1.0));
    const auto st3 = tls_statics(t, pp.epsilon_d, pp.detuning);
    CHECK(rel(r.n_pump, 0.5 * (st3.sz0 + 1.0)) < 1e-12);
}

TEST_CASE("two-level configuration guards") {
    TlsConfig t;
    t.tilde_omega_q = hz_to_rad(5.9e9);
    t.gamma_q = hz_to_rad(1.0e6);
    t.g0 = hz_to_rad(300.0e3);
    t.omega_m = hz_to_rad(3.97e6);
    t.gamma_m = hz_to_rad(6.0);
    TlsConfig bad = t;
    bad.gamma_q = 0.0;
    CHECK_THROWS_AS(bad.check(), config_error);
    bad = t;
    bad.gamma_phi = -1.0;
    CHECK_THROWS_AS(bad.check(), config_error);
    bad = t;
    bad.g0 = -1.0;
    CHECK_THROWS_AS(bad.check(), config_error);
    bad = t;
    bad.tilde_omega_q = 0.0;
    CHECK_THROWS_AS(bad.check(), config_error);
}
