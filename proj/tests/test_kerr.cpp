#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "fluxem/constants.hpp"
#include "fluxem/cubic.hpp"
#include "fluxem/kerr_mode.hpp"

#include "helpers.hpp"

using namespace fluxem;
using testutil::rel;

namespace {

KerrModeConfig mode_cfg() {
    KerrModeConfig c;
    c.omega_plus = hz_to_rad(5.82e9);
    c.kerr = hz_to_rad(2.0e6);
    c.kappa = hz_to_rad(9.0e6);
    c.kappa_ex = hz_to_rad(6.0e6);
    c.g = hz_to_rad(45.0e3);
    c.omega_m = hz_to_rad(3.97e6);
    c.gamma_m = hz_to_rad(6.0);
    return c;
}

double eps_for(const KerrModeConfig& c, double detuning, double n) {
    const double C = c.kerr + 2.0 * c.g * c.g * c.omega_m /
                                  (c.omega_m * c.omega_m + c.gamma_m * c.gamma_m / 4.0);
    const double d = detuning + C * n;
    return std::sqrt(n * (d * d + c.kappa * c.kappa / 4.0));
}

} // namespace

TEST_CASE("steady-state roots satisfy the occupation cubic") {
    const KerrModeConfig c = mode_cfg();
    const double C = c.kerr + 2.0 * c.g * c.g * c.omega_m /
                                  (c.omega_m * c.omega_m + c.gamma_m * c.gamma_m / 4.0);
    for (double det_f : {-1.5, -0.3, 0.9}) {
        const double det = det_f * c.kappa;
        for (double eps_f : {0.2, 1.0, 3.0}) {
            const double eps = eps_f * c.kappa;
            DriveSpec d{det, eps};
            const auto branches = steady_state(c, d);
            REQUIRE(!branches.empty());
            double prev = -1.0;
            for (const auto& b : branches) {
                const double dd = det + C * b.n;
                const double res = b.n * (dd * dd + c.kappa * c.kappa / 4.0) - eps * eps;
                CHECK(std::abs(res) < 1e-9 * eps * eps);
                CHECK(b.n > prev); // ascending
                prev = b.n;
                // amplitude consistency: n = |alpha|^2
                CHECK(rel(std::norm(b.alpha), b.n) < 1e-9);
            }
        }
    }
}

TEST_CASE("bistability appears exactly where the cubic discriminant allows") {
    KerrModeConfig c = mode_cfg();
    c.g = 0.0; // pure Kerr: C = K
    // the fold needs detuning below -sqrt(3) kappa / 2 with our pull-down sign
    const double det = -2.0 * c.kappa;
    std::vector<int> count;
    for (double eps_f = 0.2; eps_f < 4.0; eps_f += 0.05) {
        DriveSpec d{det, eps_f * c.kappa};
        count.push_back(static_cast<int>(steady_state(c, d).size()));
    }
    // 1 -> 3 -> 1 as the drive sweeps through the fold
    CHECK(count.front() == 1);
    CHECK(count.back() == 1);
    CHECK(*std::max_element(count.begin(), count.end()) == 3);

    // above-threshold detuning never folds
    DriveSpec d{+0.5 * c.kappa, 2.0 * c.kappa};
    CHECK(steady_state(c, d).size() == 1);
}

TEST_CASE("middle branch of a bistable solution is electromagnetically unstable") {
    KerrModeConfig c = mode_cfg();
    c.g = 0.0;
    DriveSpec d{-2.0 * c.kappa, 2.0 * c.kappa};
    const auto branches = steady_state(c, d);
    REQUIRE(branches.size() == 3);
    CHECK(branches[0].em_stable);
    CHECK_FALSE(branches[1].em_stable);
    CHECK(branches[2].em_stable);

    CHECK(&select_branch(branches, BranchPolicy::lowest_stable) == &branches[0]);
    CHECK(&select_branch(branches, BranchPolicy::highest_stable) == &branches[2]);
    CHECK(&select_branch(branches, BranchPolicy::lowest) == &branches[0]);
}

TEST_CASE("drive amplitude from power interprets the attenuation constant") {
    const double atten = 17444.0;
    const double w = hz_to_rad(5.884e9);
    const DriveSpec d = drive_from_power(-60.0, w - hz_to_rad(3.97e6), w, atten);
    // -60 dBm = 1e-9 W
    const double expect = std::sqrt(1.0e-9 / (hbar * (w - hz_to_rad(3.97e6)) * atten));
    CHECK(rel(d.epsilon, expect) < 1e-12);
    CHECK(d.detuning == doctest::Approx(-hz_to_rad(3.97e6)));
    // round trip back to dBm
    CHECK(rel(power_from_epsilon(d.epsilon, w - hz_to_rad(3.97e6), atten), -60.0) < 1e-9);
}

TEST_CASE("self-energy obeys the sideband reflection identity") {
    const KerrModeConfig c = mode_cfg();
    DriveSpec d{0.8 * c.omega_m, eps_for(c, 0.8 * c.omega_m, 0.02)};
    const auto branches = steady_state(c, d);
    const auto& b = select_branch(branches, BranchPolicy::lowest_stable);
    for (double wf : {0.13, 0.5, 1.0, 2.7}) {
        const double w = wf * c.omega_m;
        const auto sp = self_energy(c, d, b, w);
        const auto sm = self_energy(c, d, b, -w);
        CHECK(std::abs(sm.sigma + std::conj(sp.sigma)) < 1e-12 * std::abs(sp.sigma));
    }
}

TEST_CASE("linear-mode self-energy reduces to the two-Lorentzian difference") {
    KerrModeConfig c = mode_cfg();
    c.kerr = 0.0;
    for (double det_f : {-1.0, 0.8}) {
        const double det = det_f * c.omega_m;
        DriveSpec d{det, eps_for(c, det, 0.02)};
        const auto branches = steady_state(c, d);
        const auto& b = select_branch(branches, BranchPolicy::lowest_stable);
        auto L = [&](double x) { return 1.0 / (x * x + c.kappa * c.kappa / 4.0); };
        for (double wf : {0.5, 1.0, 1.9}) {
            const double w = wf * c.omega_m;
            const auto s = self_energy(c, d, b, w);
            const double oracle = c.g * c.g * b.n * c.kappa *
                                  (L(s.delta_tilde + w) - L(s.delta_tilde - w));
            CHECK(rel(2.0 * s.sigma.real(), oracle) < 1e-9);
        }
    }
}

TEST_CASE("occupation-parametrized and drive-parametrized self-energy agree") {
    const KerrModeConfig c = mode_cfg();
    const double det = 0.9 * c.omega_m;
    DriveSpec d{det, eps_for(c, det, 0.01)};
    const auto branches = steady_state(c, d);
    const auto& b = select_branch(branches, BranchPolicy::lowest_stable);
    const auto s1 = self_energy(c, d, b, c.omega_m);
    const auto s2 = self_energy_at_occupation(c, det, b.n, c.omega_m);
    CHECK(rel(s1.sigma.real(), s2.sigma.real()) < 1e-6);
    CHECK(rel(s1.sigma.imag(), s2.sigma.imag()) < 1e-6);
}

TEST_CASE("branch sweep follows one branch and flags the fold") {
    KerrModeConfig c = mode_cfg();
    c.g = 0.0;
    const double det = -2.0 * c.kappa;
    std::vector<double> epsilons;
    for (int i = 0; i <= 120; ++i)
        epsilons.push_back((0.2 + (3.0 - 0.2) * i / 120.0) * c.kappa);
    const auto sweep = branch_sweep(c, det, epsilons);
    REQUIRE(sweep.size() == epsilons.size());
    int folds = 0;
    double prev_n = 0.0;
    for (const auto& pt : sweep) {
        if (pt.fold) ++folds;
        if (!pt.fold) {
            CHECK(pt.branch.n >= prev_n); // continuation is monotone in drive here
            prev_n = pt.branch.n;
        }
    }
    CHECK(folds >= 1); // the followed lower branch terminates at the fold
}

TEST_CASE("minimum threshold occupation lands on the frozen reference values") {
    KerrModeConfig c = mode_cfg();
    c.kappa_ex = 0.0;

    SUBCASE("linear mode") {
        KerrModeConfig c0 = c;
        c0.kerr = 0.0;
        const auto [det, n] = min_threshold_occupation(c0, 0.05 * c.omega_m,
                                                       4.0 * c.omega_m, 400, 1.0);
        CHECK(rel(n, 8.6951e-3) < 1e-3);
        CHECK(rel(det, 1.1068 * c.omega_m) < 1e-3);
    }

    SUBCASE("stronger coupling needs fewer photons") {
        KerrModeConfig cg = c;
        cg.g = hz_to_rad(160.0e3);
        const auto [det, n] = min_threshold_occupation(cg, 0.05 * c.omega_m,
                                                       4.0 * c.omega_m, 400, 1.0);
        CHECK(rel(n, 6.8801e-4) < 1e-3);
        const auto [det45, n45] = min_threshold_occupation(c, 0.05 * c.omega_m,
                                                           4.0 * c.omega_m, 400, 1.0);
        CHECK(n < n45);
    }

    SUBCASE("the Kerr pull moves the optimal bare detuning down") {
        KerrModeConfig c0 = c;
        c0.kerr = 0.0;
        const auto [detK, nK] = min_threshold_occupation(c, 0.05 * c.omega_m,
                                                         4.0 * c.omega_m, 400, 1.0);
        const auto [det0, n0] = min_threshold_occupation(c0, 0.05 * c.omega_m,
                                                         4.0 * c.omega_m, 400, 1.0);
        CHECK(detK < det0);
    }

    SUBCASE("red detunings never destabilize a linear mode") {
        // with Kerr the pull can drag a red drive into the blue at high n, so
        // probe the sign question at K = 0 where the detuning stays put
        KerrModeConfig c0 = c;
        c0.kerr = 0.0;
        CHECK_FALSE(threshold_occupation(c0, -c.omega_m, 1.0).has_value());
    }
}

TEST_CASE("instability crossings bracket the dense-scan sign changes") {
    KerrModeConfig c = mode_cfg();
    c.kappa_ex = 0.0;
    const double n_probe = 0.02;
    const double eps = eps_for(c, c.omega_m, n_probe); // representative drive
    const double lo = 0.05 * c.omega_m, hi = 4.0 * c.omega_m;
    const auto cross = instability_crossings(c, eps, lo, hi, 800);

    // dense rescan of the same quantity
    auto gamma_eff = [&](double det) {
        DriveSpec d{det, eps};
        const auto branches = steady_state(c, d);
        const auto& b = select_branch(branches, BranchPolicy::lowest_stable);
        return c.gamma_m + 2.0 * self_energy(c, d, b, c.omega_m).sigma.real();
    };
    int sign_changes = 0;
    double prev = gamma_eff(lo);
    for (int i = 1; i <= 4000; ++i) {
        const double det = lo + (hi - lo) * i / 4000.0;
        const double cur = gamma_eff(det);
        if ((prev < 0.0) != (cur < 0.0)) ++sign_changes;
        prev = cur;
    }
    CHECK(cross.size() == static_cast<size_t>(sign_changes));
    for (size_t k = 0; k + 1 < cross.size(); ++k) CHECK(cross[k] < cross[k + 1]);
    // each crossing really straddles a sign change
    for (double x : cross)
        CHECK(gamma_eff(x - two_pi * 5e3) * gamma_eff(x + two_pi * 5e3) <= 0.0);
}

TEST_CASE("backaction map is identical under serial and parallel execution") {
    const KerrModeConfig c = mode_cfg();
    std::vector<double> powers, dets;
    for (int i = 0; i < 12; ++i) powers.push_back(-70.0 + 2.5 * i);
    for (int j = 0; j < 15; ++j) dets.push_back((0.3 + 0.2 * j) * c.omega_m);
    const auto serial = backaction_map(c, 17444.0, powers, dets,
                                       BranchPolicy::lowest_stable, ExecPolicy{false, 1});
    const auto par = backaction_map(c, 17444.0, powers, dets,
                                    BranchPolicy::lowest_stable, ExecPolicy{true, 0});
    REQUIRE(serial.points.size() == par.points.size());
    for (size_t i = 0; i < serial.points.size(); ++i) {
        CHECK(serial.points[i].n == par.points[i].n);
        CHECK(serial.points[i].gamma_eff == par.points[i].gamma_eff);
        CHECK(serial.points[i].spring == par.points[i].spring);
        CHECK(serial.points[i].em_stable == par.points[i].em_stable);
    }
}

TEST_CASE("backaction map rows and columns line up with the requested grids") {
    const KerrModeConfig c = mode_cfg();
    std::vector<double> powers{-60.0, -50.0};
    std::vector<double> dets{0.5 * c.omega_m, c.omega_m, 1.5 * c.omega_m};
    const auto m = backaction_map(c, 17444.0, powers, dets);
    REQUIRE(m.points.size() == powers.size() * dets.size());
    for (size_t r = 0; r < powers.size(); ++r)
        for (size_t k = 0; k < dets.size(); ++k) {
            const auto& pt = m.points[r * dets.size() + k];
            CHECK(pt.power_dbm == powers[r]);
            CHECK(pt.detuning == dets[k]);
            CHECK(pt.ok);
            CHECK(pt.n > 0.0);
        }
    // more power, more photons, row by row
    for (size_t k = 0; k < dets.size(); ++k)
        CHECK(m.points[dets.size() + k].n > m.points[k].n);
}

TEST_CASE("configuration guards reject unphysical modes") {
    KerrModeConfig c = mode_cfg();
    c.kerr = -1.0;
    CHECK_THROWS_AS(c.check(), config_error);
    c = mode_cfg();
    c.kappa = 0.0;
    CHECK_THROWS_AS(c.check(), config_error);
    c = mode_cfg();
    c.kappa_ex = 2.0 * c.kappa;
    CHECK_THROWS_AS(c.check(), config_error);
    c = mode_cfg();
    c.omega_m = 0.0;
    CHECK_THROWS_AS(c.check(), config_error);
}
