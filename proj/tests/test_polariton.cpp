#include <doctest.h>

#include <cmath>

#include "fluxem/constants.hpp"
#include "fluxem/cubic.hpp"
#include "fluxem/polariton.hpp"

#include "helpers.hpp"

using namespace fluxem;
using testutil::rel;

namespace {

// flux where the transmon crosses the bare cavity: cos(pi phi) =
// ((omega_c + alpha)/(omega_q_max + alpha))^2
double resonance_flux(const DeviceParams& p) {
    const double r = (p.omega_c + p.alpha_T) / (p.omega_q_max + p.alpha_T);
    return std::acos(r * r) / M_PI;
}

double dwq_dphi(const DeviceParams& p, double phi) {
    const double c = std::cos(M_PI * phi);
    return -(p.omega_q_max + p.alpha_T) * M_PI * std::sin(M_PI * phi) /
           (2.0 * std::sqrt(std::abs(c)));
}

} // namespace

TEST_CASE("one-excitation block matches the closed-form 2x2 eigenvalues") {
    const DeviceParams p = testutil::make_device1();
    for (double phi : {0.15, 0.25, 0.3, 0.32}) {
        const double wq = transmon_frequency(p, phi);
        const double mid = 0.5 * (wq + p.omega_c);
        const double half = std::sqrt(0.25 * (wq - p.omega_c) * (wq - p.omega_c) +
                                      p.J * p.J);
        const auto s = diagonalize(build_hamiltonian(p, phi));
        CHECK(rel(s.energy[1], mid - half) < 1e-12);
        CHECK(rel(s.energy[2], mid + half) < 1e-12);
    }
}

TEST_CASE("two-excitation block matches the characteristic-cubic roots") {
    const DeviceParams p = testutil::make_device1();
    for (double phi : {0.2, 0.3, 0.34}) {
        const double wq = transmon_frequency(p, phi);
        // block diag {2(wq - alpha), wc + wq, 2 wc}, couplings sqrt(2) J on the
        // off-diagonals adjacent to the middle state
        // center the block and work in GHz-scale units: raw rad/s invariants
        // span enough decades to defeat the solver's conditioning
        const double u = hz_to_rad(1.0e9);
        const double s0 = (2.0 * (wq - p.alpha_T) + (p.omega_c + wq) +
                           2.0 * p.omega_c) / 3.0;
        const double a = (2.0 * (wq - p.alpha_T) - s0) / u;
        const double b = (p.omega_c + wq - s0) / u;
        const double c = (2.0 * p.omega_c - s0) / u;
        const double j2 = 2.0 * (p.J / u) * (p.J / u); // (sqrt(2) J)^2
        // det(H' - x) = 0 expanded through the standard invariants
        const double tr = a + b + c;
        const double m2 = a * b + b * c + a * c - 2.0 * j2;
        const double det = a * b * c - j2 * (a + c);
        const auto roots = solve_real_cubic(-1.0, tr, -m2, det);
        REQUIRE(roots.size() == 3);
        const auto s = diagonalize(build_hamiltonian(p, phi));
        for (int k = 0; k < 3; ++k)
            CHECK(rel(s.energy[3 + k], roots[k] * u + s0) < 1e-11);
    }
}

TEST_CASE("vacuum splitting at the resonant flux equals 2J") {
    const DeviceParams p = testutil::make_device1();
    const double phi = resonance_flux(p);
    const auto s = diagonalize(build_hamiltonian(p, phi));
    CHECK(rel(s.energy[2] - s.energy[1], 2.0 * p.J) < 1e-9);

    const DeviceParams p2 = testutil::make_device2();
    const auto s2 = diagonalize(build_hamiltonian(p2, resonance_flux(p2)));
    CHECK(rel(s2.energy[2] - s2.energy[1], 2.0 * p2.J) < 1e-9);
}

TEST_CASE("transition frequencies are the right energy differences") {
    const DeviceParams p = testutil::make_device2();
    auto s = diagonalize(build_hamiltonian(p, 0.334));
    transition_frequencies(s);
    CHECK(s.transition[int(Transition::lower)] == doctest::Approx(s.energy[1]));
    CHECK(s.transition[int(Transition::upper)] == doctest::Approx(s.energy[2]));
    CHECK(s.transition[int(Transition::lower_alpha)] ==
          doctest::Approx(s.energy[3] - s.energy[1]));
    CHECK(s.transition[int(Transition::lower_beta)] ==
          doctest::Approx(s.energy[4] - s.energy[1]));
    CHECK(s.transition[int(Transition::upper_gamma)] ==
          doctest::Approx(s.energy[5] - s.energy[2]));
    CHECK(s.transition[int(Transition::gamma_half)] ==
          doctest::Approx(0.5 * s.energy[5]));
}

TEST_CASE("flux responsivity agrees with the eigenvector derivative") {
    // dE_i/dphi = <v_i| dH/dphi |v_i>; dH/dphi only touches the transmon
    // diagonal with weights {0, 1, 0, 2, 1, 0}
    const DeviceParams p = testutil::make_device1();
    for (double phi : {0.2, 0.287388, 0.32}) {
        const double dwq = dwq_dphi(p, phi);
        const auto s = diagonalize(build_hamiltonian(p, phi));
        std::array<double, 6> de{};
        const double w[6] = {0.0, 1.0, 0.0, 2.0, 1.0, 0.0};
        for (int i = 0; i < 6; ++i) {
            double sum = 0.0;
            for (int k = 0; k < 6; ++k)
                sum += w[k] * s.states(k, i) * s.states(k, i);
            de[i] = dwq * sum;
        }
        const auto G = flux_responsivity(p, phi);
        CHECK(rel(G[int(Transition::lower)], de[1]) < 1e-6);
        CHECK(rel(G[int(Transition::upper)], de[2]) < 1e-6);
        CHECK(rel(G[int(Transition::lower_alpha)], de[3] - de[1]) < 1e-6);
        CHECK(rel(G[int(Transition::lower_beta)], de[4] - de[1]) < 1e-6);
        CHECK(rel(G[int(Transition::upper_gamma)], de[5] - de[2]) < 1e-6);
        CHECK(rel(G[int(Transition::gamma_half)], 0.5 * de[5]) < 1e-6);
    }
}

TEST_CASE("responsivity vanishes at the sweet spot and diverges at half flux") {
    const DeviceParams p = testutil::make_device1();
    const auto G0 = flux_responsivity(p, 0.0);
    for (double g : G0) CHECK(std::abs(g) < 1.0); // rad/s per flux quantum
    CHECK_THROWS_AS((void)flux_responsivity(p, 0.5), numerical_error);
}

TEST_CASE("coupling is linear in field, length, and participation") {
    const DeviceParams p = testutil::make_device1();
    const auto G = flux_responsivity(p, 0.3);
    FluxPoint fp{0.3, 0.1, 0.0};
    const auto g1 = coupling_g(p, fp, G);

    FluxPoint fp2 = fp;
    fp2.b_par = 0.2;
    const auto g2 = coupling_g(p, fp2, G);
    for (int i = 0; i < 6; ++i) CHECK(rel(g2[i], 2.0 * g1[i]) < 1e-12);

    DeviceParams ph = p;
    ph.xi = 0.5;
    const auto gh = coupling_g(ph, fp, flux_responsivity(ph, 0.3));
    for (int i = 0; i < 6; ++i) CHECK(rel(gh[i], 0.5 * g1[i]) < 1e-12);

    DeviceParams pl = p;
    pl.length_l = 2.0 * p.length_l;
    const auto gl = coupling_g(pl, fp, flux_responsivity(pl, 0.3));
    for (int i = 0; i < 6; ++i) CHECK(rel(gl[i], 2.0 * g1[i]) < 1e-12);
}

TEST_CASE("zero-point motion of the device-1 beam") {
    const DeviceParams p = testutil::make_device1();
    CHECK(rel(zero_point_motion(p),
              std::sqrt(hbar / (2.0 * p.mass * p.omega_m))) < 1e-12);
    CHECK(zero_point_motion(p) == doctest::Approx(5.309e-14).epsilon(1e-3));
}

TEST_CASE("flux_for_transition inverts the branch frequency") {
    const DeviceParams p = testutil::make_device1();
    const double target = hz_to_rad(5.884e9);
    const double phi = flux_for_transition(p, Transition::upper, target);
    auto s = diagonalize(build_hamiltonian(p, phi));
    transition_frequencies(s);
    CHECK(rel(s.transition[int(Transition::upper)], target) < 1e-10);
    // far above the reachable branch top there is nothing to bracket
    CHECK_THROWS_AS((void)flux_for_transition(p, Transition::upper, hz_to_rad(30.0e9)),
                    numerical_error);
}

TEST_CASE("a known coupling rescales through the responsivity ratio") {
    const DeviceParams p = testutil::make_device1();
    const double phi_ref = flux_for_transition(p, Transition::upper, hz_to_rad(5.884e9));
    const double phi_new = flux_for_transition(p, Transition::upper, hz_to_rad(5.873e9));
    const double G_ref = flux_responsivity(p, phi_ref)[int(Transition::upper)];
    const double G_new = flux_responsivity(p, phi_new)[int(Transition::upper)];
    // 23.1 kHz calibrated at 5.884 GHz predicts the 13.4 +- 0.8 kHz point
    const double g_new = scale_known_g(hz_to_rad(23.1e3), G_ref, G_new);
    CHECK(rad_to_hz(g_new) > 12.6e3);
    CHECK(rad_to_hz(g_new) < 14.2e3);
    CHECK(rel(g_new, hz_to_rad(23.1e3) * (G_new / G_ref)) < 1e-12);
}

TEST_CASE("branch Kerr from the ladder defect") {
    const DeviceParams p = testutil::make_device1();

    SUBCASE("transmon-like limit recovers the bare anharmonicity") {
        // J -> 0 with omega_q above the cavity: upper branch is the transmon
        const double wq = p.omega_c + hz_to_rad(500.0e6);
        const auto k = polariton_kerr(p.omega_c, wq, p.alpha_T, hz_to_rad(1.0), Branch::upper);
        CHECK(rel(k.kerr, p.alpha_T) < 1e-6);
        const auto kc = polariton_kerr(p.omega_c, wq, p.alpha_T, hz_to_rad(1.0), Branch::lower);
        CHECK(std::abs(kc.kerr) < 1e-6 * p.alpha_T);
    }

    SUBCASE("depends only on detuning, not on the absolute frequencies") {
        const double wq = transmon_frequency(p, 0.3);
        const double shift = hz_to_rad(1.0e9);
        const auto k1 = polariton_kerr(p.omega_c, wq, p.alpha_T, p.J, Branch::upper);
        const auto k2 = polariton_kerr(p.omega_c + shift, wq + shift, p.alpha_T, p.J,
                                       Branch::upper);
        CHECK(rel(k1.kerr, k2.kerr) < 1e-9);
    }

    SUBCASE("device estimate is positive with converged truncation") {
        const auto k = kerr_estimate(p, 0.287388);
        CHECK(k.kerr > 0.0);
        CHECK(std::abs(k.truncation_shift) < 1e-6);
        CHECK_FALSE(k.truncation_warning);
        const auto k5 = kerr_estimate(p, 0.287388, Branch::upper, 5);
        CHECK(rel(k.kerr, k5.kerr) < 1e-6);
    }
}

TEST_CASE("spectrum_at assembles couplings and Kerr once") {
    const DeviceParams p = testutil::make_device1();
    FluxPoint fp{0.287388, 0.1, 0.0};
    const auto s = spectrum_at(p, fp);
    const auto G = flux_responsivity(p, fp.phi_ratio);
    const auto g = coupling_g(p, fp, G);
    for (int i = 0; i < 6; ++i) {
        CHECK(rel(s.responsivity[i], G[i]) < 1e-12);
        CHECK(rel(s.coupling[i], g[i]) < 1e-12);
    }
    CHECK(rel(s.kerr_upper, kerr_estimate(p, fp.phi_ratio).kerr) < 1e-12);
}

TEST_CASE("label tracking survives an avoided crossing") {
    const DeviceParams p = testutil::make_device1();
    std::vector<PolaritonSpectrum> sweep;
    for (int i = 0; i <= 80; ++i)
        sweep.push_back(diagonalize(build_hamiltonian(p, 0.20 + 0.14 * i / 80.0)));
    const auto labels = track_labels(sweep);
    REQUIRE(labels.size() == sweep.size());
    // permutations stay permutations
    for (const auto& perm : labels) {
        std::array<bool, 6> seen{};
        for (int v : perm) {
            REQUIRE(v >= 0);
            REQUIRE(v < 6);
            CHECK_FALSE(seen[v]);
            seen[v] = true;
        }
    }
    // the first point is the identity by construction
    for (int i = 0; i < 6; ++i) CHECK(labels.front()[i] == i);
}

TEST_CASE("device validation rejects inconsistent parameters") {
    DeviceParams p = testutil::make_device1();
    CHECK_NOTHROW(validate(p));

    DeviceParams bad = p;
    bad.omega_c = -1.0;
    CHECK_THROWS_AS(validate(bad), config_error);

    bad = p;
    bad.xi = 1.5;
    CHECK_THROWS_AS(validate(bad), config_error);

    bad = p;
    bad.kappa_e = -1.0;
    CHECK_THROWS_AS(validate(bad), config_error);

    bad = p;
    // all three components present but not adding up to kappa_b
    bad.kappa_in = 0.5 * p.kappa_b;
    bad.kappa_e = 0.5 * p.kappa_b;
    bad.kappa_0 = 0.5 * p.kappa_b;
    CHECK_THROWS_AS(validate(bad), config_error);
}
