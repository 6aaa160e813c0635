#include "fluxem/polariton_tls.hpp"

#include <algorithm>
#include <cmath>

#include "fluxem/constants.hpp"
#include "fluxem/kerr_mode.hpp"

namespace fluxem {

std::vector<TransitionTls> enumerate_transitions(const PolaritonSpectrum& sp,
                                                 const ThermalWeights& w) {
    // rates read off the transmission linewidths; higher transitions broader
    static constexpr double decay_mhz[4] = {10.0, 10.0, 18.0, 14.0};
    static constexpr double dephase_mhz[4] = {4.0, 4.0, 8.0, 9.0};
    static constexpr Transition labels[4] = {Transition::lower, Transition::upper,
                                             Transition::lower_alpha,
                                             Transition::lower_beta};
    std::vector<TransitionTls> out(4);
    for (int i = 0; i < 4; ++i) {
        TransitionTls& t = out[i];
        t.label = labels[i];
        const int k = static_cast<int>(labels[i]);
        t.omega = sp.transition[k];
        // responsivity signs flip between branches; only the magnitude
        // matters for the longitudinal coupling (u -> -u gauge)
        t.g = std::abs(sp.coupling[k]);
        t.gamma = two_pi * decay_mhz[i] * 1e6;
        t.gamma_phi = two_pi * dephase_mhz[i] * 1e6;
        // weight of the transition's lower eigenstate: the single-excitation
        // pair starts from the ground state, the higher pair from the lower
        // polariton
        t.thermal_weight = (i < 2) ? w.ground : w.minus;
    }
    return out;
}

namespace {

void check_inputs(const TransitionTls& t, const MechMode& mech, double epsilon) {
    if (!(t.gamma > 0.0)) throw config_error("tls transition: gamma must be positive");
    if (t.gamma_phi < 0.0) throw config_error("tls transition: gamma_phi must be >= 0");
    if (t.g < 0.0) throw config_error("tls transition: g must be >= 0");
    if (!(mech.omega_m > 0.0))
        throw config_error("tls transition: omega_m must be positive");
    if (!(mech.gamma_m > 0.0))
        throw config_error("tls transition: gamma_m must be positive");
    if (epsilon < 0.0) throw config_error("tls transition: epsilon must be >= 0");
}

double beam_stiffness(const MechMode& mech) {
    return mech.omega_m + mech.gamma_m * mech.gamma_m / (4.0 * mech.omega_m);
}

// steady-state condition reduced to a cubic in s; positive where f_q' < 0
double scalar_eq(const TransitionTls& t, const MechMode& mech, double detuning,
                 double epsilon, double s) {
    const double gp = t.gamma_perp();
    const double theta = detuning + t.g * t.g * (s + 1.0) / beam_stiffness(mech);
    return t.gamma * (s + 1.0) * (theta * theta + gp * gp) +
           4.0 * epsilon * epsilon * gp * s;
}

TlsFixedPoint back_substitute(const TransitionTls& t, const MechMode& mech,
                              double detuning, double epsilon, double s) {
    TlsFixedPoint st;
    st.s = s;
    st.q_prime = t.gamma * (s + 1.0) / (4.0 * epsilon);
    st.u = -0.5 * t.g * (s + 1.0) / beam_stiffness(mech);
    st.v = -0.25 * t.g * mech.gamma_m / mech.omega_m * (s + 1.0) / beam_stiffness(mech);
    st.p_prime = st.q_prime * (detuning - 2.0 * t.g * st.u) / t.gamma_perp();
    return st;
}

} // namespace

std::array<double, 5> tls_flow(const TransitionTls& t, const MechMode& mech,
                               double detuning, double epsilon,
                               const TlsFixedPoint& st) {
    const double gp = t.gamma_perp();
    const double theta = detuning - 2.0 * t.g * st.u;
    return {
        -t.gamma * (st.s + 1.0) + 4.0 * epsilon * st.q_prime,
        -gp * st.p_prime + theta * st.q_prime,
        -theta * st.p_prime - gp * st.q_prime - epsilon * st.s,
        -0.5 * mech.gamma_m * st.u + mech.omega_m * st.v,
        -mech.omega_m * st.u - 0.5 * mech.gamma_m * st.v - 0.5 * t.g * (st.s + 1.0),
    };
}

std::vector<TlsFixedPoint> tls_fixed_points(const TransitionTls& t, const MechMode& mech,
                                            double detuning, double epsilon,
                                            int scan_points) {
    check_inputs(t, mech, epsilon);
    if (scan_points < 8) throw config_error("tls transition: scan_points too small");
    if (epsilon == 0.0) return {TlsFixedPoint{}}; // undriven ground state

    std::vector<double> roots;
    double prev_s = -1.0;
    double prev_h = scalar_eq(t, mech, detuning, epsilon, -1.0); // = -4 eps^2 gp < 0
    for (int i = 1; i <= scan_points; ++i) {
        const double s = -1.0 + static_cast<double>(i) / scan_points;
        const double h = scalar_eq(t, mech, detuning, epsilon, s);
        if (prev_h == 0.0) {
            roots.push_back(prev_s);
        } else if ((prev_h < 0.0) != (h < 0.0)) {
            double lo = prev_s, hi = s, flo = prev_h;
            for (int it = 0; it < 120 && hi - lo > 1e-16; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = scalar_eq(t, mech, detuning, epsilon, mid);
                if (fm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_s = s;
        prev_h = h;
    }
    if (scalar_eq(t, mech, detuning, epsilon, 0.0) == 0.0) roots.push_back(0.0);
    if (roots.empty())
        throw numerical_error("tls_fixed_points: no root of the population equation "
                              "in [-1, 0]; drive outside the model's regime");
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                roots.end());

    std::vector<TlsFixedPoint> out;
    out.reserve(roots.size());
    for (double s : roots) out.push_back(back_substitute(t, mech, detuning, epsilon, s));
    return out;
}

Eigen::Matrix<double, 5, 5> tls_stability_matrix(const TransitionTls& t,
                                                 const MechMode& mech, double detuning,
                                                 double epsilon,
                                                 const TlsFixedPoint& st) {
    const double gp = t.gamma_perp();
    const double g = t.g;
    const double theta = detuning - 2.0 * g * st.u;
    Eigen::Matrix<double, 5, 5> S = Eigen::Matrix<double, 5, 5>::Zero();
    S(0, 0) = -t.gamma;
    S(0, 2) = 4.0 * epsilon;
    S(1, 1) = -gp;
    S(1, 2) = theta;
    S(1, 3) = -2.0 * g * st.q_prime;
    S(2, 0) = -epsilon;
    S(2, 1) = -theta;
    S(2, 2) = -gp;
    S(2, 3) = 2.0 * g * st.p_prime;
    S(3, 3) = -0.5 * mech.gamma_m;
    S(3, 4) = mech.omega_m;
    S(4, 0) = -0.5 * g;
    S(4, 3) = -mech.omega_m;
    S(4, 4) = -0.5 * mech.gamma_m;
    return S;
}

TlsStabilityReport tls_stability(const TransitionTls& t, const MechMode& mech,
                                 double detuning, double epsilon,
                                 const TlsFixedPoint& st, double tol_rel) {
    const auto S = tls_stability_matrix(t, mech, detuning, epsilon, st);
    Eigen::EigenSolver<Eigen::Matrix<double, 5, 5>> es(S);
    if (es.info() != Eigen::Success)
        throw numerical_error("tls_stability: eigenvalue iteration failed");
    TlsStabilityReport rep;
    int lead = 0;
    for (int i = 0; i < 5; ++i) {
        rep.eigenvalues[i] = es.eigenvalues()(i);
        if (rep.eigenvalues[i].real() > rep.eigenvalues[lead].real()) lead = i;
    }
    rep.max_real = rep.eigenvalues[lead].real();
    const auto w = es.eigenvectors().col(lead);
    rep.mech_weight = (std::norm(w(3)) + std::norm(w(4))) / w.squaredNorm();
    rep.unstable = rep.max_real > tol_rel * mech.omega_m;
    return rep;
}

UnionMap union_instability_map(const std::vector<TransitionTls>& transitions,
                               const MechMode& mech, const std::vector<double>& power_dbm,
                               const std::vector<double>& omega_d, double atten_product,
                               const ExecPolicy& exec) {
    if (transitions.empty()) throw config_error("union map: no transitions");
    if (transitions.size() > 32) throw config_error("union map: too many transitions");
    if (!(atten_product > 0.0))
        throw config_error("union map: atten_product must be positive");

    UnionMap map;
    map.power_dbm = power_dbm;
    map.omega_d = omega_d;
    const size_t nf = omega_d.size();
    map.points = grid_map<UnionPoint>(
        power_dbm.size() * nf,
        [&](size_t idx) {
            UnionPoint pt;
            pt.power_dbm = power_dbm[idx / nf];
            pt.omega_d = omega_d[idx % nf];
            try {
                const double eps_cavity =
                    drive_from_power(pt.power_dbm, pt.omega_d, pt.omega_d, atten_product)
                        .epsilon;
                for (size_t k = 0; k < transitions.size(); ++k) {
                    const TransitionTls& t = transitions[k];
                    const double eps = std::sqrt(t.thermal_weight) * eps_cavity;
                    const double det = pt.omega_d - t.omega;
                    for (const auto& fp : tls_fixed_points(t, mech, det, eps)) {
                        if (tls_stability(t, mech, det, eps, fp).unstable) {
                            pt.unstable = true;
                            pt.which |= 1u << k;
                            break;
                        }
                    }
                }
            } catch (const std::exception&) {
                pt.ok = false;
                pt.unstable = false;
                pt.which = 0;
            }
            return pt;
        },
        exec);
    return map;
}

} // namespace fluxem
