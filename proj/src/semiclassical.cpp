#include "fluxem/semiclassical.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fluxem/constants.hpp"
#include "fluxem/kerr_mode.hpp"

namespace fluxem {

void ThreeModeParams::check() const {
    auto pos = [](double v, const char* name) {
        if (!(v > 0.0)) throw config_error(std::string("three-mode: ") + name +
                                           " must be positive");
    };
    pos(omega_c, "omega_c");
    pos(omega_q, "omega_q");
    pos(kappa_b, "kappa_b");
    pos(gamma, "gamma");
    pos(gamma_m, "gamma_m");
    pos(omega_m, "omega_m");
    if (alpha_T < 0.0) throw config_error("three-mode: alpha_T must be >= 0");
    if (J < 0.0) throw config_error("three-mode: J must be >= 0");
    if (g0 < 0.0) throw config_error("three-mode: g0 must be >= 0");
    if (scan_points < 16) throw config_error("three-mode: scan_points too small");
}

namespace {

struct Reduced {
    double d1, d2;       // drive detunings
    double A, B, M;      // cavity response, transmon linewidth dressing, beam factor
    double c0, c1;       // C(N) = c0 - c1 N
    double R;            // source term J^2 eps^2 / A
};

Reduced reduce(const ThreeModeParams& par, const ThreeModeDrive& dr) {
    Reduced r;
    r.d1 = dr.omega_d - par.omega_c;
    r.d2 = dr.omega_d - par.omega_q;
    r.A = 0.25 * par.kappa_b * par.kappa_b + r.d1 * r.d1;
    r.B = 0.5 * par.gamma + par.J * par.J * par.kappa_b / (2.0 * r.A);
    r.M = par.omega_m + par.gamma_m * par.gamma_m / (4.0 * par.omega_m);
    r.c0 = -r.d2 + par.J * par.J * r.d1 / r.A;
    r.c1 = 2.0 * par.alpha_T + 2.0 * par.g0 * par.g0 / r.M;
    r.R = par.J * par.J * dr.epsilon * dr.epsilon / r.A;
    return r;
}

// scalar steady-state equation in the transmon occupation N = p^2 + q^2
double scalar_eq(const Reduced& r, double N) {
    const double C = r.c0 - r.c1 * N;
    return N * (r.B * r.B + C * C) - r.R;
}

ThreeModeState back_substitute(const ThreeModeParams& par, const ThreeModeDrive& dr,
                               const Reduced& r, double N) {
    const double C = r.c0 - r.c1 * N;
    const double denom = r.B * r.B + C * C;
    const double J = par.J, eps = dr.epsilon;
    ThreeModeState s;
    s.p = -((J * r.d1 * C / r.A + J * par.kappa_b * r.B / (2.0 * r.A)) * eps) / denom;
    s.q = ((-J * r.d1 * r.B / r.A + J * par.kappa_b * C / (2.0 * r.A)) * eps) / denom;
    s.u = -par.g0 * N / r.M;
    s.v = par.gamma_m * s.u / (2.0 * par.omega_m);
    s.x = (J * par.kappa_b * s.q / 2.0 + r.d1 * (J * s.p + eps)) / r.A;
    s.y = (r.d1 * J * s.q - par.kappa_b * (J * s.p + eps) / 2.0) / r.A;
    return s;
}

double state_norm(const ThreeModeState& s) {
    return std::sqrt(s.x * s.x + s.y * s.y + s.p * s.p + s.q * s.q + s.u * s.u +
                     s.v * s.v);
}

double flow_norm(const ThreeModeState& f) { return state_norm(f); }

double rate_scale(const ThreeModeParams& par, const ThreeModeDrive& dr) {
    const Reduced r = reduce(par, dr);
    return std::max({par.kappa_b, par.gamma, par.gamma_m, par.omega_m, std::abs(r.d1),
                     std::abs(r.d2), dr.epsilon});
}

void check_residual(const ThreeModeParams& par, const ThreeModeDrive& dr,
                    const ThreeModeState& s, const char* who) {
    const ThreeModeState f = three_mode_flow(par, dr, s);
    const double tol =
        par.residual_tol * rate_scale(par, dr) * std::max(1.0, state_norm(s));
    if (!(flow_norm(f) <= tol)) {
        std::ostringstream msg;
        msg << who << ": state is not a fixed point (residual " << flow_norm(f)
            << ", tolerance " << tol << ")";
        throw config_error(msg.str());
    }
}

// shared eigenvalue classification; mech_first indexes the first of the two
// mechanical rows
template <int N>
void classify_matrix(const Eigen::Matrix<double, N, N>& S, double tol, int mech_first,
                     std::array<std::complex<double>, N>& eigs, Stability& cls,
                     int& crossing, double& weight, double& residual) {
    Eigen::EigenSolver<Eigen::Matrix<double, N, N>> es(S);
    if (es.info() != Eigen::Success)
        throw numerical_error("stability: eigenvalue iteration failed");
    for (int i = 0; i < N; ++i) eigs[i] = es.eigenvalues()(i);

    crossing = 0;
    for (int i = 1; i < N; ++i)
        if (eigs[i].real() > eigs[crossing].real()) crossing = i;

    const auto w = es.eigenvectors().col(crossing);
    const double wn = w.norm();
    weight = (std::norm(w(mech_first)) + std::norm(w(mech_first + 1))) / (wn * wn);
    residual = (S.template cast<std::complex<double>>() * w - eigs[crossing] * w).norm() / wn;
    const double scale = S.cwiseAbs().maxCoeff();
    if (residual > 1e-6 * std::max(scale, 1.0))
        throw numerical_error("stability: eigenpair residual above tolerance");

    if (eigs[crossing].real() < -tol) {
        cls = Stability::stable;
        crossing = -1;
        weight = 0.0;
    } else {
        cls = weight > 0.5 ? Stability::mechanically_unstable : Stability::unstable;
    }
}

} // namespace

ThreeModeState three_mode_flow(const ThreeModeParams& par, const ThreeModeDrive& dr,
                               const ThreeModeState& s) {
    const double d1 = dr.omega_d - par.omega_c;
    const double d2 = dr.omega_d - par.omega_q;
    const double n2 = s.p * s.p + s.q * s.q;
    const double theta = -d2 - 2.0 * par.alpha_T * n2 + 2.0 * par.g0 * s.u;
    ThreeModeState f;
    f.x = -0.5 * par.kappa_b * s.x - d1 * s.y + par.J * s.q;
    f.y = d1 * s.x - 0.5 * par.kappa_b * s.y - par.J * s.p - dr.epsilon;
    f.p = -0.5 * par.gamma * s.p + theta * s.q + par.J * s.y;
    f.q = -0.5 * par.gamma * s.q - theta * s.p - par.J * s.x;
    f.u = -0.5 * par.gamma_m * s.u + par.omega_m * s.v;
    f.v = -par.omega_m * s.u - 0.5 * par.gamma_m * s.v - par.g0 * n2;
    return f;
}

std::vector<ThreeModeState> find_fixed_points(const ThreeModeParams& par,
                                              const ThreeModeDrive& dr) {
    par.check();
    if (!(dr.omega_d > 0.0)) throw config_error("three-mode: omega_d must be positive");
    if (dr.epsilon < 0.0) throw config_error("three-mode: epsilon must be >= 0");

    const Reduced r = reduce(par, dr);
    std::vector<double> roots;
    if (r.R <= 0.0) {
        roots.push_back(0.0); // undriven or decoupled transmon
    } else {
        const double n_max = r.R / (r.B * r.B) * (1.0 + 1e-9);
        const int np = par.scan_points;
        double prev_n = 0.0, prev_h = scalar_eq(r, 0.0);
        for (int i = 1; i <= np; ++i) {
            const double n = n_max * i / np;
            const double h = scalar_eq(r, n);
            if (prev_h == 0.0) {
                roots.push_back(prev_n);
            } else if ((prev_h < 0.0) != (h < 0.0)) {
                double lo = prev_n, hi = n, flo = prev_h;
                for (int it = 0; it < 200 && hi - lo > 1e-16 * n_max; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = scalar_eq(r, mid);
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
            prev_n = n;
            prev_h = h;
        }
        if (scalar_eq(r, n_max) == 0.0) roots.push_back(n_max);
        if (roots.empty()) {
            std::ostringstream msg;
            msg << "three-mode: no steady-state bracket in scan range [0, " << n_max
                << "] at " << par.scan_points << " points";
            throw numerical_error(msg.str());
        }
        std::sort(roots.begin(), roots.end());
        roots.erase(std::unique(roots.begin(), roots.end(),
                                [&](double a, double b) {
                                    return std::abs(a - b) <= 1e-10 * n_max;
                                }),
                    roots.end());
    }

    std::vector<ThreeModeState> out;
    out.reserve(roots.size());
    for (double N : roots) {
        ThreeModeState s = back_substitute(par, dr, r, N);
        check_residual(par, dr, s, "find_fixed_points");
        out.push_back(s);
    }
    return out;
}

Eigen::Matrix<double, 6, 6> three_mode_jacobian(const ThreeModeParams& par,
                                                const ThreeModeDrive& dr,
                                                const ThreeModeState& s, bool validate) {
    if (validate) check_residual(par, dr, s, "three_mode_jacobian");
    const double d1 = dr.omega_d - par.omega_c;
    const double d2 = dr.omega_d - par.omega_q;
    const double aT = par.alpha_T, g0 = par.g0, J = par.J;
    const double p = s.p, q = s.q, u = s.u;

    Eigen::Matrix<double, 6, 6> S = Eigen::Matrix<double, 6, 6>::Zero();
    S(0, 0) = -0.5 * par.kappa_b;
    S(0, 1) = -d1;
    S(0, 3) = J;
    S(1, 0) = d1;
    S(1, 1) = -0.5 * par.kappa_b;
    S(1, 2) = -J;
    S(2, 1) = J;
    S(2, 2) = -0.5 * par.gamma - 4.0 * aT * p * q;
    S(2, 3) = -d2 - 2.0 * aT * p * p - 6.0 * aT * q * q + 2.0 * g0 * u;
    S(2, 4) = 2.0 * g0 * q;
    S(3, 0) = -J;
    S(3, 2) = d2 + 6.0 * aT * p * p + 2.0 * aT * q * q - 2.0 * g0 * u;
    S(3, 3) = -0.5 * par.gamma + 4.0 * aT * p * q;
    S(3, 4) = -2.0 * g0 * p;
    S(4, 4) = -0.5 * par.gamma_m;
    S(4, 5) = par.omega_m;
    S(5, 2) = -2.0 * g0 * p;
    S(5, 3) = -2.0 * g0 * q;
    S(5, 4) = -par.omega_m;
    S(5, 5) = -0.5 * par.gamma_m;
    return S;
}

FixedPointReport classify_stability(const ThreeModeParams& par, const ThreeModeDrive& dr,
                                    const ThreeModeState& s) {
    FixedPointReport rep;
    rep.state = s;
    const auto S = three_mode_jacobian(par, dr, s);
    classify_matrix<6>(S, par.stability_tol_rel * par.omega_m, 4, rep.eigenvalues,
                       rep.classification, rep.crossing_index, rep.mech_weight,
                       rep.eig_residual);
    return rep;
}

RegionMap region_map(const ThreeModeParams& par, const std::vector<double>& power_dbm,
                     const std::vector<double>& omega_d, const ExecPolicy& exec) {
    par.check();
    if (!(par.atten_product > 0.0))
        throw config_error("region_map: atten_product must be positive");
    RegionMap map;
    map.power_dbm = power_dbm;
    map.omega_d = omega_d;
    const size_t nf = omega_d.size();
    map.points = grid_map<RegionPoint>(
        power_dbm.size() * nf,
        [&](size_t idx) {
            RegionPoint pt;
            pt.power_dbm = power_dbm[idx / nf];
            pt.omega_d = omega_d[idx % nf];
            try {
                ThreeModeDrive dr;
                dr.omega_d = pt.omega_d;
                dr.epsilon =
                    drive_from_power(pt.power_dbm, dr.omega_d, dr.omega_d,
                                     par.atten_product)
                        .epsilon;
                const auto fps = find_fixed_points(par, dr);
                pt.n_fp = static_cast<int>(fps.size());
                for (const auto& s : fps) {
                    const auto rep = classify_stability(par, dr, s);
                    if (rep.classification == Stability::stable) ++pt.n_stable;
                    if (rep.classification == Stability::mechanically_unstable)
                        pt.mech_unstable = true;
                }
            } catch (const std::exception&) {
                pt.n_fp = -1;
                pt.n_stable = 0;
                pt.ok = false;
            }
            return pt;
        },
        exec);
    return map;
}

double lorentzian_occupation(double epsilon, double detuning, double kappa) {
    return epsilon * epsilon / (detuning * detuning + 0.25 * kappa * kappa);
}

std::vector<TwoModeReport> two_mode_fixed_points(const TwoModeParams& par, double detuning,
                                                 double epsilon) {
    KerrModeConfig cfg;
    cfg.omega_plus = 1.0; // unused by steady_state
    cfg.kerr = par.kerr;
    cfg.kappa = par.kappa;
    cfg.g = par.g;
    cfg.omega_m = par.omega_m;
    cfg.gamma_m = par.gamma_m;
    cfg.check();

    const auto branches = steady_state(cfg, DriveSpec{detuning, epsilon});
    std::vector<TwoModeReport> out;
    out.reserve(branches.size());
    const double mech_pull = 2.0 * par.g * par.g * par.omega_m /
                             (par.omega_m * par.omega_m +
                              0.25 * par.gamma_m * par.gamma_m);
    for (const auto& br : branches) {
        const double n = br.n;
        const double theta = detuning + (par.kerr + mech_pull) * n;
        const double lorentz = theta * theta + 0.25 * par.kappa * par.kappa;
        TwoModeReport rep;
        const double x = epsilon * theta / lorentz;
        const double y = -epsilon * 0.5 * par.kappa / lorentz;
        const double u = -par.g * n * par.omega_m /
                         (par.omega_m * par.omega_m + 0.25 * par.gamma_m * par.gamma_m);
        const double v = 0.5 * par.gamma_m * u / par.omega_m;
        rep.state = {x, y, u, v};

        const double K = par.kerr, g = par.g;
        const double th = detuning + K * (x * x + y * y) - 2.0 * g * u;
        Eigen::Matrix<double, 4, 4> S;
        S << -0.5 * par.kappa - 2.0 * K * x * y, -th - 2.0 * K * y * y, 2.0 * g * y, 0.0,
            th + 2.0 * K * x * x, -0.5 * par.kappa + 2.0 * K * x * y, -2.0 * g * x, 0.0,
            0.0, 0.0, -0.5 * par.gamma_m, par.omega_m,
            -2.0 * g * x, -2.0 * g * y, -par.omega_m, -0.5 * par.gamma_m;

        int crossing = -1;
        double residual = 0.0;
        classify_matrix<4>(S, par.stability_tol_rel * par.omega_m, 2, rep.eigenvalues,
                           rep.classification, crossing, rep.mech_weight, residual);
        out.push_back(rep);
    }
    return out;
}

} // namespace fluxem
