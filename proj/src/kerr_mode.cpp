#include "fluxem/kerr_mode.hpp"

#include <cmath>

#include "fluxem/constants.hpp"
#include "fluxem/cubic.hpp"

namespace fluxem {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};

void KerrModeConfig::check() const {
    if (!(omega_plus > 0.0)) throw config_error("kerr mode: omega_plus must be positive");
    if (kerr < 0.0)
        throw config_error("kerr mode: kerr must be >= 0 in the -K/2 (a+a+aa) convention");
    if (!(kappa > 0.0)) throw config_error("kerr mode: kappa must be positive");
    if (kappa_ex < 0.0 || kappa_0 < 0.0 || kappa_ex + kappa_0 > kappa * (1.0 + 1e-9))
        throw config_error("kerr mode: kappa_ex + kappa_0 must not exceed kappa");
    if (!(omega_m > 0.0)) throw config_error("kerr mode: omega_m must be positive");
    if (!(gamma_m > 0.0)) throw config_error("kerr mode: gamma_m must be positive");
    if (g < 0.0) throw config_error("kerr mode: g must be >= 0");
}

DriveSpec drive_from_power(double power_dbm, double omega_d, double omega_plus,
                           double atten_product) {
    if (!(atten_product > 0.0))
        throw config_error("drive_from_power: atten_product must be positive");
    const double p_w = dbm_to_watt(power_dbm);
    DriveSpec d;
    d.detuning = omega_d - omega_plus;
    d.epsilon = std::sqrt(p_w / (hbar * omega_d * atten_product));
    return d;
}

double power_from_epsilon(double epsilon, double omega_d, double atten_product) {
    return watt_to_dbm(epsilon * epsilon * hbar * omega_d * atten_product);
}

namespace {

// static mechanical response: beta = -i g n / (i omega_m + gamma_m/2)
cplx static_beta(const KerrModeConfig& c, double n) {
    return -I * c.g * n / (I * c.omega_m + 0.5 * c.gamma_m);
}

// radiation-pressure + Kerr pull per photon entering the cubic
double pull_coefficient(const KerrModeConfig& c) {
    return c.kerr + 2.0 * c.g * c.g * c.omega_m /
                        (c.omega_m * c.omega_m + 0.25 * c.gamma_m * c.gamma_m);
}

} // namespace

std::vector<SteadyBranch> steady_state(const KerrModeConfig& cfg, const DriveSpec& drive) {
    cfg.check();
    const double D = drive.detuning;
    const double C = pull_coefficient(cfg);
    const double k2 = 0.25 * cfg.kappa * cfg.kappa;
    const double e2 = drive.epsilon * drive.epsilon;

    // n [(D + C n)^2 + kappa^2/4] = eps^2
    auto roots = solve_real_cubic(C * C, 2.0 * D * C, D * D + k2, -e2);

    std::vector<SteadyBranch> out;
    for (double n : roots) {
        if (n < 0.0) {
            if (n > -1e-12 * std::max(1.0, e2 / k2)) n = 0.0;
            else continue;
        }
        SteadyBranch b;
        b.n = n;
        const double deff = D + C * n;
        // alpha from (i deff - kappa/2) alpha + eps = 0
        b.alpha = drive.epsilon / (0.5 * cfg.kappa - I * deff);
        b.beta = static_beta(cfg, n);
        // slope criterion: the branch is stable against slow amplitude
        // perturbations iff d(eps^2)/dn > 0
        const double slope = (D + C * n) * (D + 3.0 * C * n) + k2;
        b.em_stable = slope > 0.0;
        out.push_back(b);
    }
    return out;
}

const SteadyBranch& select_branch(const std::vector<SteadyBranch>& branches,
                                  BranchPolicy policy) {
    if (branches.empty()) throw numerical_error("select_branch: no steady-state branch");
    switch (policy) {
        case BranchPolicy::lowest:
            return branches.front();
        case BranchPolicy::highest_stable:
            for (auto it = branches.rbegin(); it != branches.rend(); ++it)
                if (it->em_stable) return *it;
            break;
        case BranchPolicy::lowest_stable:
            for (const auto& b : branches)
                if (b.em_stable) return b;
            break;
    }
    // all branches unstable: fall back to the lowest
    return branches.front();
}

namespace {

SelfEnergy self_energy_impl(const KerrModeConfig& c, double detuning, double n,
                            const cplx& alpha, const cplx& beta, double omega) {
    SelfEnergy se;
    se.G = c.g * alpha;
    se.eta = c.kerr * alpha * alpha;
    const double x_static = 2.0 * std::real(beta);
    se.delta_tilde = detuning + 2.0 * c.kerr * n - c.g * x_static;

    const double dt = se.delta_tilde;
    const cplx chi_inv = -I * (omega + dt) + 0.5 * c.kappa;        // response at +omega
    const cplx chi_tilde_inv = -I * (omega - dt) + 0.5 * c.kappa;  // idler at -omega
    const double g2 = std::norm(se.G);
    const double eta_mag = std::abs(se.eta);
    se.sigma = 2.0 * I * g2 * (dt - eta_mag) / (chi_inv * chi_tilde_inv - eta_mag * eta_mag);
    return se;
}

} // namespace

SelfEnergy self_energy(const KerrModeConfig& cfg, const DriveSpec& drive,
                       const SteadyBranch& branch, double omega) {
    return self_energy_impl(cfg, drive.detuning, branch.n, branch.alpha, branch.beta, omega);
}

SelfEnergy self_energy_at_occupation(const KerrModeConfig& cfg, double detuning,
                                     double n, double omega) {
    // phase-free: only |alpha|^2 enters Sigma
    const cplx alpha = std::sqrt(n);
    return self_energy_impl(cfg, detuning, n, alpha, static_beta(cfg, n), omega);
}

BackactionMap backaction_map(const KerrModeConfig& cfg, double atten_product,
                             const std::vector<double>& power_dbm,
                             const std::vector<double>& detuning,
                             BranchPolicy policy, const ExecPolicy& exec) {
    cfg.check();
    BackactionMap map;
    map.power_dbm = power_dbm;
    map.detuning = detuning;
    const std::size_t np = power_dbm.size(), nd = detuning.size();

    map.points = grid_map<BackactionPoint>(
        np * nd,
        [&](std::size_t k) {
            const std::size_t ip = k / nd, id = k % nd;
            BackactionPoint pt;
            pt.power_dbm = power_dbm[ip];
            pt.detuning = detuning[id];
            try {
                const double omega_d = cfg.omega_plus + detuning[id];
                DriveSpec drive = drive_from_power(power_dbm[ip], omega_d, cfg.omega_plus,
                                                   atten_product);
                auto branches = steady_state(cfg, drive);
                const SteadyBranch& b = select_branch(branches, policy);
                const SelfEnergy se = self_energy(cfg, drive, b, cfg.omega_m);
                pt.n = b.n;
                pt.gamma_eff = cfg.gamma_m + 2.0 * std::real(se.sigma);
                pt.spring = std::imag(se.sigma);
                pt.n_branches = static_cast<int>(branches.size());
                pt.em_stable = b.em_stable;
            } catch (const std::exception&) {
                pt.ok = false; // labeled hole; sweep caller applies the failure budget
            }
            return pt;
        },
        exec);
    return map;
}

std::vector<BranchSweepPoint> branch_sweep(const KerrModeConfig& cfg, double detuning,
                                           const std::vector<double>& epsilons) {
    cfg.check();
    std::vector<BranchSweepPoint> out;
    out.reserve(epsilons.size());
    bool have_prev = false;
    double prev_n = 0.0;
    for (double eps : epsilons) {
        DriveSpec d{detuning, eps};
        auto branches = steady_state(cfg, d);
        BranchSweepPoint pt;
        pt.epsilon = eps;
        if (branches.empty()) throw numerical_error("branch_sweep: no steady state");
        if (!have_prev) {
            pt.branch = select_branch(branches, BranchPolicy::lowest_stable);
        } else {
            // continue the branch nearest in occupation; a fold happened when
            // the nearest root jumped away or changed stability character
            const SteadyBranch* best = &branches.front();
            for (const auto& b : branches)
                if (std::abs(b.n - prev_n) < std::abs(best->n - prev_n)) best = &b;
            pt.branch = *best;
            const double jump_scale = std::max(prev_n, 1e-30);
            pt.fold = std::abs(pt.branch.n - prev_n) > 0.5 * jump_scale ||
                      !pt.branch.em_stable;
        }
        pt.sigma_m = self_energy(cfg, d, pt.branch, cfg.omega_m).sigma;
        prev_n = pt.branch.n;
        have_prev = true;
        out.push_back(pt);
    }
    return out;
}

std::vector<double> instability_crossings(const KerrModeConfig& cfg, double epsilon,
                                          double det_lo, double det_hi, int scan_points,
                                          double tol, BranchPolicy policy) {
    cfg.check();
    if (scan_points < 2) throw config_error("instability_crossings: need scan_points >= 2");
    auto net_damping = [&](double det) {
        DriveSpec d{det, epsilon};
        const auto branches = steady_state(cfg, d);
        const SteadyBranch& b = select_branch(branches, policy);
        return cfg.gamma_m + 2.0 * std::real(self_energy(cfg, d, b, cfg.omega_m).sigma);
    };
    std::vector<double> crossings;
    double x0 = det_lo, f0 = net_damping(x0);
    for (int i = 1; i < scan_points; ++i) {
        const double x1 = det_lo + (det_hi - det_lo) * i / (scan_points - 1);
        const double f1 = net_damping(x1);
        if (f0 == 0.0) crossings.push_back(x0);
        else if (f0 * f1 < 0.0) {
            double lo = x0, hi = x1, flo = f0;
            while (hi - lo > tol) {
                const double mid = 0.5 * (lo + hi);
                const double fm = net_damping(mid);
                if (flo * fm <= 0.0) hi = mid;
                else {
                    lo = mid;
                    flo = fm;
                }
            }
            crossings.push_back(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    return crossings;
}

std::optional<double> threshold_occupation(const KerrModeConfig& cfg, double detuning,
                                           double n_max) {
    auto net = [&](double n) {
        return cfg.gamma_m +
               2.0 * std::real(self_energy_at_occupation(cfg, detuning, n, cfg.omega_m).sigma);
    };
    // net(0) = gamma_m > 0; scan up in n for a sign change, then bisect
    const int scan = 400;
    double n0 = 0.0, f0 = cfg.gamma_m;
    for (int i = 1; i <= scan; ++i) {
        const double n1 = n_max * i / scan;
        const double f1 = net(n1);
        if (f0 * f1 < 0.0 || f1 == 0.0) {
            double lo = n0, hi = n1, flo = f0;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = net(mid);
                if (flo * fm <= 0.0) hi = mid;
                else {
                    lo = mid;
                    flo = fm;
                }
            }
            return 0.5 * (lo + hi);
        }
        n0 = n1;
        f0 = f1;
    }
    return std::nullopt;
}

std::pair<double, double> min_threshold_occupation(const KerrModeConfig& cfg,
                                                   double det_lo, double det_hi,
                                                   int scan_points, double n_max) {
    double best_det = 0.0, best_n = n_max;
    bool found = false;
    for (int i = 0; i < scan_points; ++i) {
        const double det = det_lo + (det_hi - det_lo) * i / (scan_points - 1);
        if (auto n = threshold_occupation(cfg, det, n_max); n && *n < best_n) {
            best_n = *n;
            best_det = det;
            found = true;
        }
    }
    if (!found) throw numerical_error("min_threshold_occupation: no instability in range");
    // local refinement around the best detuning
    const double step = (det_hi - det_lo) / (scan_points - 1);
    for (int i = -4; i <= 4; ++i) {
        const double det = best_det + step * i / 4.0;
        if (auto n = threshold_occupation(cfg, det, n_max); n && *n < best_n) {
            best_n = *n;
            best_det = det;
        }
    }
    return {best_det, best_n};
}

} // namespace fluxem
