#include "fluxem/polariton.hpp"

#include <algorithm>
#include <cmath>

#include "fluxem/constants.hpp"

namespace fluxem {

const char* transition_name(Transition t) {
    switch (t) {
        case Transition::lower: return "omega_minus";
        case Transition::upper: return "omega_plus";
        case Transition::lower_alpha: return "omega_minus_alpha";
        case Transition::lower_beta: return "omega_minus_beta";
        case Transition::upper_gamma: return "omega_plus_gamma";
        case Transition::gamma_half: return "omega_gamma_half";
    }
    return "?";
}

double transmon_frequency(const DeviceParams& p, double phi_ratio) {
    const double c = std::cos(M_PI * phi_ratio);
    return (p.omega_q_max + p.alpha_T) * std::sqrt(std::abs(c)) - p.alpha_T;
}

Eigen::Matrix<double, 6, 6> build_hamiltonian(const DeviceParams& p, double phi_ratio) {
    const double wq = transmon_frequency(p, phi_ratio);
    const double wc = p.omega_c;
    const double s2J = std::sqrt(2.0) * p.J;
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    h(1, 1) = wq;
    h(2, 2) = wc;
    h(3, 3) = 2.0 * (wq - p.alpha_T);
    h(4, 4) = wc + wq;
    h(5, 5) = 2.0 * wc;
    h(1, 2) = h(2, 1) = p.J;
    h(3, 4) = h(4, 3) = s2J;
    h(4, 5) = h(5, 4) = s2J;
    return h;
}

PolaritonSpectrum diagonalize(const Eigen::Matrix<double, 6, 6>& h) {
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw numerical_error("diagonalize: Hamiltonian is not symmetric");

    PolaritonSpectrum s;
    const double e0 = h(0, 0);
    s.energy[0] = 0.0;
    s.states(0, 0) = 1.0;

    // Excitation number is conserved, so the blocks decouple; diagonalizing
    // them separately keeps eigenvalues ascending within each block even
    // through anticrossings of the combined list.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> one(h.block<2, 2>(1, 1));
    if (one.info() != Eigen::Success) throw numerical_error("diagonalize: 2x2 block failed");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> two(h.block<3, 3>(3, 3));
    if (two.info() != Eigen::Success) throw numerical_error("diagonalize: 3x3 block failed");

    for (int i = 0; i < 2; ++i) {
        s.energy[1 + i] = one.eigenvalues()(i) - e0;
        s.states.block<2, 1>(1, 1 + i) = one.eigenvectors().col(i);
    }
    for (int i = 0; i < 3; ++i) {
        s.energy[3 + i] = two.eigenvalues()(i) - e0;
        s.states.block<3, 1>(3, 3 + i) = two.eigenvectors().col(i);
    }
    transition_frequencies(s);
    return s;
}

void transition_frequencies(PolaritonSpectrum& s) {
    const auto& e = s.energy;
    s.transition[int(Transition::lower)] = e[1] - e[0];
    s.transition[int(Transition::upper)] = e[2] - e[0];
    s.transition[int(Transition::lower_alpha)] = e[3] - e[1];
    s.transition[int(Transition::lower_beta)] = e[4] - e[1];
    s.transition[int(Transition::upper_gamma)] = e[5] - e[2];
    s.transition[int(Transition::gamma_half)] = e[5] / 2.0;
}

namespace {

std::array<double, 6> transitions_at(const DeviceParams& p, double phi) {
    PolaritonSpectrum s = diagonalize(build_hamiltonian(p, phi));
    return s.transition;
}

} // namespace

std::array<double, 6> flux_responsivity(const DeviceParams& p, double phi_ratio, double h) {
    // Central difference at step h and h/2 with one Richardson extrapolation.
    // The refinement loop shrinks h further if the two estimates have not
    // converged; that only fails to settle at the half-flux singularity where
    // domega_q/dPhi diverges.
    const double floor_scale = 1e-12 * p.omega_c; // treat |G| below this as zero
    for (int attempt = 0; attempt < 6; ++attempt) {
        const auto fp = transitions_at(p, phi_ratio + h);
        const auto fm = transitions_at(p, phi_ratio - h);
        const auto fp2 = transitions_at(p, phi_ratio + h / 2.0);
        const auto fm2 = transitions_at(p, phi_ratio - h / 2.0);
        std::array<double, 6> out{};
        bool converged = true;
        for (int i = 0; i < 6; ++i) {
            const double g1 = (fp[i] - fm[i]) / (2.0 * h);
            const double g2 = (fp2[i] - fm2[i]) / h;
            out[i] = (4.0 * g2 - g1) / 3.0;
            const double ref = std::max(std::abs(out[i]), floor_scale);
            if (std::abs(g1 - g2) > 1e-6 * ref) converged = false;
        }
        if (converged) return out;
        h /= 4.0;
    }
    throw numerical_error("flux_responsivity: no convergence at phi_ratio=" +
                          std::to_string(phi_ratio) + " (half-flux singularity)");
}

double zero_point_motion(const DeviceParams& p) {
    return std::sqrt(hbar / (2.0 * p.mass * p.omega_m));
}

std::array<double, 6> coupling_g(const DeviceParams& p, const FluxPoint& fp,
                                 const std::array<double, 6>& responsivity) {
    // Flux picked up per unit beam displacement is B_par * l; dividing by
    // Phi0 matches the per-flux-quantum responsivity.
    const double flux_per_m = fp.b_par * p.length_l / phi0;
    const double x = zero_point_motion(p);
    std::array<double, 6> g{};
    for (int i = 0; i < 6; ++i) g[i] = p.xi * responsivity[i] * flux_per_m * x;
    return g;
}

double scale_known_g(double g_ref, double G_ref, double G_new) {
    if (G_ref == 0.0) throw numerical_error("scale_known_g: reference responsivity is zero");
    return g_ref * G_new / G_ref;
}

PolaritonSpectrum spectrum_at(const DeviceParams& p, const FluxPoint& fp) {
    PolaritonSpectrum s = diagonalize(build_hamiltonian(p, fp.phi_ratio));
    s.omega_q = transmon_frequency(p, fp.phi_ratio);
    s.responsivity = flux_responsivity(p, fp.phi_ratio);
    s.coupling = coupling_g(p, fp, s.responsivity);
    s.kerr_upper = kerr_estimate(p, fp.phi_ratio, Branch::upper).kerr;
    return s;
}

Eigen::MatrixXd build_jc_hamiltonian(double omega_c, double omega_q, double alpha_T,
                                     double J, int n_levels, double energy_offset) {
    if (n_levels < 2) throw config_error("build_jc_hamiltonian: need n_levels >= 2");
    const int dim = n_levels * n_levels;
    auto idx = [n_levels](int nc, int nq) { return nc * n_levels + nq; };
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int nc = 0; nc < n_levels; ++nc) {
        for (int nq = 0; nq < n_levels; ++nq) {
            h(idx(nc, nq), idx(nc, nq)) = energy_offset + omega_c * nc + omega_q * nq -
                                          0.5 * alpha_T * nq * (nq - 1);
            // J (a c+ + a+ c)
            if (nc + 1 < n_levels && nq > 0) {
                const double v = J * std::sqrt(double(nc + 1)) * std::sqrt(double(nq));
                h(idx(nc, nq), idx(nc + 1, nq - 1)) = v;
                h(idx(nc + 1, nq - 1), idx(nc, nq)) = v;
            }
        }
    }
    return h;
}

namespace {

struct JcSpectrum {
    Eigen::VectorXd energy;
    Eigen::MatrixXd states;
};

JcSpectrum diagonalize_jc(const Eigen::MatrixXd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw numerical_error("polariton_kerr: eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

// index of the eigenvector with the largest overlap onto `target`
int max_overlap(const Eigen::MatrixXd& states, const Eigen::VectorXd& target) {
    Eigen::VectorXd ov = (states.transpose() * target).cwiseAbs();
    int best = 0;
    ov.maxCoeff(&best);
    return best;
}

double kerr_once(double omega_c, double omega_q, double alpha_T, double J,
                 Branch branch, int n_levels) {
    const int dim = n_levels * n_levels;
    auto idx = [n_levels](int nc, int nq) { return nc * n_levels + nq; };
    const auto jc = diagonalize_jc(build_jc_hamiltonian(omega_c, omega_q, alpha_T, J, n_levels));

    const double e_ground = jc.energy(0);

    // One-excitation branch state: max overlap with the bare state pair,
    // picking the lower/upper of the two hybridized levels.
    Eigen::VectorXd c10 = Eigen::VectorXd::Zero(dim);
    c10(idx(1, 0)) = 1.0;
    Eigen::VectorXd c01 = Eigen::VectorXd::Zero(dim);
    c01(idx(0, 1)) = 1.0;
    int i_a = max_overlap(jc.states, c10);
    int i_b = max_overlap(jc.states, c01);
    if (i_a == i_b) throw numerical_error("polariton_kerr: degenerate one-excitation labels");
    int i_lower = jc.energy(i_a) < jc.energy(i_b) ? i_a : i_b;
    int i_upper = i_lower == i_a ? i_b : i_a;
    const int i1 = branch == Branch::upper ? i_upper : i_lower;

    // Two-excitation analog (branch mode raised twice): overlap target built
    // from the one-excitation eigenvector components, (u a+ + v q+)^2 |0>.
    const double u = jc.states(idx(1, 0), i1);
    const double v = jc.states(idx(0, 1), i1);
    Eigen::VectorXd target = Eigen::VectorXd::Zero(dim);
    target(idx(2, 0)) = u * u;
    target(idx(1, 1)) = std::sqrt(2.0) * u * v;
    target(idx(0, 2)) = v * v;
    target.normalize();
    const int i2 = max_overlap(jc.states, target);

    const double e1 = jc.energy(i1) - e_ground;
    const double e2 = jc.energy(i2) - e_ground;
    return 2.0 * e1 - e2;
}

} // namespace

KerrEstimate polariton_kerr(double omega_c, double omega_q, double alpha_T, double J,
                            Branch branch, int n_levels) {
    KerrEstimate est;
    est.kerr = kerr_once(omega_c, omega_q, alpha_T, J, branch, n_levels);
    const double next = kerr_once(omega_c, omega_q, alpha_T, J, branch, n_levels + 1);
    const double ref = std::max(std::abs(est.kerr), 1e-12 * std::abs(alpha_T) + 1e-300);
    est.truncation_shift = std::abs(next - est.kerr) / ref;
    est.truncation_warning = est.truncation_shift > 0.01;
    return est;
}

KerrEstimate kerr_estimate(const DeviceParams& p, double phi_ratio, Branch branch,
                           int n_levels) {
    return polariton_kerr(p.omega_c, transmon_frequency(p, phi_ratio), p.alpha_T, p.J,
                          branch, n_levels);
}

double flux_for_transition(const DeviceParams& p, Transition t, double target) {
    auto f = [&](double phi) {
        return transitions_at(p, phi)[int(t)] - target;
    };
    // omega_q falls monotonically over [0, 0.5), and every transition
    // inherits a monotone trend from it, so a plain bisection applies.
    double lo = 0.0, hi = 0.5 - 1e-9;
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (flo * fhi > 0.0)
        throw numerical_error("flux_for_transition: target not bracketed on [0, 0.5)");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

std::vector<std::array<int, 6>> track_labels(const std::vector<PolaritonSpectrum>& sweep) {
    std::vector<std::array<int, 6>> perms;
    perms.reserve(sweep.size());
    if (sweep.empty()) return perms;
    perms.push_back({0, 1, 2, 3, 4, 5});
    // prev holds the label-ordered eigenvectors of the previous point, so each
    // perm maps tracked label -> diagonalize() column at that point.
    Eigen::Matrix<double, 6, 6> prev = sweep.front().states;
    for (size_t k = 1; k < sweep.size(); ++k) {
        const auto& cur = sweep[k].states;
        std::array<int, 6> perm = {0, 1, 2, 3, 4, 5};
        // Greedy max-overlap matching inside each excitation block; the
        // blocks never mix, so 2- and 3-way matchings suffice.
        auto match = [&](int off, int n) {
            std::vector<bool> used(n, false);
            for (int a = 0; a < n; ++a) {
                int best = 0;
                double best_ov = -1.0;
                for (int b = 0; b < n; ++b) {
                    if (used[b]) continue;
                    const double ov = std::abs(prev.col(off + a).dot(cur.col(off + b)));
                    if (ov > best_ov) {
                        best_ov = ov;
                        best = b;
                    }
                }
                used[best] = true;
                perm[off + a] = off + best;
            }
        };
        match(1, 2);
        match(3, 3);
        for (int a = 0; a < 6; ++a) prev.col(a) = cur.col(perm[a]);
        perms.push_back(perm);
    }
    return perms;
}

} // namespace fluxem
