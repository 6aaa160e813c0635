#include "fluxem/lindblad.hpp"

#include <cmath>

#include "fluxem/constants.hpp"
#include "fluxem/polariton.hpp"

namespace fluxem {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};

void LindbladConfig::check() const {
    if (cavity_levels < 2 || transmon_levels < 2)
        throw config_error("lindblad: need at least 2 levels per mode");
    if (cavity_levels * transmon_levels > 16)
        throw config_error("lindblad: total Hilbert dimension must not exceed 16");
    if (n_th < 0.0) throw config_error("lindblad: n_th must be >= 0");
    if (gamma_q < 0.0 || kappa < 0.0) throw config_error("lindblad: decay rates must be >= 0");
}

namespace {

Eigen::MatrixXcd lowering(int levels) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(levels, levels);
    for (int n = 1; n < levels; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
    Eigen::MatrixXcd out(A.rows() * B.rows(), A.cols() * B.cols());
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

// column-stacking convention: vec(A rho B) = (B^T kron A) vec(rho)
void add_dissipator(Eigen::MatrixXcd& liou, const Eigen::MatrixXcd& L) {
    const int dim = static_cast<int>(L.rows());
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);
    const Eigen::MatrixXcd LdL = L.adjoint() * L;
    liou += kron(L.conjugate(), L);
    liou -= 0.5 * kron(id, LdL);
    liou -= 0.5 * kron(LdL.transpose(), id);
}

} // namespace

LindbladSolution lindblad_steady_state(double omega_c, double omega_q, double alpha_T,
                                       double J, double omega_d, const LindbladConfig& cfg) {
    cfg.check();
    const int nc = cfg.cavity_levels, nq = cfg.transmon_levels;
    const int dim = nc * nq;

    const Eigen::MatrixXcd idc = Eigen::MatrixXcd::Identity(nc, nc);
    const Eigen::MatrixXcd idq = Eigen::MatrixXcd::Identity(nq, nq);
    const Eigen::MatrixXcd a = kron(lowering(nc), idq);
    const Eigen::MatrixXcd c = kron(idc, lowering(nq));

    const Eigen::MatrixXcd na = a.adjoint() * a;
    const Eigen::MatrixXcd nq_op = c.adjoint() * c;

    // rotating frame of the drive
    Eigen::MatrixXcd h = (omega_c - omega_d) * na + (omega_q - omega_d) * nq_op -
                         0.5 * alpha_T * (c.adjoint() * c.adjoint() * c * c) +
                         J * (a.adjoint() * c + c.adjoint() * a) +
                         cfg.epsilon * (a + a.adjoint());

    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);
    Eigen::MatrixXcd liou = -I * (kron(id, h) - kron(h.transpose(), id));
    if (cfg.kappa > 0.0) {
        add_dissipator(liou, std::sqrt(cfg.kappa * (1.0 + cfg.n_th)) * a);
        if (cfg.n_th > 0.0) add_dissipator(liou, std::sqrt(cfg.kappa * cfg.n_th) * a.adjoint());
    }
    if (cfg.gamma_q > 0.0) {
        add_dissipator(liou, std::sqrt(cfg.gamma_q * (1.0 + cfg.n_th)) * c);
        if (cfg.n_th > 0.0)
            add_dissipator(liou, std::sqrt(cfg.gamma_q * cfg.n_th) * c.adjoint());
    }

    // Normalize rates out so the condition estimate is meaningful, then
    // replace the first row by the trace constraint tr(rho) = 1.
    const double scale = std::max({cfg.kappa, cfg.gamma_q, std::abs(omega_c - omega_d), 1.0});
    Eigen::MatrixXcd A = liou / scale;
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(dim * dim);
    for (int j = 0; j < dim * dim; ++j) A(0, j) = 0.0;
    for (int k = 0; k < dim; ++k) A(0, k * dim + k) = 1.0;
    b(0) = 1.0;

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14))
        throw numerical_error("lindblad: Liouvillian solve ill-conditioned (rcond=" +
                              std::to_string(rcond) + ")");
    Eigen::VectorXcd x = lu.solve(b);

    LindbladSolution sol;
    sol.rcond = rcond;
    sol.rho = Eigen::Map<Eigen::MatrixXcd>(x.data(), dim, dim);
    // clean up the tiny anti-Hermitian residue of the linear solve
    sol.rho = 0.5 * (sol.rho + sol.rho.adjoint().eval());
    sol.a_mean = (a * sol.rho).trace();
    return sol;
}

TransmissionTrace lindblad_transmission(const DeviceParams& p, double phi_ratio,
                                        const LindbladConfig& cfg,
                                        const std::vector<double>& omega_grid,
                                        const ExecPolicy& exec) {
    const double wq = transmon_frequency(p, phi_ratio);
    TransmissionTrace tr;
    tr.omega = omega_grid;
    tr.response = grid_map<double>(
        omega_grid.size(),
        [&](std::size_t i) {
            try {
                const auto sol = lindblad_steady_state(p.omega_c, wq, p.alpha_T, p.J,
                                                       omega_grid[i], cfg);
                return std::abs(sol.a_mean);
            } catch (const std::exception&) {
                return std::nan(""); // hole; caller decides on the budget
            }
        },
        exec);
    return tr;
}

} // namespace fluxem
