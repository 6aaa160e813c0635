#include "fluxem/lm.hpp"

#include <cmath>
#include <limits>

#include "fluxem/device.hpp"

namespace fluxem {

namespace {

double fd_step(const LmOptions& opts, const Eigen::VectorXd& x, int j) {
    double floor = 1.0;
    if (opts.scales.size() == x.size()) floor = std::abs(opts.scales(j));
    return opts.jacobian_step * std::max(std::abs(x(j)), floor);
}

bool in_bounds(const LmOptions& opts, const Eigen::VectorXd& x) {
    if (opts.lower_bounds.size() != x.size()) return true;
    for (int j = 0; j < x.size(); ++j)
        if (x(j) < opts.lower_bounds(j)) return false;
    return true;
}

Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x,
                                 int m, const LmOptions& opts) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd J(m, n);
    for (int j = 0; j < n; ++j) {
        double h = fd_step(opts, x, j);
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        if (!in_bounds(opts, xm)) { // one-sided at a bound
            J.col(j) = (fn(xp) - fn(x)) / h;
            continue;
        }
        J.col(j) = (fn(xp) - fn(xm)) / (2.0 * h);
    }
    return J;
}

} // namespace

LmResult lm_fit(const ResidualFn& residuals, const Eigen::VectorXd& initial,
                const LmOptions& opts) {
    const int n = static_cast<int>(initial.size());
    if (n == 0) throw config_error("lm_fit: empty parameter vector");
    if (!in_bounds(opts, initial)) throw config_error("lm_fit: initial point violates bounds");

    Eigen::VectorXd x = initial;
    Eigen::VectorXd r = residuals(x);
    const int m = static_cast<int>(r.size());
    if (m < n) throw config_error("lm_fit: fewer residuals than parameters");

    double cost = 0.5 * r.squaredNorm();
    double lambda = opts.lambda0;

    LmResult out;
    out.message = "max iterations reached";
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        Eigen::MatrixXd J = numeric_jacobian(residuals, x, m, opts);
        Eigen::VectorXd g = J.transpose() * r;
        Eigen::MatrixXd H = J.transpose() * J;

        bool stepped = false;
        while (lambda <= opts.lambda_max) {
            Eigen::MatrixXd A = H;
            for (int j = 0; j < n; ++j)
                A(j, j) += lambda * std::max(H(j, j), 1e-30);
            Eigen::VectorXd delta = A.ldlt().solve(-g);
            Eigen::VectorXd xt = x + delta;

            double trial_cost = std::numeric_limits<double>::infinity();
            Eigen::VectorXd rt;
            if (in_bounds(opts, xt)) {
                try {
                    rt = residuals(xt);
                    trial_cost = 0.5 * rt.squaredNorm();
                } catch (const std::exception&) {
                    // model undefined at the trial point; treat as uphill
                }
            }
            if (trial_cost < cost) {
                const double drop = cost - trial_cost;
                const double step = delta.norm();
                x = xt;
                r = rt;
                cost = trial_cost;
                lambda = std::max(lambda / opts.lambda_down, 1e-14);
                stepped = true;
                if (drop <= opts.ftol * std::max(cost, 1e-300) &&
                    step <= opts.xtol * (x.norm() + opts.xtol)) {
                    out.converged = true;
                    out.message = "converged";
                }
                break;
            }
            lambda *= opts.lambda_up;
        }
        if (!stepped) {
            out.converged = true; // no downhill direction left at max damping
            out.message = "converged (no further decrease)";
            ++iter;
            break;
        }
        if (out.converged) {
            ++iter;
            break;
        }
    }

    out.params = x;
    out.iterations = iter;
    out.residual_norm = std::sqrt(2.0 * cost);

    Eigen::MatrixXd J = numeric_jacobian(residuals, x, m, opts);
    const double s2 = m > n ? r.squaredNorm() / (m - n) : 0.0;
    // equilibrate columns so the rank decision in the pseudo-inverse is not
    // swayed by parameter-scale disparities (rad/s params next to O(1) amps)
    Eigen::VectorXd colnorm = J.colwise().norm();
    Eigen::VectorXd d = colnorm.unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 0.0; });
    Eigen::MatrixXd Hs = (J * d.asDiagonal()).transpose() * (J * d.asDiagonal());
    Eigen::MatrixXd Hinv = d.asDiagonal() *
                           Hs.completeOrthogonalDecomposition().pseudoInverse() *
                           d.asDiagonal();
    out.covariance = s2 * Hinv;
    out.sigma = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    return out;
}

} // namespace fluxem
