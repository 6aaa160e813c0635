#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace fluxem {

// residual vector r(theta); squared norm is minimized
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmOptions {
    int max_iterations = 200;
    double ftol = 1e-12;        // relative cost decrease
    double xtol = 1e-12;        // relative step size
    double lambda0 = 1e-3;
    double lambda_up = 11.0;
    double lambda_down = 9.0;
    double lambda_max = 1e14;
    double jacobian_step = 1e-6; // relative FD step
    Eigen::VectorXd scales;      // per-parameter magnitude floor for FD steps
    Eigen::VectorXd lower_bounds; // trials below are rejected; empty = none
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;  // s^2 (J^T J)^{-1}, s^2 = |r|^2/(m-n)
    Eigen::VectorXd sigma;       // sqrt of covariance diagonal
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

// Damped least squares with a numeric central-difference Jacobian. A throw
// from the residual function during a trial step rejects that step; a throw
// at the initial point propagates.
LmResult lm_fit(const ResidualFn& residuals, const Eigen::VectorXd& initial,
                const LmOptions& opts = {});

} // namespace fluxem
