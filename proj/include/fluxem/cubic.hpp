#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace fluxem {

// Real roots of a x^3 + b x^2 + c x + d = 0, ascending. Degenerate leading
// coefficients fall back to the quadratic/linear case. A closed-form solve
// (Cardano / trigonometric) followed by one or two Newton steps against the
// original coefficients keeps roots at full double precision.
inline std::vector<double> solve_real_cubic(double a, double b, double c, double d) {
    std::vector<double> roots;
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
    if (scale == 0.0) return roots;
    if (std::abs(a) < 1e-14 * scale) {
        if (std::abs(b) < 1e-14 * scale) {
            if (std::abs(c) < 1e-14 * scale) return roots;
            roots.push_back(-d / c);
            return roots;
        }
        const double disc = c * c - 4.0 * b * d;
        if (disc < 0.0) return roots;
        const double s = std::sqrt(disc);
        // numerically stable quadratic
        const double q = -0.5 * (c + std::copysign(s, c));
        if (q != 0.0) {
            roots.push_back(q / b);
            roots.push_back(d / q);
        } else {
            roots.push_back(0.0);
            roots.push_back(-c / b);
        }
        std::sort(roots.begin(), roots.end());
        return roots;
    }

    // depressed form t^3 + p t + q with x = t - b/(3a)
    const double b1 = b / a, c1 = c / a, d1 = d / a;
    const double shift = b1 / 3.0;
    const double p = c1 - b1 * b1 / 3.0;
    const double q = 2.0 * b1 * b1 * b1 / 27.0 - b1 * c1 / 3.0 + d1;
    const double disc = -4.0 * p * p * p - 27.0 * q * q;

    if (disc > 0.0) {
        // three real roots: trigonometric form
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots.push_back(m * std::cos(theta - 2.0 * M_PI * k / 3.0) - shift);
    } else {
        // one real root: Cardano
        const double half_q = q / 2.0;
        const double r = std::sqrt(half_q * half_q + p * p * p / 27.0);
        const double u = std::cbrt(-half_q + r);
        const double v = std::cbrt(-half_q - r);
        roots.push_back(u + v - shift);
    }

    for (double& x : roots) {
        for (int it = 0; it < 2; ++it) {
            const double f = ((a * x + b) * x + c) * x + d;
            const double fp = (3.0 * a * x + 2.0 * b) * x + c;
            if (fp != 0.0) x -= f / fp;
        }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

} // namespace fluxem
