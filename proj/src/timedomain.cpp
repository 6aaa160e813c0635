#include "fluxem/timedomain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fluxem/constants.hpp"

namespace fluxem {

void IntegrationConfig::check() const {
    if (!(t_end > 0.0)) throw config_error("integration: t_end must be positive");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
        throw config_error("integration: tolerances must be positive");
    if (!(sample_rate > 0.0))
        throw config_error("integration: sample_rate must be positive");
    if (max_steps < 100) throw config_error("integration: max_steps too small");
}

namespace {

// Dormand-Prince 5(4) pair, FSAL
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
constexpr double E1 = 35.0 / 384 - 5179.0 / 57600, E3 = 500.0 / 1113 - 7571.0 / 16695,
                 E4 = 125.0 / 192 - 393.0 / 640, E5 = -2187.0 / 6784 + 92097.0 / 339200,
                 E6 = 11.0 / 84 - 187.0 / 2100, E7 = -1.0 / 40;

template <size_t N>
using Vec = std::array<double, N>;

template <size_t N, typename Flow, typename Sampler>
void dp5_run(const Flow& flow, Vec<N> y, const IntegrationConfig& cfg,
             const Sampler& sample, TimeSeries& out) {
    const double dt_sample = 1.0 / cfg.sample_rate;
    const size_t n_samples = static_cast<size_t>(std::floor(cfg.t_end * cfg.sample_rate)) + 1;

    double t = 0.0;
    sample(t, y);
    size_t next_sample = 1;

    Vec<N> k1 = flow(t, y);
    double ynorm = 0.0, fnorm = 0.0;
    for (size_t i = 0; i < N; ++i) {
        ynorm += y[i] * y[i];
        fnorm += k1[i] * k1[i];
    }
    double h = fnorm > 0.0 ? 0.01 * std::sqrt((ynorm + 1e-300) / fnorm) : dt_sample / 4.0;
    h = std::min({h, dt_sample, cfg.t_end / 10.0});
    double h_next = h;

    const double h_floor = 1e-14 * cfg.t_end;
    while (next_sample < n_samples) {
        if (out.steps++ > cfg.max_steps)
            throw numerical_error("integration exceeded the step budget");
        const double t_target = next_sample * dt_sample;
        h = std::min(h_next, t_target - t);
        const bool clipped = h < h_next;

        Vec<N> k2, k3, k4, k5, k6, k7, y5;
        Vec<N> tmp;
        auto stage = [&](const Vec<N>& base) { return flow(t, base); };
        for (size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * A21 * k1[i];
        k2 = stage(tmp);
        for (size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        k3 = stage(tmp);
        for (size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        k4 = stage(tmp);
        for (size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        k5 = stage(tmp);
        for (size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] +
                                 A65 * k5[i]);
        k6 = stage(tmp);
        for (size_t i = 0; i < N; ++i)
            y5[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] +
                                B6 * k6[i]);
        k7 = stage(y5);

        double err = 0.0;
        for (size_t i = 0; i < N; ++i) {
            const double e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] +
                                  E6 * k6[i] + E7 * k7[i]);
            const double sc =
                cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / N);

        if (err <= 1.0 || !std::isfinite(err)) {
            if (!std::isfinite(err)) {
                // amplitudes left double range; treat as underflow-style death
                out.step_underflow = true;
                out.failure_time = t;
                return;
            }
            t += h;
            y = y5;
            k1 = k7; // FSAL
            if (t_target - t <= 1e-9 * dt_sample) {
                t = t_target; // snap: the clipped step aimed exactly here
                sample(t_target, y);
                ++next_sample;
            }
        }
        const double factor =
            err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
        const double h_new = h * factor;
        h_next = clipped && err <= 1.0 ? std::max(h_next, h_new) : h_new;
        if (h_next < h_floor) {
            out.step_underflow = true;
            out.failure_time = t;
            return;
        }
    }
}

} // namespace

TimeSeries integrate_two_mode(const TwoModeParams& par, double detuning, double epsilon,
                              const std::array<double, 4>& init,
                              const IntegrationConfig& cfg) {
    cfg.check();
    if (!(par.kappa > 0.0) || !(par.omega_m > 0.0) || !(par.gamma_m > 0.0))
        throw config_error("two-mode integration: rates must be positive");

    TimeSeries out;
    auto flow = [&](double, const std::array<double, 4>& s) {
        const double n_c = s[0] * s[0] + s[1] * s[1];
        const double theta = detuning + par.kerr * n_c - 2.0 * par.g * s[2];
        return std::array<double, 4>{
            -0.5 * par.kappa * s[0] - theta * s[1],
            theta * s[0] - 0.5 * par.kappa * s[1] - epsilon,
            -0.5 * par.gamma_m * s[2] + par.omega_m * s[3],
            -par.omega_m * s[2] - 0.5 * par.gamma_m * s[3] - par.g * n_c,
        };
    };
    auto sample = [&](double t, const std::array<double, 4>& s) {
        out.t.push_back(t);
        out.alpha.emplace_back(s[0], s[1]);
        out.beta.emplace_back(s[2], s[3]);
    };
    dp5_run<4>(flow, init, cfg, sample, out);
    return out;
}

TimeSeries integrate_three_mode(const ThreeModeParams& par, const ThreeModeDrive& drive,
                                const ThreeModeState& init, const IntegrationConfig& cfg) {
    cfg.check();
    par.check();

    TimeSeries out;
    auto flow = [&](double, const std::array<double, 6>& s) {
        ThreeModeState st{s[0], s[1], s[2], s[3], s[4], s[5]};
        const ThreeModeState f = three_mode_flow(par, drive, st);
        return std::array<double, 6>{f.x, f.y, f.p, f.q, f.u, f.v};
    };
    auto sample = [&](double t, const std::array<double, 6>& s) {
        out.t.push_back(t);
        out.alpha.emplace_back(s[0], s[1]);
        out.zeta.emplace_back(s[2], s[3]);
        out.beta.emplace_back(s[4], s[5]);
    };
    dp5_run<6>(flow, {init.x, init.y, init.p, init.q, init.u, init.v}, cfg, sample, out);
    return out;
}

RunClassification classify_run(const TimeSeries& series, double omega_m,
                               double discard_fraction) {
    RunClassification rc;
    if (series.step_underflow) {
        rc.unstable = true;
        rc.saturated = false;
        rc.envelope_rate = std::numeric_limits<double>::infinity();
        return rc;
    }
    const size_t n = series.t.size();
    if (n < 32 || series.beta.size() != n)
        throw config_error("classify_run: series too short");
    if (!(omega_m > 0.0)) throw config_error("classify_run: omega_m must be positive");
    discard_fraction = std::clamp(discard_fraction, 0.0, 0.9);

    const size_t start = static_cast<size_t>(n * discard_fraction);
    const double dt = series.t[1] - series.t[0];
    const double period = two_pi / omega_m;
    const size_t chunk = std::max<size_t>(4, static_cast<size_t>(2.0 * period / dt));

    // RMS of the mean-subtracted beam per two-period chunk, log-linear fit
    std::vector<double> tc, lc;
    for (size_t i = start; i + chunk <= n; i += chunk) {
        std::complex<double> mean = 0.0;
        for (size_t j = i; j < i + chunk; ++j) mean += series.beta[j];
        mean /= static_cast<double>(chunk);
        double rms = 0.0;
        for (size_t j = i; j < i + chunk; ++j) rms += std::norm(series.beta[j] - mean);
        rms = std::sqrt(rms / chunk);
        if (rms > 0.0) {
            tc.push_back(series.t[i + chunk / 2]);
            lc.push_back(std::log(rms));
        }
    }
    if (tc.size() < 4) throw config_error("classify_run: too few envelope chunks");

    auto slope_of = [](const std::vector<double>& x, const std::vector<double>& y,
                       size_t a, size_t b) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(b - a);
        for (size_t i = a; i < b; ++i) {
            sx += x[i];
            sy += y[i];
            sxx += x[i] * x[i];
            sxy += x[i] * y[i];
        }
        const double det = m * sxx - sx * sx;
        return det != 0.0 ? (m * sxy - sx * sy) / det : 0.0;
    };
    rc.envelope_rate = slope_of(tc, lc, 0, tc.size());
    rc.unstable = rc.envelope_rate > 0.0;
    if (rc.unstable) {
        const size_t tail = tc.size() - tc.size() / 4;
        const double tail_rate = slope_of(tc, lc, tail, tc.size());
        rc.saturated = tail_rate < 0.1 * rc.envelope_rate;
    }
    return rc;
}

} // namespace fluxem
