#include "fluxem/fitting.hpp"
#include <cstdio>
#include <cstdlib>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fluxem/constants.hpp"
#include "fluxem/lm.hpp"
#include <json.hpp>

namespace fluxem {

LineModel line_model_from_name(const std::string& name) {
    if (name == "weak") return LineModel::weak;
    if (name == "tls") return LineModel::tls;
    throw config_error("unknown line model '" + name + "' (expected weak or tls)");
}

const char* line_model_name(LineModel m) {
    return m == LineModel::weak ? "weak" : "tls";
}

Trace load_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open trace file " + path);
    Trace t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        for (char& c : line)
            if (c == ',' || c == ';' || c == '\t') c = ' ';
        std::istringstream ss(line);
        double f = 0.0, s = 0.0;
        if (!(ss >> f >> s)) continue; // header row
        t.delta.push_back(hz_to_rad(f));
        t.s21.push_back(s);
    }
    if (t.delta.size() < 2) throw config_error("trace file " + path + " has no data rows");
    return t;
}

void save_trace_csv(const std::string& path, const Trace& t) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write trace file " + path);
    out << "frequency_Hz,s21\n";
    out.precision(12);
    for (size_t i = 0; i < t.delta.size(); ++i)
        out << rad_to_hz(t.delta[i]) << ',' << t.s21[i] << '\n';
}

namespace {

struct Seed {
    double g0, gamma_m, center, amplitude, background;
    double depth_ratio;
    double width = 0.0;
    bool g0_free = true;
    bool gamma_m_free = true;
};

// FWHM and contrast of the dominant feature (dip or peak); model-independent
Seed seed_from_trace(const Trace& tr, const FitInit& init) {
    const size_t n = tr.delta.size();
    const size_t edge = std::max<size_t>(2, n / 10);
    double outer = 0.0;
    for (size_t i = 0; i < edge; ++i) outer += tr.s21[i] + tr.s21[n - 1 - i];
    outer /= 2.0 * edge;

    size_t imin = 0, imax = 0;
    for (size_t i = 1; i < n; ++i) {
        if (tr.s21[i] < tr.s21[imin]) imin = i;
        if (tr.s21[i] > tr.s21[imax]) imax = i;
    }
    // the feature may stick out either way from the envelope
    const bool peak = tr.s21[imax] - outer > outer - tr.s21[imin];
    const size_t iext = peak ? imax : imin;
    const double depth = std::abs(tr.s21[iext] - outer);
    const double half = peak ? outer + 0.5 * depth : outer - 0.5 * depth;

    auto inside = [&](size_t i) { return peak ? tr.s21[i] > half : tr.s21[i] < half; };
    size_t lo = iext, hi = iext;
    while (lo > 0 && inside(lo)) --lo;
    while (hi + 1 < n && inside(hi)) ++hi;
    double width = tr.delta[hi] - tr.delta[lo];
    if (!(width > 0.0)) width = (tr.delta[n - 1] - tr.delta[0]) / 10.0;

    Seed s;
    s.depth_ratio = outer > 0.0 ? std::clamp(depth / outer, 1e-3, 0.999) : 0.1;
    // width ~ gamma_m (1 + C): start from the backaction-broadened guess
    const double c_guess = s.depth_ratio / (1.0 - s.depth_ratio);
    s.gamma_m = init.gamma_m > 0.0 ? init.gamma_m : width / (1.0 + c_guess);
    s.width = width;
    s.gamma_m_free = !(init.gamma_m > 0.0);
    s.g0_free = !(init.g0 > 0.0);
    s.center = init.center != 0.0 ? init.center : tr.delta[iext];
    s.background = init.background;
    s.amplitude = init.amplitude;
    s.g0 = init.g0;
    return s;
}

// optimal linear (amplitude, background) for a fixed shape
void solve_linear(const std::vector<double>& model, const std::vector<double>& y,
                  double& amp, double& bg) {
    double sm = 0, sy = 0, smm = 0, smy = 0;
    const double n = static_cast<double>(y.size());
    for (size_t i = 0; i < y.size(); ++i) {
        sm += model[i];
        sy += y[i];
        smm += model[i] * model[i];
        smy += model[i] * y[i];
    }
    const double det = n * smm - sm * sm;
    if (std::abs(det) < 1e-300) {
        amp = 1.0;
        bg = 0.0;
        return;
    }
    amp = (n * smy - sm * sy) / det;
    bg = (sy * smm - sm * smy) / det;
}

template <typename ModelFn>
FitReport run_fit(const Trace& tr, LineModel which, const FitInit& init,
                  double mode_linewidth, double n_pump, const ModelFn& model_s21) {
    if (tr.delta.size() < 30)
        throw config_error("fit_g needs at least 30 samples spanning the dip");
    if (tr.delta.size() != tr.s21.size())
        throw config_error("trace column length mismatch");

    Seed seed = seed_from_trace(tr, init);
    if (seed.g0 <= 0.0) {
        // depth ratio ~ C/(1+C) with cooperativity C = 4 g^2 n / (linewidth gamma_m)
        const double C = seed.depth_ratio / (1.0 - seed.depth_ratio);
        seed.g0 = std::sqrt(C * mode_linewidth * seed.gamma_m /
                            (4.0 * std::max(n_pump, 1e-12)));
    }

    auto shape = [&](double g0, double gm, double center) {
        std::vector<double> d(tr.delta.size());
        for (size_t i = 0; i < d.size(); ++i) d[i] = tr.delta[i] - center;
        return model_s21(g0, gm, d);
    };

    // coarse basin search before the local solve: the valley in
    // (g0, gamma_m, center) is narrow and curved, and the feature minimum is
    // displaced from the model center by the line asymmetry, so a blind
    // start routinely stalls in a side basin
    struct Start {
        double g0, gm, c, cost;
    };
    std::vector<Start> starts;
    {
        std::vector<double> g0s{seed.g0}, gms{seed.gamma_m}, cts{seed.center};
        if (seed.g0_free)
            g0s = {0.2 * seed.g0, 0.5 * seed.g0, seed.g0, 2.0 * seed.g0, 5.0 * seed.g0};
        if (seed.gamma_m_free && seed.width > 0.0)
            gms = {seed.width / 16.0, seed.width / 8.0, seed.width / 4.0,
                   seed.width / 2.0,  seed.width,       seed.gamma_m};
        if (init.center == 0.0 && seed.width > 0.0) {
            cts.clear();
            for (int k = -10; k <= 10; ++k)
                cts.push_back(seed.center + 0.05 * k * seed.width);
        }
        for (double g0c : g0s)
            for (double gmc : gms)
                for (double cc : cts) {
                    std::vector<double> m;
                    try {
                        m = shape(g0c, gmc, cc);
                    } catch (const std::exception&) {
                        continue;
                    }
                    double amp = 0.0, bg = 0.0;
                    solve_linear(m, tr.s21, amp, bg);
                    double cost = 0.0;
                    for (size_t i = 0; i < m.size(); ++i) {
                        const double r = amp * m[i] + bg - tr.s21[i];
                        cost += r * r;
                    }
                    starts.push_back({g0c, gmc, cc, cost});
                }
        std::sort(starts.begin(), starts.end(),
                  [](const Start& a, const Start& b) { return a.cost < b.cost; });
        if (starts.empty()) starts.push_back({seed.g0, seed.gamma_m, seed.center, 0.0});

        // one start per (g0, gamma_m) family, best center each; the
        // width/depth-inverted seed family goes first regardless of its
        // coarse cost, since broad-linewidth mimics often outrank the true
        // basin before the local solve
        std::vector<Start> picked;
        auto same = [](double a, double b) { return a == b; };
        for (const Start& s : starts)
            if (same(s.g0, seed.g0) && same(s.gm, seed.gamma_m)) {
                picked.push_back(s);
                break;
            }
        for (const Start& s : starts) {
            bool dup = false;
            for (const Start& p : picked)
                dup = dup || (same(s.g0, p.g0) && same(s.gm, p.gm));
            if (!dup) picked.push_back(s);
            if (picked.size() >= 8) break;
        }
        if (std::getenv("FLUXEM_FIT_DEBUG"))
            for (size_t k = 0; k < picked.size(); ++k)
                std::fprintf(stderr, "family %zu: g0=%g gm=%g c=%g cost=%g\n", k,
                             picked[k].g0, picked[k].gm, picked[k].c, picked[k].cost);
        starts = picked;
        seed.g0 = starts[0].g0;
        seed.gamma_m = starts[0].gm;
        seed.center = starts[0].c;
    }

    const bool pin_gm = init.gamma_m_fixed && init.gamma_m > 0.0;
    // parameter order: g0, [gamma_m,] center, amplitude, background
    auto unpack = [&](const Eigen::VectorXd& p, double& g0, double& gm, double& ce,
                      double& am, double& bg) {
        g0 = p(0);
        gm = pin_gm ? init.gamma_m : p(1);
        const int o = pin_gm ? 0 : 1;
        ce = p(1 + o);
        am = p(2 + o);
        bg = p(3 + o);
    };
    auto resid = [&](const Eigen::VectorXd& p) {
        double g0, gm, ce, am, bg;
        unpack(p, g0, gm, ce, am, bg);
        const auto m = shape(g0, gm, ce);
        Eigen::VectorXd r(static_cast<int>(m.size()));
        for (size_t i = 0; i < m.size(); ++i)
            r(static_cast<int>(i)) = am * m[i] + bg - tr.s21[i];
        return r;
    };

    double ynorm = 0.0;
    for (double v : tr.s21) ynorm += v * v;
    ynorm = std::sqrt(ynorm);

    // local solves from the best few basins; keep the lowest residual
    LmResult lm;
    bool have = false;
    const size_t tries = std::min<size_t>(starts.size(), 8);
    for (size_t k = 0; k < tries; ++k) {
        double amp = seed.amplitude, bg = seed.background;
        if (amp == 0.0) {
            std::vector<double> m0;
            try {
                m0 = shape(starts[k].g0, starts[k].gm, starts[k].c);
            } catch (const std::exception&) {
                continue;
            }
            solve_linear(m0, tr.s21, amp, bg);
            if (amp == 0.0) amp = 1.0;
        }
        const int np = pin_gm ? 4 : 5;
        Eigen::VectorXd x0(np);
        LmOptions opts;
        opts.max_iterations = 400;
        opts.scales.resize(np);
        opts.lower_bounds.resize(np);
        const double inf = std::numeric_limits<double>::infinity();
        if (pin_gm) {
            x0 << starts[k].g0, starts[k].c, amp, bg;
            opts.scales << starts[k].g0, init.gamma_m, std::abs(amp), std::abs(amp);
            opts.lower_bounds << 0.0, -inf, -inf, -inf;
        } else {
            x0 << starts[k].g0, starts[k].gm, starts[k].c, amp, bg;
            opts.scales << starts[k].g0, starts[k].gm, starts[k].gm, std::abs(amp),
                std::abs(amp);
            opts.lower_bounds << 0.0, 0.0, -inf, -inf, -inf;
        }

        const LmResult trial = lm_fit(resid, x0, opts);
        if (!have || trial.residual_norm < lm.residual_norm) {
            lm = trial;
            have = true;
        }
        if (lm.residual_norm < 1e-8 * ynorm) break;
    }
    if (!have) throw numerical_error("fit_g: model evaluation failed at every start");

    FitReport rep;
    rep.model = which;
    const int o = pin_gm ? 0 : 1;
    rep.g0 = lm.params(0);
    rep.gamma_m = pin_gm ? init.gamma_m : lm.params(1);
    rep.center = lm.params(1 + o);
    rep.amplitude = lm.params(2 + o);
    rep.background = lm.params(3 + o);
    rep.g0_sigma = lm.sigma(0);
    rep.gamma_m_sigma = pin_gm ? 0.0 : lm.sigma(1);
    rep.center_sigma = lm.sigma(1 + o);
    rep.amplitude_sigma = lm.sigma(2 + o);
    rep.background_sigma = lm.sigma(3 + o);
    rep.residual_norm = lm.residual_norm;
    rep.iterations = lm.iterations;
    rep.converged = lm.converged;
    rep.at_bound = rep.g0 < 1e-9 * seed.g0 || rep.gamma_m < 1e-9 * seed.gamma_m;
    rep.message = lm.message;
    return rep;
}

} // namespace

FitReport fit_g(const Trace& trace, const KerrModeConfig& cfg, const PumpProbeConfig& pp,
                const FitInit& init) {
    cfg.check();
    // pump occupation for the depth-inversion seed, coupling held off
    KerrModeConfig probe_cfg = cfg;
    probe_cfg.g = 0.0;
    std::vector<double> origin{0.0};
    const double n_pump = weak_kerr_response(probe_cfg, pp, origin).n_pump;

    auto model = [&](double g0, double gm, const std::vector<double>& d) {
        KerrModeConfig c = cfg;
        c.g = g0;
        c.gamma_m = gm;
        return weak_kerr_response(c, pp, d).s21;
    };
    return run_fit(trace, LineModel::weak, init, cfg.kappa, n_pump, model);
}

FitReport fit_g(const Trace& trace, const TlsConfig& tls, const PumpProbeConfig& pp,
                const FitInit& init) {
    tls.check();
    TlsConfig probe_tls = tls;
    probe_tls.g0 = 0.0;
    std::vector<double> origin{0.0};
    const double n_pump = tls_response(probe_tls, pp, origin).n_pump;

    auto model = [&](double g0, double gm, const std::vector<double>& d) {
        TlsConfig c = tls;
        c.g0 = g0;
        c.gamma_m = gm;
        return tls_response(c, pp, d).s21;
    };
    return run_fit(trace, LineModel::tls, init, 2.0 * tls.gamma_perp(), n_pump, model);
}

std::string fit_report_json(const FitReport& r) {
    nlohmann::json j;
    j["model"] = line_model_name(r.model);
    auto par = [](double v, double s) {
        return nlohmann::json{{"value_Hz", rad_to_hz(v)}, {"sigma_Hz", rad_to_hz(s)}};
    };
    j["parameters"]["g0"] = par(r.g0, r.g0_sigma);
    j["parameters"]["gamma_m"] = par(r.gamma_m, r.gamma_m_sigma);
    j["parameters"]["center"] = par(r.center, r.center_sigma);
    j["parameters"]["amplitude"] = {{"value", r.amplitude}, {"sigma", r.amplitude_sigma}};
    j["parameters"]["background"] = {{"value", r.background}, {"sigma", r.background_sigma}};
    j["residual_norm"] = r.residual_norm;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["at_bound"] = r.at_bound;
    j["message"] = r.message;
    return j.dump(2);
}

FitAggregate aggregate_fits(const std::vector<FitReport>& fits) {
    FitAggregate a;
    double wsum = 0.0, wg = 0.0;
    for (const auto& f : fits) {
        if (!f.converged || !(f.g0_sigma > 0.0)) continue;
        const double w = 1.0 / (f.g0_sigma * f.g0_sigma);
        wsum += w;
        wg += w * f.g0;
        ++a.count;
    }
    if (a.count == 0 || !(wsum > 0.0))
        throw numerical_error("aggregate_fits: no converged fits with finite sigma");
    a.g0 = wg / wsum;
    a.g0_sigma = std::sqrt(1.0 / wsum);
    return a;
}

} // namespace fluxem
