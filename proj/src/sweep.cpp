#include "fluxem/sweep.hpp"

#include "fluxem/calibration.hpp"
#include "fluxem/ceqa.hpp"
#include "fluxem/constants.hpp"
#include "fluxem/device.hpp"
#include "fluxem/fitting.hpp"
#include "fluxem/kerr_mode.hpp"
#include "fluxem/lindblad.hpp"
#include "fluxem/polariton.hpp"
#include "fluxem/polariton_tls.hpp"
#include "fluxem/psd.hpp"
#include "fluxem/semiclassical.hpp"
#include "fluxem/timedomain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace fluxem {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void missing(const std::string& where, const std::string& key) {
    throw config_error(where + "." + key + " is required");
}

double jnum(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) missing(where, key);
    if (!j.at(key).is_number()) throw config_error(where + "." + key + " must be a number");
    return j.at(key).get<double>();
}

double jnum_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number())
        throw config_error("field " + key + " must be a number");
    return j.at(key).get<double>();
}

// frequency field in Hz -> rad/s
double jhz(const json& j, const std::string& key, const std::string& where) {
    return hz_to_rad(jnum(j, key, where));
}

double jhz_or(const json& j, const std::string& key, double fallback_rad) {
    return j.contains(key) ? hz_to_rad(jnum(j, key, "params")) : fallback_rad;
}

std::string jstr(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) missing(where, key);
    if (!j.at(key).is_string()) throw config_error(where + "." + key + " must be a string");
    return j.at(key).get<std::string>();
}

GridAxis axis_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw config_error(where + " must be an object {min,max,points}");
    GridAxis a;
    a.min = jnum(j, "min", where);
    a.max = jnum(j, "max", where);
    a.points = static_cast<int>(jnum(j, "points", where));
    if (j.contains("log")) a.log = j.at("log").get<bool>();
    if (a.points < 1) throw config_error(where + ".points must be >= 1");
    if (a.log && (a.min <= 0.0 || a.max <= 0.0))
        throw config_error(where + " is logarithmic and needs positive bounds");
    return a;
}

json axis_to_json(const GridAxis& a) {
    json j{{"min", a.min}, {"max", a.max}, {"points", a.points}};
    if (a.log) j["log"] = true;
    return j;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot read " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

} // namespace

RunConfig RunConfig::from_json(const json& j) {
    static const char* known[] = {"device",          "subcommand", "out_dir", "workers",
                                  "seed",            "checkpoint_every", "failure_budget",
                                  "plots",           "grid",       "params"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw config_error("unknown run-config field: " + it.key());
    }
    RunConfig c;
    if (j.contains("device")) c.device_path = j.at("device").get<std::string>();
    if (j.contains("subcommand")) c.subcommand = j.at("subcommand").get<std::string>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("checkpoint_every"))
        c.checkpoint_every = j.at("checkpoint_every").get<size_t>();
    if (j.contains("failure_budget")) c.failure_budget = j.at("failure_budget").get<double>();
    if (j.contains("plots")) c.plots = j.at("plots").get<bool>();
    if (j.contains("grid")) {
        if (!j.at("grid").is_object()) throw config_error("grid must be an object");
        for (auto it = j.at("grid").begin(); it != j.at("grid").end(); ++it)
            c.grid[it.key()] = axis_from_json(it.value(), "grid." + it.key());
    }
    if (j.contains("params")) {
        if (!j.at("params").is_object()) throw config_error("params must be an object");
        c.params = j.at("params");
    }
    if (c.failure_budget < 0.0 || c.failure_budget > 1.0)
        throw config_error("failure_budget must lie in [0, 1]");
    if (c.workers < 0) throw config_error("workers must be >= 0");
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    json j;
    try {
        j = json::parse(slurp(path));
    } catch (const json::parse_error& e) {
        throw config_error(path + ": " + e.what());
    }
    return from_json(j);
}

json RunConfig::to_json() const {
    json g = json::object();
    for (const auto& [k, a] : grid) g[k] = axis_to_json(a);
    return json{{"device", device_path},
                {"subcommand", subcommand},
                {"out_dir", out_dir},
                {"workers", workers},
                {"seed", seed},
                {"checkpoint_every", checkpoint_every},
                {"failure_budget", failure_budget},
                {"plots", plots},
                {"grid", g},
                {"params", params}};
}

std::string RunConfig::hash() const {
    json g = json::object();
    for (const auto& [k, a] : grid) g[k] = axis_to_json(a);
    json pay{{"subcommand", subcommand}, {"seed", seed}, {"grid", g}, {"params", params}};
    if (!device_path.empty()) {
        try {
            pay["device"] = json::parse(slurp(device_path));
        } catch (const std::exception&) {
            pay["device"] = device_path;
        }
    }
    return config_hash(pay);
}

const GridAxis& RunConfig::axis(const std::string& name) const {
    auto it = grid.find(name);
    if (it == grid.end()) throw config_error("grid." + name + " is required");
    return it->second;
}

void apply_env_overrides(RunConfig& cfg) {
    if (const char* out = std::getenv("FLUXEM_OUT"); out && *out) cfg.out_dir = out;
    if (const char* w = std::getenv("FLUXEM_WORKERS"); w && *w) {
        char* end = nullptr;
        const long v = std::strtol(w, &end, 10);
        if (end == w || *end != '\0' || v < 0)
            throw config_error("FLUXEM_WORKERS must be a non-negative integer");
        cfg.workers = static_cast<int>(v);
    }
}

// ---------------------------------------------------------------------------
// checkpointed point engine

namespace {

std::vector<std::vector<double>> parse_partial_csv(const std::string& path, size_t width) {
    std::vector<std::vector<double>> rows;
    std::ifstream f(path);
    if (!f) throw config_error("cannot read checkpoint data " + path);
    std::string line;
    bool header_seen = false;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) { // column row
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(width);
        const char* p = line.c_str();
        while (*p) {
            char* end = nullptr;
            row.push_back(std::strtod(p, &end));
            if (end == p) throw config_error("bad number in " + path);
            p = end;
            if (*p == ',') ++p;
        }
        if (row.size() != width)
            throw config_error("checkpoint row width mismatch in " + path);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

SweepOutcome run_points(const SweepJob& job, const RunConfig& cfg, std::atomic<bool>* cancel) {
    if (job.n == 0) throw config_error(job.name + ": empty grid");
    if (!job.point) throw config_error(job.name + ": no point function");
    fs::create_directories(cfg.out_dir);
    const std::string stem = cfg.out_dir + "/" + job.name;
    const std::string partial_path = stem + ".partial.csv";
    const std::string ck_path = stem + ".checkpoint.json";
    const std::string hash = cfg.hash();

    SweepOutcome out;
    out.table.columns = job.columns;
    size_t next = 0;

    if (cfg.resume && fs::exists(ck_path)) {
        json ck;
        try {
            ck = json::parse(slurp(ck_path));
        } catch (const json::parse_error& e) {
            throw config_error(ck_path + ": " + e.what());
        }
        if (ck.value("config_hash", "") != hash)
            throw config_error("checkpoint " + ck_path +
                               " belongs to a different configuration (hash mismatch)");
        if (ck.value("job", "") != job.name)
            throw config_error("checkpoint " + ck_path + " belongs to job " +
                               ck.value("job", "?"));
        next = ck.at("next_index").get<size_t>();
        out.holes = ck.value("holes", size_t{0});
        out.table.rows = parse_partial_csv(partial_path, job.columns.size());
        if (out.table.rows.size() != next || next > job.n)
            throw config_error("checkpoint " + ck_path + " row count mismatch");
    }

    auto hole_row = [&](size_t i) {
        if (job.hole) {
            auto r = job.hole(i);
            if (r.size() == job.columns.size()) return r;
        }
        return std::vector<double>(job.columns.size(), nan_v);
    };

    const std::vector<std::pair<std::string, std::string>> partial_meta{
        {"config_hash", hash}, {"partial", "1"}};

    while (next < job.n) {
        const size_t stop = cfg.checkpoint_every > 0
                                ? std::min(job.n, next + cfg.checkpoint_every)
                                : job.n;
        const size_t m = stop - next;
        std::vector<std::vector<double>> rows(m);
        std::vector<char> bad(m, 0);
        auto one = [&](size_t k) {
            const size_t i = next + k;
            try {
                auto r = job.point(i);
                if (r.size() == job.columns.size()) {
                    rows[k] = std::move(r);
                    return;
                }
            } catch (const std::exception&) {
            }
            bad[k] = 1;
            rows[k] = hole_row(i);
        };
        const ExecPolicy exec = cfg.exec();
#ifdef _OPENMP
        if (exec.parallel && exec.effective_workers() > 1) {
            const int nthreads = exec.effective_workers();
#pragma omp parallel for schedule(dynamic, 4) num_threads(nthreads)
            for (long long k = 0; k < static_cast<long long>(m); ++k)
                one(static_cast<size_t>(k));
        } else
#endif
        {
            (void)exec;
            for (size_t k = 0; k < m; ++k) one(k);
        }
        for (size_t k = 0; k < m; ++k) {
            out.holes += bad[k];
            out.table.rows.push_back(std::move(rows[k]));
        }
        next = stop;

        const bool want_stop = cancel && cancel->load();
        if (next < job.n || want_stop) {
            if (cfg.checkpoint_every > 0 || want_stop) {
                atomic_write_text(partial_path, render_csv(partial_meta, out.table));
                write_json(ck_path, json{{"config_hash", hash},
                                         {"job", job.name},
                                         {"next_index", next},
                                         {"holes", out.holes}});
            }
            if (want_stop) {
                out.cancelled = true;
                return out;
            }
        }
    }

    std::error_code ec;
    fs::remove(partial_path, ec);
    fs::remove(ck_path, ec);
    return out;
}

// ---------------------------------------------------------------------------
// shared driver plumbing

namespace {

struct JobRunner {
    const RunConfig& cfg;
    std::atomic<bool>* cancel;
    json& manifest;
    std::vector<std::pair<std::string, std::string>> base_meta;
    bool cancelled = false;
    size_t holes = 0;
    size_t total = 0;

    Table run(const SweepJob& job,
              std::vector<std::pair<std::string, std::string>> extra_meta = {}) {
        if (cancelled) return {};
        SweepOutcome out = run_points(job, cfg, cancel);
        total += job.n;
        holes += out.holes;
        if (out.cancelled) {
            cancelled = true;
            return std::move(out.table);
        }
        auto meta = base_meta;
        meta.insert(meta.end(), extra_meta.begin(), extra_meta.end());
        write_csv(cfg.out_dir + "/" + job.name + ".csv", meta, out.table);
        record(job.name + ".csv", out.table, out.holes);
        return std::move(out.table);
    }

    // direct table emission for non-grid drivers
    void write_table(const std::string& name, const Table& t,
                     std::vector<std::pair<std::string, std::string>> extra_meta = {}) {
        auto meta = base_meta;
        meta.insert(meta.end(), extra_meta.begin(), extra_meta.end());
        write_csv(cfg.out_dir + "/" + name + ".csv", meta, t);
        record(name + ".csv", t, 0);
        total += t.rows.size();
    }

    void write_aux(const std::string& filename, const std::string& text) {
        atomic_write_text(cfg.out_dir + "/" + filename, text);
        manifest["files"].push_back(json{{"name", filename}});
    }

    void record(const std::string& filename, const Table& t, size_t h) {
        manifest["files"].push_back(json{{"name", filename},
                                         {"rows", t.rows.size()},
                                         {"holes", h},
                                         {"columns", t.columns}});
    }
};

BranchPolicy policy_from_name(const std::string& s) {
    if (s == "lowest_stable") return BranchPolicy::lowest_stable;
    if (s == "highest_stable") return BranchPolicy::highest_stable;
    if (s == "lowest") return BranchPolicy::lowest;
    throw config_error("unknown branch policy: " + s);
}

// Reduced driven-mode parameters: either an explicit params.kerr_mode block
// or derived from the device spectrum at params.flux.
KerrModeConfig kerr_from_params(const DeviceParams& dev, const json& params) {
    KerrModeConfig km;
    km.omega_m = dev.omega_m;
    km.gamma_m = dev.gamma_m;
    if (params.contains("kerr_mode")) {
        const json& k = params.at("kerr_mode");
        km.omega_plus = jhz(k, "omega_plus_Hz", "params.kerr_mode");
        km.kerr = jhz(k, "kerr_Hz", "params.kerr_mode");
        km.kappa = jhz_or(k, "kappa_Hz", dev.kappa_b);
        km.kappa_ex = jhz_or(k, "kappa_ex_Hz", dev.kappa_e);
        km.g = jhz(k, "g_Hz", "params.kerr_mode");
        km.omega_m = jhz_or(k, "omega_m_Hz", dev.omega_m);
        km.gamma_m = jhz_or(k, "gamma_m_Hz", dev.gamma_m);
    } else {
        const double flux = jnum(params, "flux", "params");
        FluxPoint fp{flux, jnum_or(params, "b_par", 0.0), jnum_or(params, "b_perp", 0.0)};
        const PolaritonSpectrum sp = spectrum_at(dev, fp);
        const std::string which = params.value("transition", "upper");
        const Branch branch = which == "lower" ? Branch::lower : Branch::upper;
        const int idx = which == "lower" ? int(Transition::lower) : int(Transition::upper);
        if (which != "lower" && which != "upper")
            throw config_error("params.transition must be lower or upper");
        km.omega_plus = sp.transition[idx];
        km.kerr = kerr_estimate(dev, flux, branch).kerr;
        km.kappa = dev.kappa_b;
        km.kappa_ex = dev.kappa_e;
        km.g = sp.coupling[idx];
    }
    km.check();
    return km;
}

ThreeModeParams three_mode_from_params(const DeviceParams& dev, const json& params) {
    if (!params.contains("three_mode"))
        throw config_error("params.three_mode block is required");
    const json& tm = params.at("three_mode");
    ThreeModeParams par;
    par.omega_c = dev.omega_c;
    par.kappa_b = dev.kappa_b;
    par.gamma_m = dev.gamma_m;
    par.omega_m = dev.omega_m;
    par.alpha_T = dev.alpha_T;
    par.J = dev.J;
    par.atten_product = dev.atten_product;
    par.gamma = jhz(tm, "gamma_q_Hz", "params.three_mode");
    par.g0 = jhz(tm, "g0_Hz", "params.three_mode");
    if (tm.contains("omega_q_Hz"))
        par.omega_q = jhz(tm, "omega_q_Hz", "params.three_mode");
    else
        par.omega_q = transmon_frequency(dev, jnum(tm, "flux", "params.three_mode"));
    par.scan_points = static_cast<int>(jnum_or(tm, "scan_points", par.scan_points));
    par.residual_tol = jnum_or(tm, "residual_tol", par.residual_tol);
    par.check();
    return par;
}

double drive_epsilon(const json& block, const std::string& where, double omega_d,
                     double omega_mode, double atten_product) {
    if (block.contains("epsilon_Hz")) return jhz(block, "epsilon_Hz", where);
    if (block.contains("power_dBm"))
        return drive_from_power(jnum(block, "power_dBm", where), omega_d, omega_mode,
                                atten_product)
            .epsilon;
    missing(where, "epsilon_Hz (or power_dBm)");
}

struct CeqaSetup {
    LineModel model = LineModel::weak;
    KerrModeConfig km;
    TlsConfig tls;
    PumpProbeConfig pp;
    std::vector<double> delta; // rad/s
};

CeqaSetup build_ceqa(const RunConfig& cfg, const DeviceParams& dev) {
    CeqaSetup s;
    s.model = line_model_from_name(jstr(cfg.params, "model", "params"));
    const json pump = cfg.params.value("pump", json::object());
    double mode_freq = 0.0;
    double gamma_m = dev.gamma_m;
    if (s.model == LineModel::weak) {
        s.km = kerr_from_params(dev, cfg.params);
        s.pp.detuning = jhz_or(pump, "detuning_Hz", -s.km.omega_m);
        mode_freq = s.km.omega_plus;
        gamma_m = s.km.gamma_m;
    } else {
        if (!cfg.params.contains("tls")) throw config_error("params.tls block is required");
        const json& t = cfg.params.at("tls");
        s.tls.tilde_omega_q = jhz(t, "tilde_omega_q_Hz", "params.tls");
        s.tls.gamma_q = jhz(t, "gamma_q_Hz", "params.tls");
        s.tls.gamma_phi = jhz_or(t, "gamma_phi_Hz", 0.0);
        s.tls.g0 = jhz(t, "g0_Hz", "params.tls");
        s.tls.omega_m = jhz_or(t, "omega_m_Hz", dev.omega_m);
        s.tls.gamma_m = jhz_or(t, "gamma_m_Hz", dev.gamma_m);
        if (t.contains("approx_delta")) s.tls.approx_delta = t.at("approx_delta").get<bool>();
        s.tls.check();
        s.pp.detuning = jhz_or(pump, "detuning_Hz", s.tls.omega_m);
        mode_freq = s.tls.tilde_omega_q;
        gamma_m = s.tls.gamma_m;
    }
    s.pp.epsilon_d = drive_epsilon(pump, "params.pump", mode_freq + s.pp.detuning, mode_freq,
                                   dev.atten_product);
    s.pp.epsilon_p = cfg.params.contains("probe_epsilon_Hz")
                         ? jhz(cfg.params, "probe_epsilon_Hz", "params")
                         : 0.01 * s.pp.epsilon_d;
    if (cfg.has_axis("delta_Hz")) {
        for (double f : cfg.axis("delta_Hz").values()) s.delta.push_back(hz_to_rad(f));
    } else {
        s.delta = default_delta_grid(gamma_m);
    }
    return s;
}

// ---------------------------------------------------------------------------
// subcommand drivers

void drive_spectrum(const RunConfig& cfg, const DeviceParams& dev, JobRunner& R) {
    const std::vector<double> flux = cfg.axis("flux").values();
    const double b_par = jnum_or(cfg.params, "b_par", 0.0);
    const double b_perp = jnum_or(cfg.params, "b_perp", 0.0);

    SweepJob job;
    job.name = "spectrum";
    job.columns = {"flux",          "omega_q_Hz",    "lower_Hz",       "upper_Hz",
                   "lower_alpha_Hz", "lower_beta_Hz", "upper_gamma_Hz", "gamma_half_Hz",
                   "resp_lower_Hz", "resp_upper_Hz", "g_lower_Hz",     "g_upper_Hz",
                   "kerr_upper_Hz"};
    job.n = flux.size();
    job.point = [&dev, flux, b_par, b_perp](size_t i) {
        const PolaritonSpectrum sp = spectrum_at(dev, FluxPoint{flux[i], b_par, b_perp});
        return std::vector<double>{flux[i],
                                   rad_to_hz(sp.omega_q),
                                   rad_to_hz(sp.transition[0]),
                                   rad_to_hz(sp.transition[1]),
                                   rad_to_hz(sp.transition[2]),
                                   rad_to_hz(sp.transition[3]),
                                   rad_to_hz(sp.transition[4]),
                                   rad_to_hz(sp.transition[5]),
                                   rad_to_hz(sp.responsivity[0]),
                                   rad_to_hz(sp.responsivity[1]),
                                   rad_to_hz(sp.coupling[0]),
                                   rad_to_hz(sp.coupling[1]),
                                   rad_to_hz(sp.kerr_upper)};
    };
    const size_t width = job.columns.size();
    job.hole = [flux, width](size_t i) {
        std::vector<double> r(width, nan_v);
        r[0] = flux[i];
        return r;
    };
    const Table t = R.run(job);
    if (R.cancelled) return;

    if (cfg.plots) {
        std::vector<double> px, py;
        for (const auto& row : t.rows) { px.push_back(row[0]); py.push_back(row[2]); }
        px.push_back(nan_v);
        py.push_back(nan_v);
        for (const auto& row : t.rows) { px.push_back(row[0]); py.push_back(row[3]); }
        R.write_aux("spectrum.svg", svg_polyline(px, py, "branch frequencies vs flux (Hz)"));
    }

    if (cfg.params.contains("lindblad")) {
        const json& lb = cfg.params.at("lindblad");
        const GridAxis probe = axis_from_json(lb.at("probe"), "params.lindblad.probe");
        const std::vector<double> probe_hz = probe.values();
        LindbladConfig lc;
        lc.cavity_levels = static_cast<int>(jnum_or(lb, "cavity_levels", 3));
        lc.transmon_levels = static_cast<int>(jnum_or(lb, "transmon_levels", 3));
        lc.n_th = jnum_or(lb, "n_th", 0.0);
        lc.gamma_q = jhz_or(lb, "gamma_q_Hz", hz_to_rad(1e5));
        lc.kappa = jhz_or(lb, "kappa_Hz", dev.kappa_b);
        lc.epsilon = jhz_or(lb, "epsilon_Hz", hz_to_rad(1e3));
        lc.check();

        SweepJob map;
        map.name = "s21_map";
        map.columns = {"flux", "probe_Hz", "s21"};
        map.n = flux.size() * probe_hz.size();
        const size_t np = probe_hz.size();
        map.point = [&dev, flux, probe_hz, np, lc](size_t i) {
            const double f = flux[i / np];
            const double w = hz_to_rad(probe_hz[i % np]);
            const double wq = transmon_frequency(dev, f);
            const auto sol =
                lindblad_steady_state(dev.omega_c, wq, dev.alpha_T, dev.J, w, lc);
            return std::vector<double>{f, probe_hz[i % np], std::abs(sol.a_mean)};
        };
        map.hole = [flux, probe_hz, np](size_t i) {
            return std::vector<double>{flux[i / np], probe_hz[i % np], nan_v};
        };
        const Table m = R.run(map);
        if (!R.cancelled && cfg.plots) {
            std::vector<double> vals(m.rows.size(), nan_v);
            for (size_t i = 0; i < m.rows.size(); ++i) vals[i] = m.rows[i][2];
            R.write_aux("s21_map.svg",
                        svg_heatmap(np, flux.size(), vals, "|S21| vs (probe, flux)"));
        }
    }
}

void drive_backaction(const RunConfig& cfg, const DeviceParams& dev, JobRunner& R) {
    const KerrModeConfig km = kerr_from_params(dev, cfg.params);
    const BranchPolicy pol = policy_from_name(cfg.params.value("branch", "lowest_stable"));
    const std::vector<double> powers = cfg.axis("power_dBm").values();
    const std::vector<double> dets_hz = cfg.axis("detuning_Hz").values();
    const double atten = dev.atten_product;

    SweepJob job;
    job.name = "backaction";
    job.columns = {"power_dBm",        "detuning_Hz", "n_d",        "Gamma_m_Hz",
                   "delta_omega_m_Hz", "n_branches",  "stable_flag"};
    job.n = powers.size() * dets_hz.size();
    const size_t nd = dets_hz.size();
    job.point = [km, pol, powers, dets_hz, nd, atten](size_t i) {
        const double p = powers[i / nd];
        const double det = hz_to_rad(dets_hz[i % nd]);
        const DriveSpec dr = drive_from_power(p, km.omega_plus + det, km.omega_plus, atten);
        const auto branches = steady_state(km, dr);
        const SteadyBranch& sel = select_branch(branches, pol);
        const SelfEnergy se = self_energy(km, dr, sel, km.omega_m);
        const double gamma_eff = km.gamma_m + 2.0 * se.sigma.real();
        return std::vector<double>{p,
                                   dets_hz[i % nd],
                                   sel.n,
                                   rad_to_hz(gamma_eff),
                                   rad_to_hz(se.sigma.imag()),
                                   double(branches.size()),
                                   gamma_eff > 0.0 ? 1.0 : 0.0};
    };
    job.hole = [powers, dets_hz, nd](size_t i) {
        return std::vector<double>{powers[i / nd], dets_hz[i % nd], nan_v, nan_v,
                                   nan_v,          nan_v,           nan_v};
    };
    const Table t = R.run(job, {{"branch", cfg.params.value("branch", "lowest_stable")}});
    if (!R.cancelled && cfg.plots) {
        std::vector<double> vals(t.rows.size(), nan_v);
        for (size_t i = 0; i < t.rows.size(); ++i) vals[i] = t.rows[i][3];
        R.write_aux("backaction.svg", svg_heatmap(nd, powers.size(), vals,
                                                  "effective mechanical linewidth (Hz)"));
    }
}

void drive_instability(const RunConfig& cfg, const DeviceParams& dev, JobRunner& R) {
    const ThreeModeParams par = three_mode_from_params(dev, cfg.params);
    const std::vector<double> powers = cfg.axis("power_dBm").values();
    const std::vector<double> freqs_hz = cfg.axis("freq_Hz").values();

    SweepJob job;
    job.name = "instability";
    job.columns = {"power_dBm", "freq_Hz", "n_fp", "n_stable", "mech_unstable"};
    job.n = powers.size() * freqs_hz.size();
    const size_t nf = freqs_hz.size();
    job.point = [par, powers, freqs_hz, nf](size_t i) {
        const double p = powers[i / nf];
        const double wd = hz_to_rad(freqs_hz[i % nf]);
        const ThreeModeDrive dr{wd, drive_from_power(p, wd, wd, par.atten_product).epsilon};
        const auto fps = find_fixed_points(par, dr);
        int n_stable = 0;
        bool mech = false;
        for (const auto& fp : fps) {
            const FixedPointReport rep = classify_stability(par, dr, fp);
            if (rep.classification == Stability::stable) ++n_stable;
            if (rep.classification == Stability::mechanically_unstable) mech = true;
        }
        return std::vector<double>{p, freqs_hz[i % nf], double(fps.size()),
                                   double(n_stable), mech ? 1.0 : 0.0};
    };
    job.hole = [powers, freqs_hz, nf](size_t i) {
        return std::vector<double>{powers[i / nf], freqs_hz[i % nf], -1.0, nan_v, nan_v};
    };
    const Table t = R.run(job, {{"hole_convention", "n_fp=-1 marks a solver failure"}});
    if (!R.cancelled && cfg.plots) {
        std::vector<double> vals(t.rows.size(), nan_v);
        for (size_t i = 0; i < t.rows.size(); ++i) vals[i] = t.rows[i][4];
        R.write_aux("instability.svg",
                    svg_heatmap(nf, powers.size(), vals, "mechanical instability region"));
    }
}

void drive_ceqa(const RunConfig& cfg, const DeviceParams& dev, JobRunner& R) {
    const CeqaSetup s = build_ceqa(cfg, dev);

    // one serial call up front for the pump bookkeeping in the header
    ProbeResponse probe0 = s.model == LineModel::weak
                               ? weak_kerr_response(s.km, s.pp, {0.0})
                               : tls_response(s.tls, s.pp, {0.0});

    SweepJob job;
    job.name = "ceqa";
    job.columns = {"delta_Hz", "s21"};
    job.n = s.delta.size();
    job.point = [s](size_t i) {
        const std::vector<double> d{s.delta[i]};
        const ProbeResponse r = s.model == LineModel::weak
                                    ? weak_kerr_response(s.km, s.pp, d)
                                    : tls_response(s.tls, s.pp, d);
        return std::vector<double>{rad_to_hz(s.delta[i]), r.s21[0]};
    };
    job.hole = [s](size_t i) { return std::vector<double>{rad_to_hz(s.delta[i]), nan_v}; };
    const Table t =
        R.run(job, {{"model", line_model_name(s.model)},
                    {"n_pump", format_double(probe0.n_pump)},
                    {"pump_detuning_Hz", format_double(rad_to_hz(s.pp.detuning))},
                    {"ansatz_warning", probe0.ansatz_warning ? "1" : "0"}});
    if (!R.cancelled && cfg.plots) {
        std::vector<double> px, py;
        for (const auto& row : t.rows) { px.push_back(row[0]); py.push_back(row[1]); }
        R.write_aux("ceqa.svg", svg_polyline(px, py, "probe response vs offset (Hz)"));
    }
}

void drive_fit(const RunConfig& cfg, const DeviceParams& dev, JobRunner& R) {
    const std::string trace_path = jstr(cfg.params, "trace", "params");
    const Trace trace = load_trace_csv(trace_path);
    const CeqaSetup s = build_ceqa(cfg, dev);

    FitInit init;
    if (cfg.params.contains("init")) {
        const json& in = cfg.params.at("init");
        init.g0 = jhz_or(in, "g0_Hz", 0.0);
        init.gamma_m = jhz_or(in, "gamma_m_Hz", 0.0);
        init.center = jhz_or(in, "center_Hz", 0.0);
        init.amplitude = jnum_or(in, "amplitude", 0.0);
        init.background = jnum_or(in, "background", 0.0);
    }

    const FitReport rep = s.model == LineModel::weak ? fit_g(trace, s.km, s.pp, init)
                                                     : fit_g(trace, s.tls, s.pp, init);
    R.write_aux("fit.json", fit_report_json(rep) + "\n");

    // model curve at the fitted parameters, on the data grid
    std::vector<double> shifted(trace.delta.size());
    for (size_t i = 0; i < shifted.size(); ++i) shifted[i] = trace.delta[i] - rep.center;
    ProbeResponse model;
    if (s.model == LineModel::weak) {
        KerrModeConfig km = s.km;
        km.g = rep.g0;
        km.gamma_m = rep.gamma_m;
        model = weak_kerr_response(km, s.pp, shifted);
    } else {
        TlsConfig tc = s.tls;
        tc.g0 = rep.g0;
        tc.gamma_m = rep.gamma_m;
        model = tls_response(tc, s.pp, shifted);
    }
    Table t;
    t.columns = {"delta_Hz", "s21_data", "s21_fit"};
    for (size_t i = 0; i < trace.delta.size(); ++i)
        t.rows.push_back({rad_to_hz(trace.delta[i]), trace.s21[i],
                          rep.amplitude * model.s21[i] + rep.background});
    R.write_table("fit_curve", t,
                  {{"model", line_model_name(s.model)},
                   {"converged", rep.converged ? "1" : "0"},
                   {"g0_Hz", format_double(rad_to_hz(rep.g0))},
                   {"g0_sigma_Hz", format_double(rad_to_hz(rep.g0_sigma))}});
    if (!rep.converged)
        throw numerical_error("fit did not converge: " + rep.message);
    if (cfg.plots) {
        std::vector<double> px, py;
        for (const auto& row : t.rows) { px.push_back(row[0]); py.push_back(row[1]); }
        px.push_back(nan_v);
        py.push_back(nan_v);
        for (const auto& row : t.rows) { px.push_back(row[0]); py.push_back(row[2]); }
        R.write_aux("fit.svg", svg_polyline(px, py, "trace and fitted line shape"));
    }
}

void drive_fixed_points(const RunConfig& cfg, const DeviceParams& dev, JobRunner& R) {
    const ThreeModeParams par = three_mode_from_params(dev, cfg.params);
    if (!cfg.params.contains("drive")) throw config_error("params.drive block is required");
    const json& d = cfg.params.at("drive");
    ThreeModeDrive dr;
    dr.omega_d = jhz(d, "omega_d_Hz", "params.drive");
    dr.epsilon = drive_epsilon(d, "params.drive", dr.omega_d, dr.omega_d, par.atten_product);

    const auto fps = find_fixed_points(par, dr);
    Table t;
    t.columns = {"idx",  "x", "y", "p", "q", "u", "v", "n_cavity", "n_transmon",
                 "classification", "max_re_Hz", "mech_weight"};
    json eig = json::array();
    for (size_t k = 0; k < fps.size(); ++k) {
        const FixedPointReport rep = classify_stability(par, dr, fps[k]);
        double max_re = rep.eigenvalues[0].real();
        json ev = json::array();
        for (const auto& l : rep.eigenvalues) {
            max_re = std::max(max_re, l.real());
            ev.push_back(json{{"re_Hz", rad_to_hz(l.real())}, {"im_Hz", rad_to_hz(l.imag())}});
        }
        eig.push_back(ev);
        const ThreeModeState& st = rep.state;
        t.rows.push_back({double(k), st.x, st.y, st.p, st.q, st.u, st.v,
                          st.x * st.x + st.y * st.y, st.p * st.p + st.q * st.q,
                          double(int(rep.classification)), rad_to_hz(max_re),
                          rep.mech_weight});
    }
    R.manifest["eigenvalues"] = eig;
    R.write_table("fixed_points", t,
                  {{"classification", "0=stable 1=unstable 2=mechanically_unstable"}});
}

void drive_polariton_map(const RunConfig& cfg, const DeviceParams& dev, JobRunner& R) {
    const double flux = jnum(cfg.params, "flux", "params");
    FluxPoint fp{flux, jnum_or(cfg.params, "b_par", 0.0), jnum_or(cfg.params, "b_perp", 0.0)};
    const PolaritonSpectrum sp = spectrum_at(dev, fp);
    ThermalWeights w;
    if (cfg.params.contains("weights")) {
        const json& jw = cfg.params.at("weights");
        w.ground = jnum_or(jw, "ground", w.ground);
        w.minus = jnum_or(jw, "minus", w.minus);
        w.plus = jnum_or(jw, "plus", w.plus);
    }
    const std::vector<TransitionTls> trs = enumerate_transitions(sp, w);
    const MechMode mech{dev.omega_m, dev.gamma_m};
    const std::vector<double> powers = cfg.axis("power_dBm").values();
    const std::vector<double> freqs_hz = cfg.axis("freq_Hz").values();
    const double atten = dev.atten_product;
    const int scan_points = static_cast<int>(jnum_or(cfg.params, "scan_points", 400));

    json jt = json::array();
    for (const auto& t : trs)
        jt.push_back(json{{"label", transition_name(t.label)},
                          {"omega_Hz", rad_to_hz(t.omega)},
                          {"g_Hz", rad_to_hz(t.g)},
                          {"gamma_Hz", rad_to_hz(t.gamma)},
                          {"gamma_phi_Hz", rad_to_hz(t.gamma_phi)},
                          {"thermal_weight", t.thermal_weight}});
    R.manifest["transitions"] = jt;

    SweepJob job;
    job.name = "polariton_map";
    job.columns = {"power_dBm", "freq_Hz", "unstable", "which_transitions"};
    job.n = powers.size() * freqs_hz.size();
    const size_t nf = freqs_hz.size();
    job.point = [trs, mech, powers, freqs_hz, nf, atten, scan_points](size_t i) {
        const double p = powers[i / nf];
        const double wd = hz_to_rad(freqs_hz[i % nf]);
        const double eps0 = drive_from_power(p, wd, wd, atten).epsilon;
        unsigned mask = 0;
        for (size_t k = 0; k < trs.size(); ++k) {
            const TransitionTls& t = trs[k];
            const double eps = std::sqrt(t.thermal_weight) * eps0;
            const double det = wd - t.omega;
            const auto roots = tls_fixed_points(t, mech, det, eps, scan_points);
            for (const auto& st : roots) {
                if (tls_stability(t, mech, det, eps, st).unstable) {
                    mask |= 1u << k;
                    break;
                }
            }
        }
        return std::vector<double>{p, freqs_hz[i % nf], mask ? 1.0 : 0.0, double(mask)};
    };
    job.hole = [powers, freqs_hz, nf](size_t i) {
        return std::vector<double>{powers[i / nf], freqs_hz[i % nf], nan_v, nan_v};
    };
    const Table t = R.run(
        job, {{"which_transitions",
               "bitmask; bit i set when transitions[i] (manifest order) destabilizes the beam"}});
    if (!R.cancelled && cfg.plots) {
        std::vector<double> vals(t.rows.size(), nan_v);
        for (size_t i = 0; i < t.rows.size(); ++i) vals[i] = t.rows[i][2];
        R.write_aux("polariton_map.svg",
                    svg_heatmap(nf, powers.size(), vals, "union instability region"));
    }
}

void drive_timedomain(const RunConfig& cfg, const DeviceParams& dev, JobRunner& R) {
    const std::string model = jstr(cfg.params, "model", "params");
    const double omega_m = dev.omega_m;
    const double period = two_pi / omega_m;

    IntegrationConfig ic;
    ic.t_end = cfg.params.contains("t_end_s")
                   ? jnum(cfg.params, "t_end_s", "params")
                   : jnum_or(cfg.params, "t_end_periods", 2000.0) * period;
    ic.sample_rate = cfg.params.contains("sample_rate_Hz")
                         ? jnum(cfg.params, "sample_rate_Hz", "params")
                         : jnum_or(cfg.params, "samples_per_period", 32.0) / period;
    ic.rel_tol = jnum_or(cfg.params, "rel_tol", ic.rel_tol);
    ic.abs_tol = jnum_or(cfg.params, "abs_tol", ic.abs_tol);
    ic.check();

    const json init = cfg.params.value("init", json::object());
    TimeSeries ts;
    double kappa_out = 0.0;
    if (model == "two_mode") {
        const KerrModeConfig km = kerr_from_params(dev, cfg.params);
        const TwoModeParams tp{km.kappa, km.kerr, km.g, km.omega_m, km.gamma_m, 1e-9};
        const double det = jhz(cfg.params, "detuning_Hz", "params");
        const double eps = drive_epsilon(cfg.params, "params", km.omega_plus + det,
                                         km.omega_plus, dev.atten_product);
        std::array<double, 4> y0{jnum_or(init, "x", 0.0), jnum_or(init, "y", 0.0),
                                 jnum_or(init, "u", 0.0), jnum_or(init, "v", 0.0)};
        if (init.contains("beta_abs")) {
            const double a = jnum(init, "beta_abs", "params.init");
            const double ph = jnum_or(init, "beta_phase", 0.0);
            y0[2] = a * std::cos(ph);
            y0[3] = a * std::sin(ph);
        }
        ts = integrate_two_mode(tp, det, eps, y0, ic);
        kappa_out = km.kappa_ex > 0.0 ? km.kappa_ex : km.kappa;
    } else if (model == "three_mode") {
        const ThreeModeParams par = three_mode_from_params(dev, cfg.params);
        if (!cfg.params.contains("drive"))
            throw config_error("params.drive block is required");
        const json& d = cfg.params.at("drive");
        ThreeModeDrive dr;
        dr.omega_d = jhz(d, "omega_d_Hz", "params.drive");
        dr.epsilon =
            drive_epsilon(d, "params.drive", dr.omega_d, dr.omega_d, par.atten_product);
        ThreeModeState s0;
        s0.x = jnum_or(init, "x", 0.0);
        s0.y = jnum_or(init, "y", 0.0);
        s0.p = jnum_or(init, "p", 0.0);
        s0.q = jnum_or(init, "q", 0.0);
        s0.u = jnum_or(init, "u", 0.0);
        s0.v = jnum_or(init, "v", 0.0);
        if (init.contains("beta_abs")) {
            const double a = jnum(init, "beta_abs", "params.init");
            const double ph = jnum_or(init, "beta_phase", 0.0);
            s0.u = a * std::cos(ph);
            s0.v = a * std::sin(ph);
        }
        ts = integrate_three_mode(par, dr, s0, ic);
        kappa_out = dev.kappa_e > 0.0 ? dev.kappa_e : par.kappa_b;
    } else {
        throw config_error("params.model must be two_mode or three_mode");
    }

    Table t;
    const bool three = !ts.zeta.empty();
    t.columns = three ? std::vector<std::string>{"t_s",      "re_alpha", "im_alpha",
                                                 "re_zeta",  "im_zeta",  "re_beta",
                                                 "im_beta"}
                      : std::vector<std::string>{"t_s", "re_alpha", "im_alpha", "re_beta",
                                                 "im_beta"};
    for (size_t i = 0; i < ts.t.size(); ++i) {
        std::vector<double> row{ts.t[i], ts.alpha[i].real(), ts.alpha[i].imag()};
        if (three) {
            row.push_back(ts.zeta[i].real());
            row.push_back(ts.zeta[i].imag());
        }
        row.push_back(ts.beta[i].real());
        row.push_back(ts.beta[i].imag());
        t.rows.push_back(std::move(row));
    }
    const RunClassification rc = classify_run(ts, omega_m);
    R.write_table("timeseries", t,
                  {{"model", model},
                   {"unstable", rc.unstable ? "1" : "0"},
                   {"saturated", rc.saturated ? "1" : "0"},
                   {"step_underflow", ts.step_underflow ? "1" : "0"}});

    json cls{{"unstable", rc.unstable},
             {"saturated", rc.saturated},
             {"envelope_rate_per_s", rc.envelope_rate},
             {"step_underflow", ts.step_underflow},
             {"steps", ts.steps}};
    if (ts.step_underflow) cls["failure_time_s"] = ts.failure_time;

    // output-field spectrum in the drive frame
    const json psd_par = cfg.params.value("psd", json::object());
    const double discard = jnum_or(psd_par, "discard_fraction", 0.3);
    const size_t segment = static_cast<size_t>(jnum_or(psd_par, "segment", 0.0));
    const double sideband_factor = jnum_or(psd_par, "sideband_factor", 10.0);
    try {
        std::vector<std::complex<double>> sig(ts.alpha.size());
        const double root_kappa = std::sqrt(kappa_out);
        for (size_t i = 0; i < sig.size(); ++i) sig[i] = root_kappa * ts.alpha[i];
        PsdResult psd = welch_psd(sig, ic.sample_rate, discard, segment);
        psd = comb_detect(std::move(psd), omega_m, sideband_factor);
        Table pt;
        pt.columns = {"freq_Hz", "psd"};
        for (size_t i = 0; i < psd.freq.size(); ++i)
            pt.rows.push_back({psd.freq[i], psd.psd[i]});
        R.write_table("psd", pt,
                      {{"comb_detected", psd.comb_detected ? "1" : "0"},
                       {"comb_spacing_Hz", format_double(psd.comb_spacing)}});
        json pk = json::array();
        for (const auto& p : psd.peaks)
            pk.push_back(json{{"freq_Hz", p.freq}, {"height", p.height}});
        cls["comb_detected"] = psd.comb_detected;
        cls["comb_spacing_Hz"] = psd.comb_spacing;
        cls["psd_peaks"] = pk;
    } catch (const std::exception& e) {
        cls["psd_error"] = e.what();
    }
    R.manifest["classification"] = cls;

    if (cfg.plots) {
        std::vector<double> px, py;
        for (size_t i = 0; i < ts.t.size(); ++i) {
            px.push_back(ts.t[i]);
            py.push_back(std::abs(ts.beta[i]));
        }
        R.write_aux("timedomain.svg", svg_polyline(px, py, "|beam amplitude| vs t (s)"));
    }
}

void drive_calibrate(const RunConfig& cfg, const DeviceParams& dev, JobRunner& R) {
    CalibrationRecord rec;
    rec.atten_product = dev.atten_product;
    rec.gain_dB = dev.gain_dB;
    rec.kappa_e = dev.kappa_e;
    json detail = json::object();
    bool any = false;

    if (cfg.params.contains("reflection")) {
        any = true;
        const json& rj = cfg.params.at("reflection");
        const Trace tr = load_trace_csv(jstr(rj, "trace", "params.reflection"));
        const ReflectionFitResult rf = reflection_fit(tr.delta, tr.s21);
        rec.kappa_e = rf.kappa_e;
        detail["reflection"] = json{{"kappa_e_Hz", rad_to_hz(rf.kappa_e)},
                                    {"kappa_e_sigma_Hz", rad_to_hz(rf.kappa_e_sigma)},
                                    {"kappa_internal_Hz", rad_to_hz(rf.kappa_internal)},
                                    {"kappa_internal_sigma_Hz",
                                     rad_to_hz(rf.kappa_internal_sigma)},
                                    {"omega_c_Hz", rad_to_hz(rf.omega_c)},
                                    {"omega_c_sigma_Hz", rad_to_hz(rf.omega_c_sigma)},
                                    {"residual_norm", rf.residual_norm},
                                    {"converged", rf.converged}};
        if (!rf.converged)
            throw numerical_error("reflection fit did not converge: " + rf.message);
    }

    if (cfg.params.contains("stark")) {
        any = true;
        const json& sj = cfg.params.at("stark");
        const double delta = sj.contains("delta_Hz")
                                 ? jhz(sj, "delta_Hz", "params.stark")
                                 : transmon_frequency(dev, jnum(sj, "flux", "params.stark")) -
                                       dev.omega_c;
        const DispersiveShift ds = dispersive_shift(dev.J, delta, dev.alpha_T, dev.kappa_b);
        rec.chi = ds.chi;
        const auto power_w = sj.at("power_W").get<std::vector<double>>();
        auto shift = sj.at("shift_Hz").get<std::vector<double>>();
        for (auto& s : shift) s = hz_to_rad(s);
        const double omega_d = jhz_or(sj, "omega_d_Hz", dev.omega_c);
        const double probe_det = jhz(sj, "probe_detuning_Hz", "params.stark");
        const double kappa = jhz_or(sj, "kappa_Hz", dev.kappa_b);
        rec.atten_product =
            stark_atten_product(power_w, shift, ds.chi, omega_d, probe_det, kappa);
        detail["stark"] = json{{"chi_Hz", rad_to_hz(ds.chi)},
                               {"near_pole", ds.near_pole},
                               {"atten_product_s", rec.atten_product}};
    }

    if (cfg.params.contains("gain")) {
        any = true;
        const json& gj = cfg.params.at("gain");
        const auto p_out = gj.at("p_out_W").get<std::vector<double>>();
        const auto n_d = gj.at("n_d").get<std::vector<double>>();
        const double omega = jhz_or(gj, "omega_Hz", dev.omega_c);
        rec.gain_dB = output_gain(p_out, n_d, rec.kappa_e, omega);
        detail["gain"] = json{{"gain_dB", rec.gain_dB}};
    }

    if (cfg.params.contains("thermometry")) {
        any = true;
        const json& tj = cfg.params.at("thermometry");
        ThermometryParams tp;
        tp.g_plus = jhz(tj, "g_plus_Hz", "params.thermometry");
        tp.kappa = jhz_or(tj, "kappa_Hz", dev.kappa_b);
        tp.gamma_m = dev.gamma_m;
        tp.kappa_e = rec.kappa_e;
        tp.omega_m = dev.omega_m;
        tp.gain_dB = jnum_or(tj, "gain_dB", rec.gain_dB);
        const auto svv = tj.at("svv_over_hw").get<std::vector<double>>();
        const auto n_d = tj.at("n_d").get<std::vector<double>>();
        const ThermometryResult th = sideband_thermometry(svv, n_d, tp);
        rec.n_m = th.n_m;
        rec.T_mode = th.T_mode;
        detail["thermometry"] = json{{"n_m", th.n_m},
                                     {"T_mode_K", th.T_mode},
                                     {"intercept", th.intercept}};
    }

    if (!any)
        throw config_error(
            "params must contain at least one of reflection/stark/gain/thermometry");
    R.write_aux("calibration.json", calibration_json(rec) + "\n");
    R.manifest["calibration"] = detail;
}

} // namespace

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names{
        "spectrum",   "backaction",   "instability-map", "ceqa",      "fit",
        "fixed-points", "polariton-map", "timedomain",   "calibrate"};
    return names;
}

RunStatus run_subcommand(const RunConfig& cfg, std::atomic<bool>* cancel) {
    const auto& names = subcommand_names();
    if (std::find(names.begin(), names.end(), cfg.subcommand) == names.end())
        throw config_error("unknown subcommand: '" + cfg.subcommand + "'");
    if (cfg.device_path.empty()) throw config_error("device file path is required");
    const DeviceParams dev = load_device(cfg.device_path);
    fs::create_directories(cfg.out_dir);

    json manifest{{"subcommand", cfg.subcommand},
                  {"config", cfg.to_json()},
                  {"config_hash", cfg.hash()},
                  {"code_version", code_version},
                  {"files", json::array()}};
    JobRunner R{cfg, cancel, manifest,
                {{"config_hash", cfg.hash()},
                 {"code_version", code_version},
                 {"subcommand", cfg.subcommand}}};

    if (cfg.subcommand == "spectrum") drive_spectrum(cfg, dev, R);
    else if (cfg.subcommand == "backaction") drive_backaction(cfg, dev, R);
    else if (cfg.subcommand == "instability-map") drive_instability(cfg, dev, R);
    else if (cfg.subcommand == "ceqa") drive_ceqa(cfg, dev, R);
    else if (cfg.subcommand == "fit") drive_fit(cfg, dev, R);
    else if (cfg.subcommand == "fixed-points") drive_fixed_points(cfg, dev, R);
    else if (cfg.subcommand == "polariton-map") drive_polariton_map(cfg, dev, R);
    else if (cfg.subcommand == "timedomain") drive_timedomain(cfg, dev, R);
    else if (cfg.subcommand == "calibrate") drive_calibrate(cfg, dev, R);

    RunStatus st{R.cancelled, R.holes, R.total};
    if (!st.cancelled) {
        write_json(cfg.out_dir + "/manifest.json", manifest);
        if (st.total > 0 &&
            double(st.holes) > cfg.failure_budget * double(st.total)) {
            std::ostringstream msg;
            msg << "failure budget exceeded: " << st.holes << " of " << st.total
                << " points failed (budget " << cfg.failure_budget << ")";
            throw numerical_error(msg.str());
        }
    }
    return st;
}

} // namespace fluxem
