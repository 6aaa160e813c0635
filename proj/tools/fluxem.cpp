#include <CLI11.hpp>
#include <json.hpp>

#include "fluxem/device.hpp"
#include "fluxem/sweep.hpp"

#include <atomic>
#include <csignal>
#include <iostream>
#include <optional>
#include <string>

namespace {

std::atomic<bool> g_cancel{false};

void on_signal(int) { g_cancel.store(true); }

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    int workers = -1;
    bool resume = false;
    uint64_t seed_value = 0;
    std::optional<uint64_t> seed;
};

void emit_error(const char* type, const std::string& message) {
    nlohmann::json err{{"error", {{"type", type}, {"message", message}}}};
    std::cerr << err.dump() << "\n";
}

int run_one(const std::string& name, const CommonFlags& f) {
    try {
        fluxem::RunConfig cfg = fluxem::RunConfig::load(f.config_path);
        if (name != "sweep") cfg.subcommand = name;
        if (cfg.subcommand.empty())
            throw fluxem::config_error("config must name a subcommand when run via 'sweep'");
        fluxem::apply_env_overrides(cfg);
        if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
        if (f.workers >= 0) cfg.workers = f.workers;
        if (f.seed) cfg.seed = *f.seed;
        cfg.resume = f.resume;

        const fluxem::RunStatus st = fluxem::run_subcommand(cfg, &g_cancel);
        if (st.cancelled) {
            nlohmann::json note{{"status", "cancelled"},
                                {"note", "checkpoint written; rerun with --resume"}};
            std::cerr << note.dump() << "\n";
        } else {
            nlohmann::json note{{"status", "ok"},
                                {"out_dir", cfg.out_dir},
                                {"points", st.total},
                                {"holes", st.holes}};
            std::cout << note.dump() << "\n";
        }
        return 0;
    } catch (const fluxem::config_error& e) {
        emit_error("config", e.what());
        return 2;
    } catch (const fluxem::numerical_error& e) {
        emit_error("numerical", e.what());
        return 3;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    CLI::App app{"simulation and stability analysis for a flux-mediated "
                 "cavity-electromechanical device"};
    app.require_subcommand(1);

    std::vector<std::string> names = fluxem::subcommand_names();
    names.push_back("sweep"); // generic: subcommand taken from the config file

    static const std::map<std::string, std::string> blurbs{
        {"spectrum", "polariton transition frequencies (and optional |S21| map) vs flux"},
        {"backaction", "mechanical linewidth / frequency-shift map vs drive power and detuning"},
        {"instability-map", "fixed-point census and mechanical-instability phase diagram"},
        {"ceqa", "pump-probe absorption line shape of one driven branch"},
        {"fit", "extract the electromechanical coupling from a measured trace"},
        {"fixed-points", "steady states and stability at a single drive point"},
        {"polariton-map", "union instability map over the thermally occupied transitions"},
        {"timedomain", "integrate the classical flow and spectrum-analyze the output"},
        {"calibrate", "input attenuation, gain, linewidths, and thermometry from datasets"},
        {"sweep", "run whatever subcommand the config file names"}};

    std::map<std::string, CommonFlags> flags;
    int exit_code = 0;
    for (const auto& name : names) {
        CLI::App* sub = app.add_subcommand(name, blurbs.at(name));
        CommonFlags& f = flags[name];
        sub->add_option("-c,--config", f.config_path, "run configuration JSON")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("-w,--workers", f.workers, "worker threads (0 = all cores)");
        sub->add_option("-o,--out", f.out_dir, "output directory");
        sub->add_flag("--resume", f.resume, "resume from a checkpoint if present");
        auto* seed_opt =
            sub->add_option("--seed", f.seed_value, "RNG seed (Monte-Carlo fits)");
        sub->callback([name, &f, seed_opt, &exit_code]() {
            if (*seed_opt) f.seed = f.seed_value;
            exit_code = run_one(name, f);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0) {
            emit_error("config", e.what());
            return 2;
        }
        return app.exit(e); // --help and friends
    }
    return exit_code;
}
