#pragma once

#include <string>
#include <vector>

#include "fluxem/ceqa.hpp"

namespace fluxem {

enum class LineModel { weak, tls };
LineModel line_model_from_name(const std::string& name);
const char* line_model_name(LineModel m);

struct Trace {
    std::vector<double> delta; // probe offset, rad/s
    std::vector<double> s21;   // linear magnitude
};

// two columns: frequency_Hz, S21_linear_magnitude ('#' lines skipped)
Trace load_trace_csv(const std::string& path);
void save_trace_csv(const std::string& path, const Trace& t);

// zero fields are seeded from the trace (dip FWHM and depth heuristics)
struct FitInit {
    double g0 = 0.0;
    double gamma_m = 0.0;
    double center = 0.0;
    double amplitude = 0.0;
    double background = 0.0;
    // pin gamma_m at the provided value instead of floating it; the intrinsic
    // linewidth is usually known from an independent ringdown measurement, and
    // pinning it removes the width/depth trade-off that noise can exploit
    bool gamma_m_fixed = false;
};

struct FitReport {
    LineModel model = LineModel::weak;
    double g0 = 0.0, g0_sigma = 0.0;
    double gamma_m = 0.0, gamma_m_sigma = 0.0;
    double center = 0.0, center_sigma = 0.0;
    double amplitude = 0.0, amplitude_sigma = 0.0;
    double background = 0.0, background_sigma = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    bool at_bound = false;
    std::string message;
};

// Least-squares extraction of the coupling from an absorption trace:
// amplitude * model(delta - center; g0, gamma_m) + background. The remaining
// model parameters are held at the supplied configuration.
FitReport fit_g(const Trace& trace, const KerrModeConfig& cfg, const PumpProbeConfig& pp,
                const FitInit& init = {});
FitReport fit_g(const Trace& trace, const TlsConfig& tls, const PumpProbeConfig& pp,
                const FitInit& init = {});

std::string fit_report_json(const FitReport& r);

// inverse-variance-weighted combination of repeated fits
struct FitAggregate {
    double g0 = 0.0;
    double g0_sigma = 0.0;
    int count = 0;
};
FitAggregate aggregate_fits(const std::vector<FitReport>& fits);

} // namespace fluxem
