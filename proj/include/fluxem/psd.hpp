#pragma once

#include <complex>
#include <vector>

namespace fluxem {

// in-place radix-2 transform; size must be a power of two
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse = false);

struct Peak {
    double freq = 0.0;   // Hz
    double height = 0.0; // PSD units
};

struct PsdResult {
    std::vector<double> freq; // Hz, offsets from the drive, ascending
    std::vector<double> psd;  // |amp|^2 / Hz
    std::vector<Peak> peaks;
    bool comb_detected = false;
    double comb_spacing = 0.0; // Hz
};

// Averaged periodogram of a complex rotating-frame series: leading fraction
// discarded, complex mean removed (so the integral approximates the
// variance), Hann-windowed power-of-two segments at 50% overlap. segment = 0
// picks the largest power of two giving at least 8 windows.
PsdResult welch_psd(const std::vector<std::complex<double>>& series, double sample_rate,
                    double discard_fraction = 0.3, size_t segment = 0);

// Local maxima whose height stands above the deeper flanking valley by
// `prominence_factor` (ratio, so overall scaling cancels) and above
// 3x the median floor.
std::vector<Peak> detect_peaks(const std::vector<double>& freq,
                               const std::vector<double>& psd,
                               double prominence_factor = 4.0);

// Comb criterion: at least 3 teeth on a common spacing within 5% of the
// mechanical frequency, and the PSD near +-2 omega_m above the median floor
// by `sideband_factor`. Fills comb_detected / comb_spacing on a copy.
PsdResult comb_detect(PsdResult psd, double omega_m, double sideband_factor = 10.0);

} // namespace fluxem
