#include "fluxem/psd.hpp"

#include "fluxem/constants.hpp"
#include "fluxem/device.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace fluxem {

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw config_error("fft length must be a nonzero power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 1.0 : -1.0) * two_pi / double(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= double(n);
    }
}

PsdResult welch_psd(const std::vector<std::complex<double>>& series, double sample_rate,
                    double discard_fraction, size_t segment) {
    if (!(sample_rate > 0.0)) throw config_error("sample_rate must be positive");
    if (discard_fraction < 0.0 || discard_fraction >= 1.0)
        throw config_error("discard_fraction must lie in [0, 1)");

    const size_t skip = size_t(discard_fraction * double(series.size()));
    const size_t tail = series.size() - skip;

    if (segment == 0) {
        // largest power of two that still yields ~8 half-overlapped windows
        size_t want = tail / 5;
        segment = 64;
        while (segment * 2 <= want) segment *= 2;
    }
    if (segment < 16 || (segment & (segment - 1)) != 0)
        throw config_error("segment length must be a power of two >= 16");
    if (tail < segment)
        throw config_error("series too short for the requested segment length");

    std::complex<double> mean(0.0, 0.0);
    for (size_t i = skip; i < series.size(); ++i) mean += series[i];
    mean /= double(tail);

    std::vector<double> window(segment);
    double wsum2 = 0.0;
    for (size_t k = 0; k < segment; ++k) {
        window[k] = 0.5 * (1.0 - std::cos(two_pi * double(k) / double(segment)));
        wsum2 += window[k] * window[k];
    }

    PsdResult out;
    out.psd.assign(segment, 0.0);
    const size_t hop = segment / 2;
    size_t count = 0;
    std::vector<std::complex<double>> buf(segment);
    for (size_t start = skip; start + segment <= series.size(); start += hop) {
        for (size_t k = 0; k < segment; ++k)
            buf[k] = (series[start + k] - mean) * window[k];
        fft_radix2(buf);
        for (size_t k = 0; k < segment; ++k) out.psd[k] += std::norm(buf[k]);
        ++count;
    }
    const double scale = 1.0 / (double(count) * sample_rate * wsum2);
    for (auto& p : out.psd) p *= scale;

    // reorder to ascending frequency about zero
    std::vector<double> shifted(segment);
    out.freq.resize(segment);
    const double df = sample_rate / double(segment);
    for (size_t k = 0; k < segment; ++k) {
        const size_t src = (k + segment / 2) % segment;
        shifted[k] = out.psd[src];
        out.freq[k] = (double(k) - double(segment / 2)) * df;
    }
    out.psd = std::move(shifted);
    out.peaks = detect_peaks(out.freq, out.psd);
    return out;
}

namespace {

double median_of(std::vector<double> v) {
    const size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + m, v.end());
    return v[m];
}

} // namespace

std::vector<Peak> detect_peaks(const std::vector<double>& freq,
                               const std::vector<double>& psd,
                               double prominence_factor) {
    std::vector<Peak> peaks;
    const size_t n = psd.size();
    if (n < 3) return peaks;
    const double floor_level = std::max(median_of(psd), 1e-300);
    for (size_t i = 1; i + 1 < n; ++i) {
        if (!(psd[i] > psd[i - 1]) || !(psd[i] >= psd[i + 1])) continue;
        if (psd[i] < 3.0 * floor_level) continue;
        // walk outward to the flanking valleys, stopping at higher ground
        double left_valley = psd[i];
        for (size_t j = i; j-- > 0;) {
            left_valley = std::min(left_valley, psd[j]);
            if (psd[j] > psd[i]) break;
        }
        double right_valley = psd[i];
        for (size_t j = i + 1; j < n; ++j) {
            right_valley = std::min(right_valley, psd[j]);
            if (psd[j] > psd[i]) break;
        }
        const double base = std::max(std::max(left_valley, right_valley), 1e-300);
        if (psd[i] / base >= prominence_factor)
            peaks.push_back({freq[i], psd[i]});
    }
    return peaks;
}

PsdResult comb_detect(PsdResult psd, double omega_m, double sideband_factor) {
    psd.comb_detected = false;
    psd.comb_spacing = 0.0;
    if (psd.freq.size() < 8) return psd;
    const double fm = omega_m / two_pi;
    const double df = psd.freq[1] - psd.freq[0];
    if (df > fm / 10.0)
        throw config_error("PSD resolution too coarse for comb detection; "
                           "need bins finer than a tenth of the mechanical frequency");

    // fundamental: strongest peak within 50% of the mechanical frequency
    const Peak* fund = nullptr;
    for (const auto& p : psd.peaks) {
        const double af = std::abs(p.freq);
        if (af < 0.5 * fm || af > 1.5 * fm) continue;
        if (!fund || p.height > fund->height) fund = &p;
    }
    if (!fund) return psd;
    const double s0 = std::abs(fund->freq);

    // count teeth sitting on integer multiples of the fundamental spacing
    const double tol = 0.05 * fm;
    int teeth = 0;
    double spacing_sum = 0.0;
    for (const auto& p : psd.peaks) {
        const double af = std::abs(p.freq);
        if (af < 0.5 * s0) continue;
        const double k = std::round(af / s0);
        if (k < 1.0) continue;
        if (std::abs(af - k * s0) <= tol) {
            ++teeth;
            spacing_sum += af / k;
        }
    }
    if (teeth < 3) return psd;
    const double spacing = spacing_sum / double(teeth);
    if (std::abs(spacing - fm) > 0.05 * fm) return psd;

    // demand real power out at the second sideband pair
    std::vector<double> sorted_psd = psd.psd;
    const size_t m = sorted_psd.size() / 2;
    std::nth_element(sorted_psd.begin(), sorted_psd.begin() + m, sorted_psd.end());
    const double floor_level = std::max(sorted_psd[m], 1e-300);
    double second = 0.0;
    for (size_t i = 0; i < psd.freq.size(); ++i) {
        if (std::abs(std::abs(psd.freq[i]) - 2.0 * spacing) <= 2.0 * df)
            second = std::max(second, psd.psd[i]);
    }
    if (second < sideband_factor * floor_level) return psd;

    psd.comb_detected = true;
    psd.comb_spacing = spacing;
    return psd;
}

} // namespace fluxem
