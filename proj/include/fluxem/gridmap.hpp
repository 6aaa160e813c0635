#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fluxem/constants.hpp"

namespace fluxem {

// Axis of a sweep grid. `log` spaces points geometrically (min, max > 0).
struct GridAxis {
    double min = 0.0;
    double max = 0.0;
    int points = 0;
    bool log = false;

    std::vector<double> values() const {
        if (points <= 0) throw std::invalid_argument("grid axis needs points >= 1");
        std::vector<double> v(points);
        if (points == 1) {
            v[0] = min;
            return v;
        }
        if (log) {
            if (min <= 0.0 || max <= 0.0)
                throw std::invalid_argument("log grid axis needs positive bounds");
            const double lmin = std::log(min), lmax = std::log(max);
            for (int i = 0; i < points; ++i)
                v[i] = std::exp(lmin + (lmax - lmin) * i / (points - 1));
        } else {
            for (int i = 0; i < points; ++i)
                v[i] = min + (max - min) * i / (points - 1);
        }
        return v;
    }
};

// How to run a grid kernel. The serial path is the reference implementation;
// the OpenMP path must produce identical results (results are stored by
// index, so scheduling cannot reorder them).
struct ExecPolicy {
    bool parallel = true;
    int workers = 0; // 0 = library default

    int effective_workers() const {
#ifdef _OPENMP
        if (!parallel) return 1;
        return workers > 0 ? workers : omp_get_max_threads();
#else
        return 1;
#endif
    }
};

// Evaluate fn(i) for i in [0, n) into a vector. Exceptions inside fn must be
// handled by the caller's kernel (grid sweeps record holes instead); any
// escaping exception aborts the run.
template <typename T, typename Fn>
std::vector<T> grid_map(std::size_t n, Fn&& fn, const ExecPolicy& exec = ExecPolicy{}) {
    std::vector<T> out(n);
    if (n == 0) return out;
#ifdef _OPENMP
    if (exec.parallel && exec.effective_workers() > 1) {
        const int nthreads = exec.effective_workers();
#pragma omp parallel for schedule(dynamic, 4) num_threads(nthreads)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
        return out;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
}

} // namespace fluxem
