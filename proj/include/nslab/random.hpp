#pragma once

/// Seeded sampling built on std::mt19937_64.
///
/// Only the raw 64-bit engine output is used; conversions to doubles are
/// done here so that sequences do not depend on the standard library's
/// distribution implementations.

#include "nslab/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace nslab {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) from the top 53 bits of one engine draw.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Direction uniform on the unit sphere by rejection from the cube.
    Vec unit_vector(int n) {
        for (;;) {
            Vec d(n);
            for (int i = 0; i < n; ++i) d[i] = uniform(-1.0, 1.0);
            double r = d.norm();
            if (r > 0.1 && r <= 1.0) return d / r;
        }
    }

    /// Vector with log-uniform length in [rmin, rmax] and uniform direction.
    Vec vector_with_norm_in(int n, double rmin, double rmax) {
        Vec d = unit_vector(n);
        double r = rmin * std::pow(rmax / rmin, uniform());
        return r * d;
    }

    Vec in_box(const Vec& lo, const Vec& hi) {
        Vec x(lo.size());
        for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = uniform(lo[i], hi[i]);
        return x;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace nslab
