#pragma once

#include "common.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace ndsa {

// User-supplied additions to the deterministic sample rings.
struct SampleConfig {
    std::vector<Complex> extra_points;
};

// count pairwise-distinct points r * exp(2 pi i k / count) plus any extras.
inline std::vector<Complex> ring_points(double radius, Index count, const SampleConfig& samp) {
    std::vector<Complex> pts;
    pts.reserve(static_cast<std::size_t>(count) + samp.extra_points.size());
    for (Index k = 0; k < count; ++k) {
        const double ang =
            2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
        pts.push_back(Complex(radius * std::cos(ang), radius * std::sin(ang)));
    }
    for (const Complex& p : samp.extra_points) pts.push_back(p);
    return pts;
}

}  // namespace ndsa
