#pragma once

// Closed-form branch matrix elements shared by the per-branch API and the
// large-M scaling study. `is_down(l)` reports the spin of site l in nu.

#include <cmath>

#include "decohere/model.hpp"

namespace decohere::detail {

template <typename SiteSpin>
double interaction_energy(const ModelParams& p, SiteSpin&& is_down, double w1, double w2, double t) {
    double s1 = 0.0;
    double s2 = 0.0;
    for (int l = 0; l < p.num_sites(); ++l) {
        const double c = std::cos(p.omega(l) * t);
        const double s = std::sin(p.omega(l) * t);
        const double keep = is_down(l) ? s * s : c * c;  // weight on |up>
        s1 += p.coupling(l, Pointer::First, 0) * keep + p.coupling(l, Pointer::First, 1) * (1.0 - keep);
        s2 += p.coupling(l, Pointer::Second, 0) * keep + p.coupling(l, Pointer::Second, 1) * (1.0 - keep);
    }
    return w1 * s1 + w2 * s2;
}

/// Imaginary coefficient of the single-flip element on site l (the element is i * result).
template <typename SiteSpin>
double flip_element(const ModelParams& p, SiteSpin&& is_down, double w1, double w2, double t, int l) {
    const double sc = std::sin(p.omega(l) * t) * std::cos(p.omega(l) * t);
    const double d1 = p.coupling(l, Pointer::First, 1) - p.coupling(l, Pointer::First, 0);
    const double d2 = p.coupling(l, Pointer::Second, 1) - p.coupling(l, Pointer::Second, 0);
    const double sign = is_down(l) ? -1.0 : 1.0;
    return sign * sc * (w1 * d1 + w2 * d2);
}

}  // namespace decohere::detail
