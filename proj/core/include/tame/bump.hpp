#pragma once

#include <stdexcept>

namespace tame::tubular {

/// Radial plateau profile: 1 on [0, r1], 0 on [r2, inf), quintic smoothstep
/// in between (C^2 at the joints, derivative vanishing to second order).
struct BumpProfile {
    double r1 = 0.0;
    double r2 = 0.0;

    BumpProfile() = default;
    BumpProfile(double inner, double outer) : r1(inner), r2(outer) {
        if (!(0.0 < inner && inner < outer))
            throw std::invalid_argument("bump profile: need 0 < r1 < r2");
    }

    double operator()(double d) const {
        if (d <= r1) return 1.0;
        if (d >= r2) return 0.0;
        const double u = (r2 - d) / (r2 - r1);
        return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    }

    double deriv(double d) const {
        if (d <= r1 || d >= r2) return 0.0;
        const double u = (r2 - d) / (r2 - r1);
        const double su = u * u * (30.0 + u * (-60.0 + 30.0 * u));
        return -su / (r2 - r1);
    }
};

} // namespace tame::tubular
