#include "tame/rng.hpp"

#include <cmath>

namespace tame {

double Rng::normal() {
    // draw u1 in (0,1] to keep log finite
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

} // namespace tame
