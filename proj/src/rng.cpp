#include "swedge/rng.hpp"

#include <cmath>

namespace swedge {

// Box-Muller keeps normal draws identical across standard library
// implementations (std::normal_distribution is not portable).
double RandomStream::normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace swedge
