#include "afec/rng.hpp"

#include <cmath>
#include <numbers>

namespace afec {

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = uniform_real();
    } while (u1 <= 0.0);
    const double u2 = uniform_real();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return radius * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace afec
