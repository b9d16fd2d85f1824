#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "viability/dynamics.hpp"

namespace viability {

void HovershipParams::validate() const {
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(g0) || !positive(g) || !positive(a_max) || !positive(s_max) ||
        !positive(omega)) {
        throw std::invalid_argument("hovership parameters must be finite and positive");
    }
    if (substeps < 1) {
        throw std::invalid_argument("hovership needs at least one integration substep");
    }
}

Hovership::Hovership(HovershipParams params) : params_(params) { params_.validate(); }

double Hovership::rate(double s, double a) const {
    return params_.g0 + std::tanh(0.75 * s) * params_.g - a;
}

bool Hovership::in_failure_set(std::span<const double> state) const {
    return state[0] >= params_.s_max;
}

TransitionOutcome Hovership::step(double s, double a) const {
    if (!std::isfinite(s) || s < 0.0) {
        throw std::invalid_argument("hovership state must be a finite height below the ceiling");
    }
    if (!std::isfinite(a) || a < 0.0 || a > params_.a_max) {
        throw std::invalid_argument("hovership thrust outside [0, a_max]");
    }
    if (s >= params_.s_max) {
        return {{s}, true};
    }
    // Classical RK4 with the thrust held over one control interval. The ship
    // cannot rise above the ceiling at s = 0.
    const double h = 1.0 / (params_.omega * params_.substeps);
    for (int i = 0; i < params_.substeps; ++i) {
        const double k1 = rate(s, a);
        const double k2 = rate(s + 0.5 * h * k1, a);
        const double k3 = rate(s + 0.5 * h * k2, a);
        const double k4 = rate(s + h * k3, a);
        s = std::max(0.0, s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        if (s >= params_.s_max) {
            return {{s}, true};
        }
    }
    return {{s}, false};
}

TransitionOutcome Hovership::step(std::span<const double> state,
                                  std::span<const double> action) const {
    if (state.size() != 1 || action.size() != 1) {
        throw std::invalid_argument("hovership is one-dimensional");
    }
    return step(state[0], action[0]);
}

}  // namespace viability
