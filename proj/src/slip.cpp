#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "viability/dynamics.hpp"

namespace viability {

namespace {

namespace odeint = boost::numeric::odeint;

using Vec4 = std::array<double, 4>;  // x, y, xd, yd

struct Event {
    double (*value)(const Vec4&, const void*);
    int direction;  // +1: rising through zero, -1: falling through zero
    int tag;
};

struct PhaseEnd {
    int tag = -1;  // -1: no event before the time limit
    double t = 0.0;
    Vec4 z{};
};

bool crosses(double before, double after, int direction) {
    return direction > 0 ? (before < 0.0 && after >= 0.0) : (before > 0.0 && after <= 0.0);
}

bool finite(const Vec4& z) {
    for (double v : z) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

// Integrates until the first event fires, localizing it by bisection on the
// dense-output interpolant of the Dormand-Prince 5(4) stepper.
template <class Rhs>
PhaseEnd integrate_phase(const Rhs& rhs, const Vec4& z0, const std::vector<Event>& events,
                         const void* ctx, const SlipIntegratorSettings& settings) {
    constexpr std::size_t kMaxSteps = 1'000'000;
    auto stepper = odeint::make_dense_output(settings.abs_tol, settings.rel_tol,
                                             odeint::runge_kutta_dopri5<Vec4>());
    stepper.initialize(z0, 0.0, 1e-4);

    std::vector<double> previous(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
        previous[e] = events[e].value(z0, ctx);
    }

    try {
        for (std::size_t n = 0; n < kMaxSteps; ++n) {
            if (stepper.current_time() >= settings.max_phase_time) {
                return {-1, stepper.current_time(), stepper.current_state()};
            }
            stepper.do_step(rhs);
            const Vec4& z1 = stepper.current_state();
            if (!finite(z1)) {
                throw IntegrationError("non-finite state during SLIP integration");
            }

            PhaseEnd best;
            best.t = std::numeric_limits<double>::infinity();
            for (std::size_t e = 0; e < events.size(); ++e) {
                const double now = events[e].value(z1, ctx);
                if (!crosses(previous[e], now, events[e].direction)) {
                    previous[e] = now;
                    continue;
                }
                double lo = stepper.previous_time();
                double hi = stepper.current_time();
                Vec4 z_hi = z1;
                Vec4 z_mid{};
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid <= lo || mid >= hi) break;
                    stepper.calc_state(mid, z_mid);
                    const double v = events[e].value(z_mid, ctx);
                    if (std::abs(v) <= settings.event_tol) {
                        hi = mid;
                        z_hi = z_mid;
                        break;
                    }
                    if (crosses(previous[e], v, events[e].direction)) {
                        hi = mid;
                        z_hi = z_mid;
                    } else {
                        lo = mid;
                    }
                }
                if (hi < best.t) {
                    best = {events[e].tag, hi, z_hi};
                }
                previous[e] = now;
            }
            if (best.tag >= 0) {
                return best;
            }
        }
    } catch (const IntegrationError&) {
        throw;
    } catch (const std::exception& ex) {
        throw IntegrationError(std::string("SLIP integration failed: ") + ex.what());
    }
    throw IntegrationError("SLIP integration exceeded the step limit");
}

struct FlightContext {
    double g;
    double touchdown_height;
};

struct StanceContext {
    double g;
    double k_over_m;
    double l0;
    double foot_y;
};

enum Tag { kTouchdown, kFall, kLiftoff, kReversal, kApex };

}  // namespace

void SlipParams::validate() const {
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(g) || !positive(m) || !positive(k) || !positive(l0)) {
        throw std::invalid_argument("SLIP parameters must be finite and positive");
    }
}

double slip_energy_at_apex(const SlipParams& params, double y, double xd) {
    return params.m * (params.g * y + 0.5 * xd * xd);
}

Slip::Slip(SlipParams params, double total_energy, SlipIntegratorSettings settings)
    : params_(params), total_energy_(total_energy), settings_(settings) {
    params_.validate();
    if (!std::isfinite(total_energy) || total_energy <= 0.0) {
        throw std::invalid_argument("SLIP total energy must be finite and positive");
    }
    if (!(settings_.abs_tol > 0.0) || !(settings_.rel_tol > 0.0) || !(settings_.event_tol > 0.0) ||
        !(settings_.max_phase_time > 0.0)) {
        throw std::invalid_argument("SLIP integrator settings must be positive");
    }
}

SlipState Slip::apex_from_state(double s) const {
    if (!(s > 0.0 && s <= 1.0)) {
        throw std::invalid_argument("SLIP apex state must lie in (0, 1]");
    }
    SlipState z;
    z.y = s * total_energy_ / (params_.m * params_.g);
    z.xd = std::sqrt(std::max(0.0, 2.0 * (1.0 - s) * total_energy_ / params_.m));
    return z;
}

double Slip::state_from_apex(const SlipState& apex) const {
    const double pot = params_.g * apex.y;
    return pot / (0.5 * apex.xd * apex.xd + pot);
}

double Slip::energy(const SlipState& z) const {
    return params_.m * (params_.g * z.y + 0.5 * (z.xd * z.xd + z.yd * z.yd));
}

bool Slip::in_failure_set(std::span<const double> state) const { return state[0] <= 0.0; }

SlipStepResult Slip::simulate(double s, double alpha) const {
    if (!std::isfinite(s) || !std::isfinite(alpha)) {
        throw std::invalid_argument("SLIP state and action must be finite");
    }
    SlipStepResult result;
    const SlipState apex = apex_from_state(s);
    const double touchdown_height = params_.l0 * std::cos(alpha);

    // Foot would start underground.
    if (apex.y < touchdown_height) {
        result.failure = SlipFailure::Infeasible;
        result.apex = apex;
        result.energy = energy(apex);
        return result;
    }

    // Flight until the foot touches the ground.
    const FlightContext flight{params_.g, touchdown_height};
    const auto flight_rhs = [g = params_.g](const Vec4& z, Vec4& dz, double) {
        dz = {z[2], z[3], 0.0, -g};
    };
    const std::vector<Event> flight_events{
        {[](const Vec4& z, const void* c) {
             return z[1] - static_cast<const FlightContext*>(c)->touchdown_height;
         },
         -1, kTouchdown},
        {[](const Vec4& z, const void*) { return z[1]; }, -1, kFall},
    };
    Vec4 z{apex.x, apex.y, apex.xd, apex.yd};
    if (apex.y - touchdown_height > settings_.event_tol) {
        const auto end = integrate_phase(flight_rhs, z, flight_events, &flight, settings_);
        if (end.tag != kTouchdown) {
            result.failure = SlipFailure::Fall;
            result.apex = {end.z[0], end.z[1], end.z[2], end.z[3]};
            result.energy = energy(result.apex);
            return result;
        }
        z = end.z;
    }

    // Stance, in coordinates centered on the foot.
    const double foot_x = z[0] + params_.l0 * std::sin(alpha);
    const double foot_y = z[1] - params_.l0 * std::cos(alpha);
    const StanceContext stance{params_.g, params_.k / params_.m, params_.l0, foot_y};
    const auto stance_rhs = [&stance](const Vec4& q, Vec4& dq, double) {
        const double l = std::hypot(q[0], q[1]);
        const double f = stance.k_over_m * (stance.l0 - l) / l;
        dq = {q[2], q[3], f * q[0], f * q[1] - stance.g};
    };
    const std::vector<Event> stance_events{
        {[](const Vec4& q, const void* c) {
             return std::hypot(q[0], q[1]) - static_cast<const StanceContext*>(c)->l0;
         },
         +1, kLiftoff},
        {[](const Vec4& q, const void* c) {
             return q[1] + static_cast<const StanceContext*>(c)->foot_y;
         },
         -1, kFall},
        {[](const Vec4& q, const void*) { return q[2]; }, -1, kReversal},
    };
    const Vec4 q0{z[0] - foot_x, z[1] - foot_y, z[2], z[3]};
    const auto stance_end = integrate_phase(stance_rhs, q0, stance_events, &stance, settings_);
    const Vec4 lift{stance_end.z[0] + foot_x, stance_end.z[1] + foot_y, stance_end.z[2],
                    stance_end.z[3]};
    if (stance_end.tag != kLiftoff) {
        result.failure = stance_end.tag == kReversal ? SlipFailure::Reversal : SlipFailure::Fall;
        result.apex = {lift[0], lift[1], lift[2], lift[3], foot_x, foot_y};
        result.energy = energy(result.apex) +
                        0.5 * params_.k *
                            std::pow(params_.l0 - std::hypot(stance_end.z[0], stance_end.z[1]), 2);
        return result;
    }
    if (lift[3] <= 0.0) {
        // Leaves the ground moving downwards: there is no next apex.
        result.failure = SlipFailure::Fall;
        result.apex = {lift[0], lift[1], lift[2], lift[3], foot_x, foot_y};
        result.energy = energy(result.apex);
        return result;
    }

    // Flight until the apex.
    const std::vector<Event> apex_events{
        {[](const Vec4& q, const void*) { return q[3]; }, -1, kApex},
        {[](const Vec4& q, const void*) { return q[1]; }, -1, kFall},
    };
    const auto apex_end = integrate_phase(flight_rhs, lift, apex_events, nullptr, settings_);
    result.apex = {apex_end.z[0], apex_end.z[1], apex_end.z[2], apex_end.z[3], foot_x, foot_y};
    result.energy = energy(result.apex);
    if (apex_end.tag != kApex) {
        result.failure = SlipFailure::Fall;
        return result;
    }
    if (result.apex.xd <= 0.0) {
        result.failure = SlipFailure::Reversal;
        return result;
    }
    result.next_state = state_from_apex(result.apex);
    return result;
}

TransitionOutcome Slip::step(std::span<const double> state,
                             std::span<const double> action) const {
    if (state.size() != 1 || action.size() != 1) {
        throw std::invalid_argument("SLIP apex map is one-dimensional");
    }
    const auto r = simulate(state[0], action[0]);
    if (r.failure != SlipFailure::None) {
        return {{0.0}, true};
    }
    return {{r.next_state}, false};
}

std::optional<double> slip_fixed_point(const Slip& slip, double alpha, double lo, double hi,
                                       std::size_t scan_points) {
    if (!(lo < hi) || scan_points < 2) {
        throw std::invalid_argument("fixed point search needs a non-empty bracket");
    }
    const auto residual = [&](double s) -> std::optional<double> {
        const auto r = slip.simulate(s, alpha);
        if (r.failure != SlipFailure::None) return std::nullopt;
        return r.next_state - s;
    };
    double prev_s = lo;
    auto prev = residual(lo);
    for (std::size_t i = 1; i < scan_points; ++i) {
        const double s = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(scan_points - 1);
        const auto cur = residual(s);
        if (prev && cur && ((*prev <= 0.0) != (*cur <= 0.0))) {
            double a = prev_s;
            double b = s;
            double fa = *prev;
            for (int it = 0; it < 80 && b - a > 1e-14; ++it) {
                const double mid = 0.5 * (a + b);
                const auto fm = residual(mid);
                if (!fm) return std::nullopt;
                if ((*fm <= 0.0) == (fa <= 0.0)) {
                    a = mid;
                    fa = *fm;
                } else {
                    b = mid;
                }
            }
            return 0.5 * (a + b);
        }
        prev_s = s;
        prev = cur;
    }
    return std::nullopt;
}

}  // namespace viability
