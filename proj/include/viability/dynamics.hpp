#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace viability {

struct TransitionOutcome {
    std::vector<double> next_state;
    bool failed = false;
};

/// Raised when a numerical integration cannot complete. Distinct from a
/// failed transition, which is a property of the system, not of the solver.
class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deterministic transition map s' = T(s, a) sampled as a black box.
class Dynamics {
public:
    virtual ~Dynamics() = default;

    virtual std::string name() const = 0;
    virtual std::size_t state_dims() const = 0;
    virtual std::size_t action_dims() const = 0;
    /// Discrete systems are measured with the counting measure.
    virtual bool discrete() const { return false; }
    /// Membership of S_F. States in S_F have no meaningful transitions.
    virtual bool in_failure_set(std::span<const double> state) const = 0;
    virtual TransitionOutcome step(std::span<const double> state,
                                   std::span<const double> action) const = 0;
};

// ---------------------------------------------------------------------------
// Toy grid world: a hovering spaceship with states 1..5 (5 = crashed) and
// three actions 0 = fall, 1 = low thrust, 2 = high thrust.

class ToyTable final : public Dynamics {
public:
    static constexpr std::size_t kNumStates = 5;
    static constexpr std::size_t kNumActions = 3;
    static constexpr int kFailureState = 5;

    using Table = std::array<std::array<int, kNumActions>, kNumStates>;

    /// The shipped transition table.
    ToyTable();
    explicit ToyTable(const Table& successors);

    const Table& successors() const { return successors_; }

    std::string name() const override { return "toy"; }
    std::size_t state_dims() const override { return 1; }
    std::size_t action_dims() const override { return 1; }
    bool discrete() const override { return true; }
    bool in_failure_set(std::span<const double> state) const override;
    TransitionOutcome step(std::span<const double> state,
                           std::span<const double> action) const override;

    /// Integer-indexed form: s in 1..5, a in 0..2.
    TransitionOutcome step(int s, int a) const;

private:
    Table successors_;
};

// ---------------------------------------------------------------------------
// Continuous hovering spaceship. s is the distance below the ceiling; the
// ground (failure) is at s >= s_max. ds/dt = g0 + tanh(0.75 s) g - a.

struct HovershipParams {
    double g0 = 0.1;
    double g = 1.0;
    double a_max = 0.5;
    double s_max = 2.0;
    double omega = 1.0;  // control frequency [Hz]
    int substeps = 20;   // RK4 steps per control interval

    /// Throws std::invalid_argument when a parameter is out of range.
    void validate() const;
};

class Hovership final : public Dynamics {
public:
    explicit Hovership(HovershipParams params = {});

    const HovershipParams& params() const { return params_; }
    double rate(double s, double a) const;

    std::string name() const override { return "hovership"; }
    std::size_t state_dims() const override { return 1; }
    std::size_t action_dims() const override { return 1; }
    bool in_failure_set(std::span<const double> state) const override;
    TransitionOutcome step(std::span<const double> state,
                           std::span<const double> action) const override;

    TransitionOutcome step(double s, double a) const;

private:
    HovershipParams params_;
};

// ---------------------------------------------------------------------------
// Spring-loaded inverted pendulum, observed at flight apex. The state is the
// fraction of the (fixed) total energy stored as potential energy at apex,
// s = g y / (xd^2 / 2 + g y); the action is the landing angle of the leg,
// measured from the vertical, with the foot placed ahead of the body.

struct SlipParams {
    double g = 9.81;
    double m = 80.0;
    double k = 8200.0;
    double l0 = 1.0;

    void validate() const;
};

struct SlipIntegratorSettings {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    double event_tol = 1e-10;   // |event function| at a localized event
    double max_phase_time = 5.0;  // [s] a phase that does not end is a failure
};

/// Full planar state [x, y, xd, yd] plus the stance foot position.
struct SlipState {
    double x = 0.0;
    double y = 0.0;
    double xd = 0.0;
    double yd = 0.0;
    double foot_x = 0.0;
    double foot_y = 0.0;
};

enum class SlipFailure { None, Infeasible, Fall, Reversal };

/// Detailed result of one apex-to-apex simulation.
struct SlipStepResult {
    SlipFailure failure = SlipFailure::None;
    SlipState apex;          // next apex when failure == None, last state otherwise
    double next_state = 0.0; // normalized apex energy, when not failed
    double energy = 0.0;     // total energy at the last simulated state
};

class Slip final : public Dynamics {
public:
    Slip(SlipParams params, double total_energy, SlipIntegratorSettings settings = {});

    const SlipParams& params() const { return params_; }
    double total_energy() const { return total_energy_; }

    /// Apex state with the given normalized potential energy.
    SlipState apex_from_state(double s) const;
    double state_from_apex(const SlipState& apex) const;
    double energy(const SlipState& z) const;

    SlipStepResult simulate(double s, double alpha) const;

    std::string name() const override { return "slip"; }
    std::size_t state_dims() const override { return 1; }
    std::size_t action_dims() const override { return 1; }
    bool in_failure_set(std::span<const double> state) const override;
    TransitionOutcome step(std::span<const double> state,
                           std::span<const double> action) const override;

private:
    SlipParams params_;
    double total_energy_;
    SlipIntegratorSettings settings_;
};

/// Total energy of an apex at height y with forward speed xd.
double slip_energy_at_apex(const SlipParams& params, double y, double xd);

/// Fixed point s* = T(s*, alpha) of the apex map in [lo, hi], located by a
/// sign-change scan followed by bisection. Returns nullopt if none exists.
std::optional<double> slip_fixed_point(const Slip& slip, double alpha, double lo, double hi,
                                       std::size_t scan_points = 64);

}  // namespace viability
