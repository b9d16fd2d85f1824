#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "viability/dynamics.hpp"
#include "viability/field.hpp"
#include "viability/gp.hpp"

namespace viability {

/// Linear ramp from start to end over a fixed number of iterations, then flat.
struct Ramp {
    double start = 0.0;
    double end = 0.0;

    double at(std::size_t iteration, std::size_t ramp_iterations) const;
    friend bool operator==(const Ramp&, const Ramp&) = default;
};

struct Thresholds {
    double gamma_opt = 0.0;
    double gamma_caut = 0.0;
    double lambda_caut = 0.0;
};

struct ThresholdSchedule {
    Ramp gamma_opt{0.5, 0.9};
    Ramp gamma_caut{0.6, 0.95};
    Ramp lambda_caut{0.0, 0.0};
    std::size_t ramp_iterations = 1;

    Thresholds at(std::size_t iteration) const;

    /// Confidences in [0, 1], lambda_caut >= 0, no ramp decreases, and
    /// gamma_caut >= gamma_opt at every iteration.
    void validate() const;
    friend bool operator==(const ThresholdSchedule&, const ThresholdSchedule&) = default;
};

struct GpConfig {
    KernelParams kernel;
    double noise_variance = 1e-4;
    PriorMean prior;
};

/// Posterior mean and variance at every Q cell center.
struct GridPosterior {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    std::size_t clamped = 0;
};

/// Q cell centers as rows, in flat cell order.
Eigen::MatrixXd cell_centers(const ProductGrid& grid);

GridPosterior evaluate_on_grid(const GpPosterior& posterior, const ProductGrid& grid);

struct SafeSets {
    IndicatorField optimistic;  // P[Lambda_Q > 0] > gamma_opt
    IndicatorField cautious;    // P[Lambda_Q > lambda_caut] > gamma_caut
};

SafeSets compute_sets(const GridPosterior& evaluation, GridPtr grid, const Thresholds& thresholds);
SafeSets compute_sets(const GpPosterior& posterior, GridPtr grid, const ThresholdSchedule& schedule,
                      std::size_t iteration);

/// Lambda-hat(s): measure of the optimistic slice at a state cell.
double estimate_lambda(const IndicatorField& optimistic, std::size_t state);

struct ActionChoice {
    std::size_t action = 0;
    bool from_cautious = false;  // false: no cautious action, took the safest one
};

/// Cautious action with the largest posterior variance, or, when the cautious
/// slice is empty, the action most likely to lie above lambda_caut. Ties go
/// to the lowest action index.
ActionChoice select_action(std::size_t state, const IndicatorField& cautious,
                           const GridPosterior& evaluation, double lambda_caut);

struct LearnSettings {
    std::vector<double> s0;
    std::size_t n = 1;
    std::uint64_t seed = 0;
    std::vector<std::size_t> snapshot_at{50, 250, 500};
};

struct TraceRecord {
    std::size_t iteration = 0;
    std::vector<double> state;
    std::size_t state_cell = 0;
    std::vector<double> action;
    std::size_t action_cell = 0;
    bool from_cautious = false;
    std::vector<double> next_state;
    bool next_clamped = false;  // s' fell outside the grid
    bool failed = false;
    double target = 0.0;        // value appended to D
    Thresholds thresholds;
    bool reset = false;
    bool reset_to_s0 = false;   // no state with a cautious action was available
};

struct Snapshot {
    std::size_t samples = 0;
    Thresholds thresholds;
    GridPosterior posterior;
    IndicatorField optimistic;
    IndicatorField cautious;
    ScalarField lambda_hat;  // over S, from the optimistic set
};

struct LearnTrace {
    std::vector<TraceRecord> records;
    std::size_t failures = 0;
    std::vector<Snapshot> snapshots;  // requested checkpoints, then the final state
    std::vector<Sample> data;
};

/// Active sampling of the dynamics to learn Lambda_Q with a GP, sampling only
/// cautious actions when any exist and resetting after failures.
LearnTrace learn(const Dynamics& dynamics, GridPtr grid, const GpConfig& gp,
                 const ThresholdSchedule& schedule, const LearnSettings& settings);
/// As above, handing each record to `on_record` as soon as it is complete.
LearnTrace learn(const Dynamics& dynamics, GridPtr grid, const GpConfig& gp,
                 const ThresholdSchedule& schedule, const LearnSettings& settings,
                 const std::function<void(const TraceRecord&)>& on_record);

/// Snapshot of sets and measure estimate for a posterior.
Snapshot take_snapshot(const GpPosterior& posterior, GridPtr grid, const Thresholds& thresholds,
                       std::size_t samples);

/// Tabular estimate of Lambda_Q for discrete systems, updated per sample with
/// Lambda_Q(q) = 0 on failure and Lambda-hat(s') otherwise.
class TabularLearner {
public:
    /// Starts from the optimistic value |A| * action cell volume everywhere.
    TabularLearner(const Dynamics& dynamics, GridPtr grid);
    TabularLearner(const Dynamics& dynamics, GridPtr grid, double initial_value);

    void sample(std::size_t q);
    /// Counting (or cell-volume) measure of {a : Lambda_Q-hat(s, a) > 0}.
    double lambda_hat(std::size_t state) const;
    const ScalarField& estimate() const { return estimate_; }
    std::size_t samples() const { return samples_; }

private:
    const Dynamics& dynamics_;
    GridPtr grid_;
    ScalarField estimate_;
    std::size_t samples_ = 0;
};

/// n uniform random samples over Q from an optimistic start.
ScalarField tabular_learn(const Dynamics& dynamics, GridPtr grid, std::size_t n,
                          std::uint64_t seed);

}  // namespace viability
