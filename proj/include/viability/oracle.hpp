#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "viability/dynamics.hpp"
#include "viability/field.hpp"

namespace viability {

/// A dynamics step failed while sweeping the grid.
class OracleError : public std::runtime_error {
public:
    OracleError(std::size_t cell, const std::string& what)
        : std::runtime_error(what), cell_(cell) {}
    std::size_t cell() const { return cell_; }

private:
    std::size_t cell_;
};

/// One step of the dynamics from every Q cell center, snapped back to the grid.
struct TransitionTable {
    GridPtr grid;
    std::vector<std::size_t> successor;    // state cell of s' (clamped if outside)
    std::vector<std::uint8_t> failed;      // s' in S_F, or q starts in S_F
    std::vector<std::uint8_t> out_of_grid; // s' left the grid without failing
    std::vector<std::uint8_t> failure_state;  // per state cell: center lies in S_F
};

TransitionTable tabulate(const Dynamics& dynamics, GridPtr grid);

struct ViableSets {
    IndicatorField q_viable;
    IndicatorField s_viable;
    std::size_t passes = 0;  // deletion sweeps, including the final one that removed nothing
};

/// Viability kernel and viable set by fixed-point deletion over full sweeps.
/// Successors that leave the grid without failing count as unviable.
ViableSets compute_viable(const TransitionTable& table);
ViableSets compute_viable(const Dynamics& dynamics, GridPtr grid);

/// One more deletion sweep on `s_candidate`; used to check the fixed point.
IndicatorField deletion_pass(const TransitionTable& table, const IndicatorField& s_candidate);

/// Lambda(s): measure of the viable action slice at each state cell.
ScalarField compute_measure(const IndicatorField& q_viable);

/// Lambda_Q(q) = Lambda(T(q)), zero where the step fails or leaves the grid.
ScalarField compute_q_measure(const ScalarField& lambda, const TransitionTable& table);
ScalarField compute_q_measure(const ScalarField& lambda, const Dynamics& dynamics, GridPtr grid);

/// len(s) for every unviable, non-failed state of a discrete system: the
/// number of transitions in the longest trajectory from s. States in S_V or
/// S_F map to nullopt. Throws std::logic_error if the unviable states contain
/// a cycle, and std::invalid_argument for non-discrete grids.
std::vector<std::optional<int>> longest_unviable_horizon(const TransitionTable& table,
                                                         const IndicatorField& q_viable);

/// Continuous: the rollout carries the exact successor state forward.
/// Snapped: each successor is replaced by its cell center, which is the
/// system the oracle actually reasons about.
enum class RolloutMode { Continuous, Snapped };

/// Closed-loop audit of Q_V: from each viable cell center, repeatedly apply
/// the viable action with the largest Lambda_Q at the snapped current state.
/// Returns the indices of Q cells whose rollout failed within `steps`.
std::vector<std::size_t> rollout_audit(const Dynamics& dynamics, const IndicatorField& q_viable,
                                       const ScalarField& lambda_q, int steps = 50,
                                       RolloutMode mode = RolloutMode::Continuous);

}  // namespace viability
