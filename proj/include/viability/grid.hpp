#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace viability {

/// Uniform partition of [lower, upper] into num_cells equal cells.
class AxisGrid {
public:
    AxisGrid(double lower, double upper, std::size_t num_cells);

    double lower() const { return lower_; }
    double upper() const { return upper_; }
    std::size_t num_cells() const { return num_cells_; }
    double cell_width() const { return (upper_ - lower_) / static_cast<double>(num_cells_); }
    double center(std::size_t i) const;

    struct Snap {
        std::size_t index;
        bool clamped;  // value was outside [lower, upper]
    };
    /// Cell containing x. Values outside the axis clamp to the boundary cell.
    Snap snap(double x) const;

    friend bool operator==(const AxisGrid&, const AxisGrid&) = default;

private:
    double lower_;
    double upper_;
    std::size_t num_cells_;
};

/// Discretization of Q = S x A. Cells are ordered row-major over the state
/// axes followed by the action axes, in declaration order, so the flat
/// index of (state cell, action cell) is state * num_actions() + action.
class ProductGrid {
public:
    ProductGrid(std::vector<AxisGrid> state_axes, std::vector<AxisGrid> action_axes,
                bool discrete = false);

    const std::vector<AxisGrid>& state_axes() const { return state_axes_; }
    const std::vector<AxisGrid>& action_axes() const { return action_axes_; }
    std::size_t state_dims() const { return state_axes_.size(); }
    std::size_t action_dims() const { return action_axes_.size(); }

    /// Discrete systems use the counting measure (unit cell volume).
    bool discrete() const { return discrete_; }

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t size() const { return num_states_ * num_actions_; }

    std::size_t index(std::size_t state, std::size_t action) const {
        return state * num_actions_ + action;
    }
    std::size_t state_of(std::size_t q) const { return q / num_actions_; }
    std::size_t action_of(std::size_t q) const { return q % num_actions_; }

    std::vector<double> state_center(std::size_t state) const;
    std::vector<double> action_center(std::size_t action) const;
    /// State coordinates followed by action coordinates.
    std::vector<double> center(std::size_t q) const;

    struct StateSnap {
        std::size_t index;
        bool clamped;
    };
    StateSnap snap_state(std::span<const double> state) const;
    std::size_t snap_action(std::span<const double> action) const;

    double state_cell_volume() const;
    double action_cell_volume() const;

    friend bool operator==(const ProductGrid&, const ProductGrid&) = default;

private:
    std::vector<AxisGrid> state_axes_;
    std::vector<AxisGrid> action_axes_;
    bool discrete_;
    std::size_t num_states_;
    std::size_t num_actions_;
};

}  // namespace viability
