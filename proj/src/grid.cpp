#include "viability/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace viability {

AxisGrid::AxisGrid(double lower, double upper, std::size_t num_cells)
    : lower_(lower), upper_(upper), num_cells_(num_cells) {
    if (!std::isfinite(lower) || !std::isfinite(upper)) {
        throw std::invalid_argument("axis bounds must be finite");
    }
    if (!(lower < upper)) {
        throw std::invalid_argument("axis lower bound must be below upper bound");
    }
    if (num_cells == 0) {
        throw std::invalid_argument("axis needs at least one cell");
    }
}

double AxisGrid::center(std::size_t i) const {
    if (i >= num_cells_) {
        throw std::out_of_range("axis cell index " + std::to_string(i) + " out of range");
    }
    return lower_ + (static_cast<double>(i) + 0.5) * cell_width();
}

AxisGrid::Snap AxisGrid::snap(double x) const {
    if (std::isnan(x)) {
        throw std::invalid_argument("cannot snap NaN to a grid cell");
    }
    if (x < lower_) {
        return {0, true};
    }
    if (x > upper_) {
        return {num_cells_ - 1, true};
    }
    auto i = static_cast<std::size_t>(std::floor((x - lower_) / cell_width()));
    return {std::min(i, num_cells_ - 1), false};
}

namespace {

std::size_t product_of_cells(const std::vector<AxisGrid>& axes) {
    std::size_t n = 1;
    for (const auto& axis : axes) {
        n *= axis.num_cells();
    }
    return n;
}

// Row-major decomposition: the last axis varies fastest.
std::vector<double> centers_of(const std::vector<AxisGrid>& axes, std::size_t flat) {
    std::vector<double> out(axes.size());
    for (std::size_t d = axes.size(); d-- > 0;) {
        const auto n = axes[d].num_cells();
        out[d] = axes[d].center(flat % n);
        flat /= n;
    }
    return out;
}

}  // namespace

ProductGrid::ProductGrid(std::vector<AxisGrid> state_axes, std::vector<AxisGrid> action_axes,
                         bool discrete)
    : state_axes_(std::move(state_axes)),
      action_axes_(std::move(action_axes)),
      discrete_(discrete),
      num_states_(product_of_cells(state_axes_)),
      num_actions_(product_of_cells(action_axes_)) {
    if (state_axes_.empty()) {
        throw std::invalid_argument("product grid needs at least one state axis");
    }
}

std::vector<double> ProductGrid::state_center(std::size_t state) const {
    if (state >= num_states_) {
        throw std::out_of_range("state cell index " + std::to_string(state) + " out of range");
    }
    return centers_of(state_axes_, state);
}

std::vector<double> ProductGrid::action_center(std::size_t action) const {
    if (action >= num_actions_) {
        throw std::out_of_range("action cell index " + std::to_string(action) + " out of range");
    }
    return centers_of(action_axes_, action);
}

std::vector<double> ProductGrid::center(std::size_t q) const {
    auto out = state_center(state_of(q));
    const auto a = action_center(action_of(q));
    out.insert(out.end(), a.begin(), a.end());
    return out;
}

ProductGrid::StateSnap ProductGrid::snap_state(std::span<const double> state) const {
    if (state.size() != state_axes_.size()) {
        throw std::invalid_argument("state dimension does not match grid");
    }
    std::size_t flat = 0;
    bool clamped = false;
    for (std::size_t d = 0; d < state_axes_.size(); ++d) {
        const auto snap = state_axes_[d].snap(state[d]);
        flat = flat * state_axes_[d].num_cells() + snap.index;
        clamped = clamped || snap.clamped;
    }
    return {flat, clamped};
}

std::size_t ProductGrid::snap_action(std::span<const double> action) const {
    if (action.size() != action_axes_.size()) {
        throw std::invalid_argument("action dimension does not match grid");
    }
    std::size_t flat = 0;
    for (std::size_t d = 0; d < action_axes_.size(); ++d) {
        flat = flat * action_axes_[d].num_cells() + action_axes_[d].snap(action[d]).index;
    }
    return flat;
}

double ProductGrid::state_cell_volume() const {
    if (discrete_) {
        return 1.0;
    }
    double v = 1.0;
    for (const auto& axis : state_axes_) {
        v *= axis.cell_width();
    }
    return v;
}

double ProductGrid::action_cell_volume() const {
    if (discrete_) {
        return 1.0;
    }
    double v = 1.0;
    for (const auto& axis : action_axes_) {
        v *= axis.cell_width();
    }
    return v;
}

}  // namespace viability
