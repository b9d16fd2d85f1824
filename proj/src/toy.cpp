#include <cmath>
#include <stdexcept>
#include <string>

#include "viability/dynamics.hpp"

namespace viability {

namespace {

// Rows are states 1..5, columns are actions fall / low thrust / high thrust.
// Gravity grows towards the ground: from 3 only high thrust holds altitude,
// from 4 nothing does, and 5 is the crash.
constexpr ToyTable::Table kShippedTable{{
    {2, 1, 1},
    {3, 2, 1},
    {4, 4, 3},
    {5, 5, 5},
    {5, 5, 5},
}};

int checked_index(double v, int lo, int hi, const char* what) {
    if (!std::isfinite(v) || v != std::round(v) || v < lo || v > hi) {
        throw std::invalid_argument(std::string("invalid toy ") + what + " index");
    }
    return static_cast<int>(v);
}

}  // namespace

ToyTable::ToyTable() : ToyTable(kShippedTable) {}

ToyTable::ToyTable(const Table& successors) : successors_(successors) {
    for (const auto& row : successors_) {
        for (int next : row) {
            if (next < 1 || next > static_cast<int>(kNumStates)) {
                throw std::invalid_argument("toy successor out of range");
            }
        }
    }
}

bool ToyTable::in_failure_set(std::span<const double> state) const {
    return checked_index(state[0], 1, kNumStates, "state") == kFailureState;
}

TransitionOutcome ToyTable::step(int s, int a) const {
    if (s < 1 || s > static_cast<int>(kNumStates)) {
        throw std::invalid_argument("invalid toy state index");
    }
    if (a < 0 || a >= static_cast<int>(kNumActions)) {
        throw std::invalid_argument("invalid toy action index");
    }
    if (s == kFailureState) {
        return {{static_cast<double>(kFailureState)}, true};
    }
    const int next = successors_[s - 1][a];
    return {{static_cast<double>(next)}, next == kFailureState};
}

TransitionOutcome ToyTable::step(std::span<const double> state,
                                 std::span<const double> action) const {
    if (state.size() != 1 || action.size() != 1) {
        throw std::invalid_argument("toy model is one-dimensional");
    }
    return step(checked_index(state[0], 1, kNumStates, "state"),
                checked_index(action[0], 0, kNumActions - 1, "action"));
}

}  // namespace viability
