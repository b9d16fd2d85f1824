#include "viability/oracle.hpp"

#include <functional>
#include <stdexcept>
#include <string>

namespace viability {

TransitionTable tabulate(const Dynamics& dynamics, GridPtr grid) {
    const auto& g = *grid;
    if (g.state_dims() != dynamics.state_dims() || g.action_dims() != dynamics.action_dims()) {
        throw std::invalid_argument("grid dimensions do not match the dynamics");
    }
    TransitionTable table;
    table.grid = grid;
    table.successor.assign(g.size(), 0);
    table.failed.assign(g.size(), 0);
    table.out_of_grid.assign(g.size(), 0);
    table.failure_state.assign(g.num_states(), 0);

    for (std::size_t s = 0; s < g.num_states(); ++s) {
        const auto state = g.state_center(s);
        table.failure_state[s] = dynamics.in_failure_set(state) ? 1 : 0;
        for (std::size_t a = 0; a < g.num_actions(); ++a) {
            const auto q = g.index(s, a);
            if (table.failure_state[s]) {
                table.failed[q] = 1;
                table.successor[q] = s;
                continue;
            }
            TransitionOutcome out;
            try {
                out = dynamics.step(state, g.action_center(a));
            } catch (const std::exception& ex) {
                throw OracleError(q, "dynamics step failed at Q cell " + std::to_string(q) +
                                         " (state " + std::to_string(s) + ", action " +
                                         std::to_string(a) + "): " + ex.what());
            }
            table.failed[q] = out.failed ? 1 : 0;
            if (!out.failed) {
                const auto snap = g.snap_state(out.next_state);
                table.successor[q] = snap.index;
                table.out_of_grid[q] = snap.clamped ? 1 : 0;
            }
        }
    }
    return table;
}

namespace {

bool keeps_inside(const TransitionTable& t, std::size_t q, const IndicatorField& s_set) {
    return !t.failed[q] && !t.out_of_grid[q] && s_set[t.successor[q]];
}

}  // namespace

IndicatorField deletion_pass(const TransitionTable& table, const IndicatorField& s_candidate) {
    const auto& g = *table.grid;
    require_grid(s_candidate, g, Domain::States);
    IndicatorField next(table.grid, Domain::States);
    for (std::size_t s = 0; s < g.num_states(); ++s) {
        if (!s_candidate[s]) continue;
        for (std::size_t a = 0; a < g.num_actions(); ++a) {
            if (keeps_inside(table, g.index(s, a), s_candidate)) {
                next.set(s, true);
                break;
            }
        }
    }
    return next;
}

ViableSets compute_viable(const TransitionTable& table) {
    const auto& g = *table.grid;
    IndicatorField candidate(table.grid, Domain::States);
    for (std::size_t s = 0; s < g.num_states(); ++s) {
        candidate.set(s, !table.failure_state[s]);
    }
    std::size_t passes = 0;
    for (;;) {
        ++passes;
        auto next = deletion_pass(table, candidate);
        if (next == candidate) break;
        candidate = std::move(next);
    }
    IndicatorField q_viable(table.grid, Domain::StateActions);
    for (std::size_t q = 0; q < g.size(); ++q) {
        q_viable.set(q, keeps_inside(table, q, candidate));
    }
    auto s_viable = project_to_states(q_viable);
    return {std::move(q_viable), std::move(s_viable), passes};
}

ViableSets compute_viable(const Dynamics& dynamics, GridPtr grid) {
    return compute_viable(tabulate(dynamics, std::move(grid)));
}

ScalarField compute_measure(const IndicatorField& q_viable) {
    const auto& g = *q_viable.grid();
    ScalarField lambda(q_viable.grid(), Domain::States);
    for (std::size_t s = 0; s < g.num_states(); ++s) {
        lambda.set(s, slice_measure(q_viable, s));
    }
    return lambda;
}

ScalarField compute_q_measure(const ScalarField& lambda, const TransitionTable& table) {
    const auto& g = *table.grid;
    require_grid(lambda, g, Domain::States);
    ScalarField lambda_q(table.grid, Domain::StateActions);
    for (std::size_t q = 0; q < g.size(); ++q) {
        if (!table.failed[q] && !table.out_of_grid[q]) {
            lambda_q.set(q, lambda[table.successor[q]]);
        }
    }
    return lambda_q;
}

ScalarField compute_q_measure(const ScalarField& lambda, const Dynamics& dynamics, GridPtr grid) {
    return compute_q_measure(lambda, tabulate(dynamics, std::move(grid)));
}

std::vector<std::optional<int>> longest_unviable_horizon(const TransitionTable& table,
                                                         const IndicatorField& q_viable) {
    const auto& g = *table.grid;
    if (!g.discrete()) {
        throw std::invalid_argument("horizon analysis needs a discrete system");
    }
    require_grid(q_viable, g, Domain::StateActions);
    const auto s_viable = project_to_states(q_viable);

    enum Mark : std::uint8_t { kUnvisited, kOnStack, kDone };
    std::vector<Mark> mark(g.num_states(), kUnvisited);
    std::vector<std::optional<int>> len(g.num_states());

    const std::function<int(std::size_t)> visit = [&](std::size_t s) -> int {
        if (mark[s] == kDone) return *len[s];
        if (mark[s] == kOnStack) {
            throw std::logic_error("cycle among unviable states at state cell " +
                                   std::to_string(s));
        }
        mark[s] = kOnStack;
        int longest = 0;
        for (std::size_t a = 0; a < g.num_actions(); ++a) {
            const auto q = g.index(s, a);
            int tail = 0;  // the step into S_F (or off the grid) ends the trajectory
            if (!table.failed[q] && !table.out_of_grid[q]) {
                const auto next = table.successor[q];
                if (s_viable[next]) {
                    throw std::logic_error("unviable state has a viable successor");
                }
                tail = visit(next);
            }
            longest = std::max(longest, 1 + tail);
        }
        mark[s] = kDone;
        len[s] = longest;
        return longest;
    };

    for (std::size_t s = 0; s < g.num_states(); ++s) {
        if (!s_viable[s] && !table.failure_state[s]) {
            visit(s);
        }
    }
    return len;
}

std::vector<std::size_t> rollout_audit(const Dynamics& dynamics, const IndicatorField& q_viable,
                                       const ScalarField& lambda_q, int steps, RolloutMode mode) {
    const auto& g = *q_viable.grid();
    require_grid(lambda_q, g, Domain::StateActions);
    std::vector<std::size_t> failures;
    for (std::size_t q0 = 0; q0 < g.size(); ++q0) {
        if (!q_viable[q0]) continue;
        auto state = g.state_center(g.state_of(q0));
        auto action = g.action_center(g.action_of(q0));
        bool ok = true;
        for (int i = 0; i < steps && ok; ++i) {
            const auto out = dynamics.step(state, action);
            if (out.failed) {
                ok = false;
                break;
            }
            const auto s = g.snap_state(out.next_state).index;
            state = mode == RolloutMode::Snapped ? g.state_center(s) : out.next_state;
            std::optional<std::size_t> best;
            for (std::size_t a = 0; a < g.num_actions(); ++a) {
                const auto q = g.index(s, a);
                if (q_viable[q] && (!best || lambda_q[q] > lambda_q[g.index(s, *best)])) {
                    best = a;
                }
            }
            if (!best) {
                ok = false;
                break;
            }
            action = g.action_center(*best);
        }
        if (!ok) failures.push_back(q0);
    }
    return failures;
}

}  // namespace viability
