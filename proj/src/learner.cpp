#include "viability/learner.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace viability {

double Ramp::at(std::size_t iteration, std::size_t ramp_iterations) const {
    if (ramp_iterations <= 1) {
        return end;
    }
    const double frac = std::min(1.0, static_cast<double>(iteration) /
                                          static_cast<double>(ramp_iterations - 1));
    return start + (end - start) * frac;
}

Thresholds ThresholdSchedule::at(std::size_t iteration) const {
    return {gamma_opt.at(iteration, ramp_iterations), gamma_caut.at(iteration, ramp_iterations),
            lambda_caut.at(iteration, ramp_iterations)};
}

void ThresholdSchedule::validate() const {
    const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    for (const Ramp* r : {&gamma_opt, &gamma_caut}) {
        if (!in_unit(r->start) || !in_unit(r->end)) {
            throw std::invalid_argument("confidence thresholds must lie in [0, 1]");
        }
    }
    if (!(lambda_caut.start >= 0.0) || !(lambda_caut.end >= 0.0) ||
        !std::isfinite(lambda_caut.end)) {
        throw std::invalid_argument("lambda_caut must be finite and non-negative");
    }
    for (const Ramp* r : {&gamma_opt, &gamma_caut, &lambda_caut}) {
        if (r->end < r->start) {
            throw std::invalid_argument("threshold ramps must not decrease");
        }
    }
    // Both ramps are linear on the same iteration range, so checking the
    // endpoints covers every iteration.
    if (gamma_caut.start < gamma_opt.start || gamma_caut.end < gamma_opt.end) {
        throw std::invalid_argument("gamma_caut must not fall below gamma_opt");
    }
    if (ramp_iterations == 0) {
        throw std::invalid_argument("ramp needs at least one iteration");
    }
}

Eigen::MatrixXd cell_centers(const ProductGrid& grid) {
    const auto dims = grid.state_dims() + grid.action_dims();
    Eigen::MatrixXd points(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(dims));
    for (std::size_t q = 0; q < grid.size(); ++q) {
        const auto c = grid.center(q);
        for (std::size_t d = 0; d < dims; ++d) {
            points(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(d)) = c[d];
        }
    }
    return points;
}

GridPosterior evaluate_on_grid(const GpPosterior& posterior, const ProductGrid& grid) {
    GridPosterior out;
    out.clamped = posterior.predict_batch(cell_centers(grid), out.mean, out.variance);
    return out;
}

SafeSets compute_sets(const GridPosterior& evaluation, GridPtr grid, const Thresholds& thresholds) {
    const auto n = grid->size();
    if (static_cast<std::size_t>(evaluation.mean.size()) != n) {
        throw std::invalid_argument("posterior evaluation does not match the grid");
    }
    SafeSets sets{IndicatorField(grid, Domain::StateActions),
                  IndicatorField(grid, Domain::StateActions)};
    for (std::size_t q = 0; q < n; ++q) {
        const auto i = static_cast<Eigen::Index>(q);
        const double mu = evaluation.mean(i);
        const double var = evaluation.variance(i);
        sets.optimistic.set(q, prob_exceeds(mu, var, 0.0) > thresholds.gamma_opt);
        sets.cautious.set(q, prob_exceeds(mu, var, thresholds.lambda_caut) > thresholds.gamma_caut);
    }
    return sets;
}

SafeSets compute_sets(const GpPosterior& posterior, GridPtr grid, const ThresholdSchedule& schedule,
                      std::size_t iteration) {
    const auto evaluation = evaluate_on_grid(posterior, *grid);
    return compute_sets(evaluation, std::move(grid), schedule.at(iteration));
}

double estimate_lambda(const IndicatorField& optimistic, std::size_t state) {
    return slice_measure(optimistic, state);
}

ActionChoice select_action(std::size_t state, const IndicatorField& cautious,
                           const GridPosterior& evaluation, double lambda_caut) {
    const auto& grid = *cautious.grid();
    if (state >= grid.num_states()) {
        throw std::out_of_range("state cell index out of range");
    }
    std::optional<std::size_t> best;
    double best_value = -1.0;
    for (std::size_t a = 0; a < grid.num_actions(); ++a) {
        const auto q = static_cast<Eigen::Index>(grid.index(state, a));
        if (cautious[static_cast<std::size_t>(q)] && evaluation.variance(q) > best_value) {
            best = a;
            best_value = evaluation.variance(q);
        }
    }
    if (best) {
        return {*best, true};
    }
    std::size_t safest = 0;
    best_value = -1.0;
    for (std::size_t a = 0; a < grid.num_actions(); ++a) {
        const auto q = static_cast<Eigen::Index>(grid.index(state, a));
        const double p = prob_exceeds(evaluation.mean(q), evaluation.variance(q), lambda_caut);
        if (p > best_value) {
            safest = a;
            best_value = p;
        }
    }
    return {safest, false};
}

Snapshot take_snapshot(const GpPosterior& posterior, GridPtr grid, const Thresholds& thresholds,
                       std::size_t samples) {
    auto evaluation = evaluate_on_grid(posterior, *grid);
    auto sets = compute_sets(evaluation, grid, thresholds);
    ScalarField lambda_hat(grid, Domain::States);
    for (std::size_t s = 0; s < grid->num_states(); ++s) {
        lambda_hat.set(s, estimate_lambda(sets.optimistic, s));
    }
    return {samples, thresholds, std::move(evaluation), std::move(sets.optimistic),
            std::move(sets.cautious), std::move(lambda_hat)};
}

LearnTrace learn(const Dynamics& dynamics, GridPtr grid, const GpConfig& gp,
                 const ThresholdSchedule& schedule, const LearnSettings& settings,
                 const std::function<void(const TraceRecord&)>& on_record) {
    if (settings.n == 0) {
        throw std::invalid_argument("learning needs at least one sample");
    }
    if (settings.s0.size() != grid->state_dims()) {
        throw std::invalid_argument("initial state dimension does not match the grid");
    }
    if (gp.kernel.lengthscales.size() != grid->state_dims() + grid->action_dims()) {
        throw std::invalid_argument("kernel needs one lengthscale per Q dimension");
    }
    schedule.validate();

    std::mt19937_64 rng(settings.seed);
    LearnTrace trace;
    std::vector<std::size_t> checkpoints = settings.snapshot_at;
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    auto next_checkpoint = checkpoints.begin();

    auto posterior = GpPosterior::fit({}, gp.kernel, gp.noise_variance, gp.prior);
    Thresholds thresholds = schedule.at(0);
    auto evaluation = evaluate_on_grid(posterior, *grid);
    auto sets = compute_sets(evaluation, grid, thresholds);
    std::vector<double> state = settings.s0;

    for (std::size_t i = 0; i < settings.n; ++i) {
        while (next_checkpoint != checkpoints.end() && *next_checkpoint <= i) {
            if (*next_checkpoint == i) {
                trace.snapshots.push_back(take_snapshot(posterior, grid, thresholds, i));
            }
            ++next_checkpoint;
        }

        TraceRecord rec;
        rec.iteration = i;
        rec.state = state;
        rec.thresholds = thresholds;
        rec.state_cell = grid->snap_state(state).index;
        const auto choice = select_action(rec.state_cell, sets.cautious, evaluation,
                                          thresholds.lambda_caut);
        rec.action_cell = choice.action;
        rec.from_cautious = choice.from_cautious;
        rec.action = grid->action_center(choice.action);

        const auto outcome = dynamics.step(state, rec.action);
        rec.failed = outcome.failed;
        rec.next_state = outcome.next_state;
        if (!outcome.failed) {
            const auto snap = grid->snap_state(outcome.next_state);
            rec.next_clamped = snap.clamped;
            rec.target = estimate_lambda(sets.optimistic, snap.index);
        }

        Sample sample;
        sample.q = grid->state_center(rec.state_cell);
        sample.q.insert(sample.q.end(), rec.action.begin(), rec.action.end());
        sample.target = rec.target;
        trace.data.push_back(sample);
        posterior = GpPosterior::fit(trace.data, gp.kernel, gp.noise_variance, gp.prior);

        thresholds = schedule.at(i + 1);
        evaluation = evaluate_on_grid(posterior, *grid);
        sets = compute_sets(evaluation, grid, thresholds);

        if (outcome.failed) {
            ++trace.failures;
            rec.reset = true;
            std::vector<std::size_t> candidates;
            for (std::size_t s = 0; s < grid->num_states(); ++s) {
                for (std::size_t a = 0; a < grid->num_actions(); ++a) {
                    if (sets.cautious[grid->index(s, a)]) {
                        candidates.push_back(s);
                        break;
                    }
                }
            }
            if (candidates.empty()) {
                rec.reset_to_s0 = true;
                state = settings.s0;
            } else {
                std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
                state = grid->state_center(candidates[pick(rng)]);
            }
        } else {
            state = outcome.next_state;
        }

        if (on_record) on_record(rec);
        trace.records.push_back(std::move(rec));
    }

    trace.snapshots.push_back(take_snapshot(posterior, grid, thresholds, settings.n));
    return trace;
}

LearnTrace learn(const Dynamics& dynamics, GridPtr grid, const GpConfig& gp,
                 const ThresholdSchedule& schedule, const LearnSettings& settings) {
    return learn(dynamics, std::move(grid), gp, schedule, settings, {});
}

TabularLearner::TabularLearner(const Dynamics& dynamics, GridPtr grid)
    : TabularLearner(dynamics, grid,
                     static_cast<double>(grid->num_actions()) * grid->action_cell_volume()) {}

TabularLearner::TabularLearner(const Dynamics& dynamics, GridPtr grid, double initial_value)
    : dynamics_(dynamics), grid_(grid), estimate_(grid, Domain::StateActions, initial_value) {
    if (grid_->state_dims() != dynamics.state_dims() ||
        grid_->action_dims() != dynamics.action_dims()) {
        throw std::invalid_argument("grid dimensions do not match the dynamics");
    }
}

double TabularLearner::lambda_hat(std::size_t state) const {
    std::size_t n = 0;
    for (std::size_t a = 0; a < grid_->num_actions(); ++a) {
        n += estimate_[grid_->index(state, a)] > 0.0 ? 1 : 0;
    }
    return static_cast<double>(n) * grid_->action_cell_volume();
}

void TabularLearner::sample(std::size_t q) {
    if (q >= grid_->size()) {
        throw std::out_of_range("Q cell index out of range");
    }
    const auto out = dynamics_.step(grid_->state_center(grid_->state_of(q)),
                                    grid_->action_center(grid_->action_of(q)));
    if (out.failed) {
        estimate_.set(q, 0.0);
    } else {
        const auto next = grid_->snap_state(out.next_state);
        estimate_.set(q, next.clamped ? 0.0 : lambda_hat(next.index));
    }
    ++samples_;
}

ScalarField tabular_learn(const Dynamics& dynamics, GridPtr grid, std::size_t n,
                          std::uint64_t seed) {
    TabularLearner learner(dynamics, grid);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, grid->size() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        learner.sample(pick(rng));
    }
    return learner.estimate();
}

}  // namespace viability
