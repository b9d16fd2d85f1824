#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "viability/experiment.hpp"

namespace viability {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

AxisGrid make_axis(const AxisSpec& a) { return AxisGrid(a.lower, a.upper, a.cells); }

GridPtr make_grid(const ExperimentConfig& c) {
    if (c.system == "toy") {
        // Cell centers are the state indices 1..5 and action indices 0..2.
        return std::make_shared<const ProductGrid>(
            std::vector<AxisGrid>{AxisGrid(0.5, 5.5, ToyTable::kNumStates)},
            std::vector<AxisGrid>{AxisGrid(-0.5, 2.5, ToyTable::kNumActions)}, true);
    }
    std::vector<AxisGrid> states, actions;
    for (const auto& a : c.state_axes) states.push_back(make_axis(a));
    for (const auto& a : c.action_axes) actions.push_back(make_axis(a));
    return std::make_shared<const ProductGrid>(std::move(states), std::move(actions));
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

template <class Field>
void write_field(const fs::path& path, const Field& field, const std::string& name) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_csv(out, field, name);
}

CsvTable read_table(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return read_csv(in);
}

std::vector<double> as_doubles(std::span<const std::uint8_t> v) { return {v.begin(), v.end()}; }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json set_score_json(const SetScore& s) {
    return {{"count", s.count}, {"precision", optional_number(s.precision)}, {"recall", s.recall}};
}

json quartiles_json(const std::vector<double>& values) {
    if (values.empty()) return nullptr;
    const auto q = quartiles(values);
    return {{"q1", q.q1}, {"median", q.median}, {"q3", q.q3}, {"iqr", q.q3 - q.q1}};
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& config) {
    validate(config);
    Experiment e;
    e.config = config;
    e.grid = make_grid(config);

    std::vector<double> operating_point;
    if (config.system == "toy") {
        e.dynamics = std::make_unique<ToyTable>();
    } else if (config.system == "hovership") {
        e.dynamics = std::make_unique<Hovership>(config.hovership);
    } else {
        const auto& s = config.slip;
        auto slip = std::make_unique<Slip>(s.params,
                                           slip_energy_at_apex(s.params, s.apex_height, s.apex_speed));
        const bool needs_point = config.s0.empty() || (config.gp.prior.kind == PriorMean::Kind::Bump &&
                                                       config.gp.prior.center.empty());
        if (needs_point) {
            const auto fp = slip_fixed_point(*slip, s.operating_action, s.search_lower, s.search_upper);
            if (!fp) {
                throw ConfigError("slip.operating_action",
                                  "no limit cycle at this landing angle in the search interval");
            }
            operating_point = {*fp, s.operating_action};
        }
        e.dynamics = std::move(slip);
    }

    const auto& p = config.gp.prior;
    e.gp.kernel = config.gp.kernel;
    e.gp.noise_variance = config.gp.noise_variance;
    e.gp.prior = p.kind == PriorMean::Kind::Constant
                     ? PriorMean::constant(p.offset)
                     : PriorMean::bump(p.offset, p.peak, p.center.empty() ? operating_point : p.center,
                                       p.widths);

    if (config.gp.low_fidelity_stiffness_scale) {
        auto params = config.slip.params;
        params.k *= *config.gp.low_fidelity_stiffness_scale;
        const Slip low(params, slip_energy_at_apex(params, config.slip.apex_height, config.slip.apex_speed));
        const auto oracle = run_oracle(low, e.grid);
        const auto estimate = estimate_kernel_params(oracle.lambda_q, config.gp.kernel.smoothness);
        e.gp.kernel.lengthscales = estimate.lengthscales;
        e.gp.kernel.signal_variance = estimate.signal_variance;
    }

    e.schedule = {config.gamma_opt, config.gamma_caut, config.lambda_caut, config.n};
    e.settings.s0 = config.s0.empty() ? std::vector<double>{operating_point[0]} : config.s0;
    e.settings.n = config.n;
    e.settings.seed = config.seed;
    e.settings.snapshot_at = config.snapshots;
    return e;
}

OracleResult run_oracle(const Dynamics& dynamics, GridPtr grid) {
    auto table = tabulate(dynamics, std::move(grid));
    auto sets = compute_viable(table);
    auto lambda = compute_measure(sets.q_viable);
    auto lambda_q = compute_q_measure(lambda, table);
    return {std::move(table), std::move(sets), std::move(lambda), std::move(lambda_q)};
}

SetScore score_set(const IndicatorField& estimate, const IndicatorField& truth) {
    if (!(*estimate.grid() == *truth.grid()) || estimate.domain() != truth.domain()) {
        throw std::invalid_argument("scored sets live on different grids");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        if (estimate[i] && truth[i]) ++hits;
    }
    SetScore s;
    s.count = estimate.count();
    if (s.count > 0) s.precision = static_cast<double>(hits) / static_cast<double>(s.count);
    const auto positives = truth.count();
    s.recall = positives > 0 ? static_cast<double>(hits) / static_cast<double>(positives) : 1.0;
    return s;
}

ScoreReport score(const LearnTrace& trace, const IndicatorField& q_viable, const ScalarField& lambda) {
    if (trace.snapshots.empty()) throw std::invalid_argument("trace has no final snapshot");
    const auto& final = trace.snapshots.back();
    const auto& grid = *q_viable.grid();
    require_grid(lambda, grid, Domain::States);

    ScoreReport r;
    r.samples = trace.records.size();
    r.failure_count = trace.failures;
    r.failure_rate = r.samples ? static_cast<double>(r.failure_count) / static_cast<double>(r.samples) : 0.0;
    r.cautious = score_set(final.cautious, q_viable);
    r.optimistic = score_set(final.optimistic, q_viable);

    const auto s_viable = project_to_states(q_viable);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < grid.num_states(); ++s) {
        if (!s_viable[s]) continue;
        total += std::abs(final.lambda_hat[s] - lambda[s]);
        ++count;
    }
    r.measure_error = count ? total / static_cast<double>(count) : 0.0;

    r.failures_by_quartile.assign(4, 0);
    const auto& axis = grid.state_axes().front();
    for (const auto& rec : trace.records) {
        if (!rec.failed) continue;
        const double t = (rec.state.front() - axis.lower()) / (axis.upper() - axis.lower());
        const auto band = static_cast<std::size_t>(std::clamp(std::floor(4.0 * t), 0.0, 3.0));
        ++r.failures_by_quartile[band];
    }
    return r;
}

json to_json(const ScoreReport& r) {
    return {{"samples", r.samples},
            {"failure_count", r.failure_count},
            {"failure_rate", r.failure_rate},
            {"cautious", set_score_json(r.cautious)},
            {"optimistic", set_score_json(r.optimistic)},
            {"measure_error", r.measure_error},
            {"failures_by_quartile", r.failures_by_quartile}};
}

json to_json(const TraceRecord& r) {
    return {{"i", r.iteration},
            {"state", r.state},
            {"state_cell", r.state_cell},
            {"action", r.action},
            {"action_cell", r.action_cell},
            {"cautious", r.from_cautious},
            {"next_state", r.next_state},
            {"next_clamped", r.next_clamped},
            {"failed", r.failed},
            {"target", r.target},
            {"gamma_opt", r.thresholds.gamma_opt},
            {"gamma_caut", r.thresholds.gamma_caut},
            {"lambda_caut", r.thresholds.lambda_caut},
            {"reset", r.reset},
            {"reset_to_s0", r.reset_to_s0}};
}

OracleResult cmd_oracle(const ExperimentConfig& config, const fs::path& out_dir) {
    auto e = build_experiment(config);
    auto oracle = run_oracle(*e.dynamics, e.grid);
    fs::create_directories(out_dir);
    write_field(out_dir / "q_viable.csv", oracle.sets.q_viable, "viable");
    write_field(out_dir / "s_viable.csv", oracle.sets.s_viable, "viable");
    write_field(out_dir / "lambda.csv", oracle.lambda, "lambda");
    write_field(out_dir / "lambda_q.csv", oracle.lambda_q, "lambda_q");

    const auto& g = *e.grid;
    json summary = {{"system", config.system},
                    {"states", g.num_states()},
                    {"actions", g.num_actions()},
                    {"q_viable", oracle.sets.q_viable.count()},
                    {"s_viable", oracle.sets.s_viable.count()},
                    {"passes", oracle.sets.passes},
                    {"max_lambda", oracle.lambda.max()},
                    {"total_measure", total_measure(oracle.sets.q_viable)}};
    write_file(out_dir / "oracle.json", summary.dump(2) + "\n");
    return oracle;
}

std::optional<ScoreReport> cmd_learn(const ExperimentConfig& config, const fs::path& out_dir, bool do_score) {
    const auto start = std::chrono::steady_clock::now();
    auto e = build_experiment(config);
    fs::create_directories(out_dir);
    write_file(out_dir / "config.json", to_json(config).dump(2) + "\n");

    std::optional<IndicatorField> q_viable;
    std::optional<ScalarField> lambda;
    if (do_score) {
        if (fs::exists(out_dir / "q_viable.csv") && fs::exists(out_dir / "lambda.csv")) {
            q_viable = indicator_field_from_csv(read_table(out_dir / "q_viable.csv"), e.grid,
                                                Domain::StateActions, "viable");
            lambda = scalar_field_from_csv(read_table(out_dir / "lambda.csv"), e.grid, Domain::States,
                                           "lambda");
        } else {
            auto oracle = cmd_oracle(config, out_dir);
            q_viable = std::move(oracle.sets.q_viable);
            lambda = std::move(oracle.lambda);
        }
    }

    std::ofstream trace_out(out_dir / "trace.jsonl", std::ios::binary);
    if (!trace_out) throw std::runtime_error("cannot write " + (out_dir / "trace.jsonl").string());
    const auto trace = learn(*e.dynamics, e.grid, e.gp, e.schedule, e.settings,
                             [&](const TraceRecord& r) { trace_out << to_json(r).dump() << '\n' << std::flush; });

    for (const auto& snap : trace.snapshots) {
        const auto tag = std::to_string(snap.samples);
        std::vector<double> mean(snap.posterior.mean.data(), snap.posterior.mean.data() + snap.posterior.mean.size());
        std::vector<double> var(snap.posterior.variance.data(),
                                snap.posterior.variance.data() + snap.posterior.variance.size());
        std::ofstream out(out_dir / ("snapshot_" + tag + ".csv"), std::ios::binary);
        write_csv(out, *e.grid, Domain::StateActions,
                  {{"mean", mean},
                   {"variance", var},
                   {"optimistic", as_doubles(snap.optimistic.values())},
                   {"cautious", as_doubles(snap.cautious.values())}});
        write_field(out_dir / ("lambda_hat_" + tag + ".csv"), snap.lambda_hat, "lambda_hat");
    }

    std::optional<ScoreReport> report;
    if (do_score) {
        report = score(trace, *q_viable, *lambda);
        write_file(out_dir / "report.json", to_json(*report).dump(2) + "\n");
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(out_dir / "timing.json", json{{"seconds", seconds}}.dump(2) + "\n");
    return report;
}

Quartiles quartiles(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("quartiles of an empty sample");
    std::sort(v.begin(), v.end());
    const auto at = [&](double p) {
        const double pos = p * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    return {at(0.25), at(0.5), at(0.75)};
}

std::vector<SeedRow> cmd_sweep(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds,
                               const fs::path& out_dir) {
    if (seeds.empty()) throw ConfigError("seeds", "need at least one seed");
    validate(config);
    fs::create_directories(out_dir);

    std::vector<SeedRow> rows;
    for (const auto seed : seeds) {
        SeedRow row;
        row.seed = seed;
        auto c = config;
        c.seed = seed;
        try {
            row.report = cmd_learn(c, out_dir / ("seed_" + std::to_string(seed)), true);
        } catch (const std::exception& ex) {
            row.error = ex.what();
        }
        rows.push_back(std::move(row));
    }

    std::vector<double> rate, precision, recall;
    json per_seed = json::array();
    for (const auto& row : rows) {
        json item = {{"seed", row.seed}};
        if (row.report) {
            item["report"] = to_json(*row.report);
            rate.push_back(row.report->failure_rate);
            if (row.report->cautious.precision) precision.push_back(*row.report->cautious.precision);
            recall.push_back(row.report->cautious.recall);
        } else {
            item["error"] = row.error;
        }
        per_seed.push_back(item);
    }
    json aggregate = {{"system", config.system},
                      {"seeds", seeds.size()},
                      {"completed", rate.size()},
                      {"failure_rate", quartiles_json(rate)},
                      {"cautious_precision", quartiles_json(precision)},
                      {"cautious_recall", quartiles_json(recall)},
                      {"rows", per_seed}};
    write_file(out_dir / "aggregate.json", aggregate.dump(2) + "\n");
    return rows;
}

}  // namespace viability
