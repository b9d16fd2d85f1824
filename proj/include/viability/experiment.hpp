#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "viability/dynamics.hpp"
#include "viability/field.hpp"
#include "viability/gp.hpp"
#include "viability/learner.hpp"
#include "viability/oracle.hpp"

namespace viability {

/// Invalid configuration. `path` names the offending field, e.g. "grid.states[0].cells".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error(path.empty() ? message : path + ": " + message),
          path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct AxisSpec {
    double lower = 0.0;
    double upper = 1.0;
    std::size_t cells = 1;
    friend bool operator==(const AxisSpec&, const AxisSpec&) = default;
};

struct SlipSettings {
    SlipParams params;
    double apex_height = 0.85;  // reference apex fixing the total energy
    double apex_speed = 5.5;
    /// Limit cycle used as the operating point: the fixed point of the apex
    /// map at this landing angle, searched for in [search_lower, search_upper].
    double operating_action = 0.6283185307179586;
    double search_lower = 0.2;
    double search_upper = 0.9;
    friend bool operator==(const SlipSettings&, const SlipSettings&) = default;
};

struct PriorSpec {
    PriorMean::Kind kind = PriorMean::Kind::Constant;
    double offset = 0.0;
    double peak = 0.0;
    std::vector<double> center;  // empty: the SLIP operating point
    std::vector<double> widths;
    friend bool operator==(const PriorSpec&, const PriorSpec&) = default;
};

struct GpSpec {
    KernelParams kernel;
    double noise_variance = 1e-4;
    PriorSpec prior;
    /// When set, lengthscales and signal variance are re-estimated from the
    /// oracle Lambda_Q of a SLIP whose spring constant is scaled by this factor.
    std::optional<double> low_fidelity_stiffness_scale;
};

struct ExperimentConfig {
    std::string system = "hovership";  // toy | hovership | slip
    HovershipParams hovership;
    SlipSettings slip;
    std::vector<AxisSpec> state_axes;
    std::vector<AxisSpec> action_axes;
    GpSpec gp;
    Ramp gamma_opt{0.5, 0.9};
    Ramp gamma_caut{0.6, 0.95};
    Ramp lambda_caut{0.0, 0.0};
    std::vector<double> s0;  // empty: the SLIP operating point
    std::size_t n = 250;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::vector<std::size_t> snapshots{50, 250, 500};

    /// Defaults for a system id.
    static ExperimentConfig defaults(const std::string& system);
};

/// Parse a JSON config on top of the defaults for its "system". Unknown keys,
/// wrong types and out-of-range values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// Checks every module precondition. Throws ConfigError.
void validate(const ExperimentConfig& config);

/// Output directory after the VIABILITY_OUT_DIR environment override.
std::string resolve_output_dir(const ExperimentConfig& config);

/// Everything needed to run, built from a validated config.
struct Experiment {
    ExperimentConfig config;
    std::unique_ptr<Dynamics> dynamics;
    GridPtr grid;
    GpConfig gp;
    ThresholdSchedule schedule;
    LearnSettings settings;
};

Experiment build_experiment(const ExperimentConfig& config);

struct OracleResult {
    TransitionTable table;
    ViableSets sets;
    ScalarField lambda;
    ScalarField lambda_q;
};

OracleResult run_oracle(const Dynamics& dynamics, GridPtr grid);

struct SetScore {
    std::size_t count = 0;
    std::optional<double> precision;  // undefined for an empty set
    double recall = 0.0;
};

struct ScoreReport {
    std::size_t samples = 0;
    std::size_t failure_count = 0;
    double failure_rate = 0.0;
    SetScore cautious;
    SetScore optimistic;
    double measure_error = 0.0;  // mean |Lambda-hat - Lambda| over S_V
    /// Failures per quarter of the first state axis, lowest quarter first.
    std::vector<std::size_t> failures_by_quartile;
};

SetScore score_set(const IndicatorField& estimate, const IndicatorField& truth);
ScoreReport score(const LearnTrace& trace, const IndicatorField& q_viable, const ScalarField& lambda);
nlohmann::json to_json(const ScoreReport& report);

nlohmann::json to_json(const TraceRecord& record);

// Commands. Each writes into `out_dir`, creating it if needed.

/// q_viable.csv, s_viable.csv, lambda.csv, lambda_q.csv and oracle.json.
OracleResult cmd_oracle(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// config.json, trace.jsonl, snapshot_<samples>.csv and lambda_hat_<samples>.csv,
/// report.json (unless score is false) and timing.json. The oracle is read
/// from out_dir when present and computed otherwise.
std::optional<ScoreReport> cmd_learn(const ExperimentConfig& config,
                                     const std::filesystem::path& out_dir, bool score = true);

struct SeedRow {
    std::uint64_t seed = 0;
    std::optional<ScoreReport> report;
    std::string error;
};

/// One cmd_learn per seed in out_dir/seed_<n>, then aggregate.json with the
/// median and interquartile range of failure rate and cautious precision/recall.
std::vector<SeedRow> cmd_sweep(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds,
                               const std::filesystem::path& out_dir);

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};
/// Linear-interpolation quartiles. Throws on an empty sample.
Quartiles quartiles(std::vector<double> values);

// Rendering.

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<Rgb> pixels;  // row-major, top row first

    Rgb& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
    const Rgb& at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

/// Value in [0, 1] to color: black-blue-teal-yellow, piecewise linear.
Rgb colormap(double t);

struct Marker {
    std::vector<double> q;  // state then action coordinates
    bool failed = false;
};

/// Heatmap over Q with states along the vertical axis (lowest state at the
/// bottom) and actions along the horizontal axis. Cells outside `optimistic`
/// are drawn at half brightness and cells in `cautious` get a white border.
/// Values are scaled by vmax. Samples are white dots, failures red crosses.
Image render_q(const ScalarField& values, double vmax, const IndicatorField* optimistic,
               const IndicatorField* cautious, const std::vector<Marker>& markers);

void write_png(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

/// Renders every snapshot of a cmd_learn directory (snapshot_<k>.png) and the
/// oracle Lambda_Q when present (oracle.png). Returns the number of markers
/// drawn on each snapshot image, in file order.
std::vector<std::size_t> cmd_render(const std::filesystem::path& run_dir,
                                    const std::filesystem::path& out_dir);

}  // namespace viability
