#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "viability/experiment.hpp"

using namespace viability;
using nlohmann::json;

namespace {

// Path of the ConfigError raised while parsing `j`, or "" if it parses.
std::string error_path(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "";
}

}  // namespace

TEST_CASE("round trip of the defaults and shipped configs") {
    for (const char* system : {"toy", "hovership", "slip"}) {
        const auto c = ExperimentConfig::defaults(system);
        const auto j = to_json(c);
        CHECK(to_json(parse_config(j)) == j);
        const auto shipped = load_config(std::filesystem::path(CONFIG_DIR) / (std::string(system) + ".json"));
        CHECK(to_json(shipped) == j);
    }
}

TEST_CASE("round trip of a modified config") {
    json j = {{"system", "slip"},
              {"gp", {{"prior", {{"kind", "bump"}, {"offset", 0.02}, {"peak", 0.2}, {"center", {0.4, 0.6}},
                                 {"widths", {0.2, 0.2}}}},
                      {"low_fidelity_stiffness_scale", 0.8}}},
              {"s0", {0.5}},
              {"n", 20},
              {"seed", 17},
              {"snapshots", {5, 10}}};
    const auto c = parse_config(j);
    CHECK(c.gp.prior.center == std::vector<double>{0.4, 0.6});
    CHECK(c.gp.low_fidelity_stiffness_scale == 0.8);
    CHECK(c.seed == 17);
    const auto out = to_json(c);
    CHECK(to_json(parse_config(out)) == out);
}

TEST_CASE("partial configs fill in the defaults") {
    const auto c = parse_config({{"system", "hovership"}, {"n", 10}});
    auto expected = ExperimentConfig::defaults("hovership");
    expected.n = 10;
    CHECK(to_json(c) == to_json(expected));
}

TEST_CASE("validation errors carry the field path") {
    CHECK(error_path({{"n", 3}}) == "system");
    CHECK(error_path({{"system", "boat"}}) == "system");
    CHECK(error_path({{"system", "toy"}, {"colour", "red"}}) == "colour");
    CHECK(error_path({{"system", "hovership"}, {"n", 0}}) == "n");
    CHECK(error_path({{"system", "hovership"}, {"n", -2}}) == "n");
    CHECK(error_path({{"system", "hovership"}, {"n", 2.5}}) == "n");
    CHECK(error_path({{"system", "hovership"},
                      {"grid", {{"states", {{{"lower", 0.0}, {"upper", 2.0}, {"cells", 0}}}}}}}) ==
          "grid.states[0].cells");
    CHECK(error_path({{"system", "hovership"},
                      {"grid", {{"states", {{{"lower", 1.0}, {"upper", 0.5}, {"cells", 4}}}}}}}) ==
          "grid.states[0].upper");
    CHECK(error_path({{"system", "hovership"},
                      {"grid", {{"states", {{{"lower", 0.0}, {"upper", 2.0}, {"cells", 4}, {"step", 1}}}}}}}) ==
          "grid.states[0].step");
    CHECK(error_path({{"system", "hovership"},
                      {"grid", {{"actions", {{{"lower", 0.0}, {"upper", 0.9}, {"cells", 4}}}}}}}) == "grid.actions[0]");
    CHECK(error_path({{"system", "toy"}, {"grid", json::object()}}) == "grid");
    CHECK(error_path({{"system", "toy"}, {"slip", json::object()}}) == "slip");
    CHECK(error_path({{"system", "hovership"}, {"hovership", {{"g0", -1.0}}}}) == "hovership");
    CHECK(error_path({{"system", "hovership"}, {"hovership", {{"gravity", 1.0}}}}) == "hovership.gravity");
    CHECK(error_path({{"system", "hovership"}, {"gp", {{"noise_variance", 0.0}}}}) == "gp.noise_variance");
    CHECK(error_path({{"system", "hovership"}, {"gp", {{"kernel", {{"lengthscales", {0.1}}}}}}}) ==
          "gp.kernel.lengthscales");
    CHECK(error_path({{"system", "hovership"}, {"gp", {{"kernel", {{"smoothness", "7/2"}}}}}}) ==
          "gp.kernel.smoothness");
    CHECK(error_path({{"system", "hovership"}, {"gp", {{"prior", {{"kind", "gaussian"}}}}}}) == "gp.prior.kind");
    CHECK(error_path({{"system", "hovership"}, {"gp", {{"prior", {{"kind", "constant"}}}}}}) == "gp.prior.value");
    CHECK(error_path({{"system", "hovership"}, {"gp", {{"low_fidelity_stiffness_scale", 0.8}}}}) ==
          "gp.low_fidelity_stiffness_scale");
    CHECK(error_path({{"system", "hovership"}, {"schedule", {{"gamma_caut", {0.3, 0.95}}}}}) == "schedule");
    CHECK(error_path({{"system", "hovership"}, {"schedule", {{"gamma_opt", {0.5}}}}}) == "schedule.gamma_opt");
    CHECK(error_path({{"system", "hovership"}, {"s0", {2.0}}}) == "s0");
    CHECK(error_path({{"system", "hovership"}, {"s0", "operating_point"}}) == "s0");
    CHECK(error_path({{"system", "toy"}, {"s0", {5}}}) == "s0");
    CHECK(error_path({{"system", "slip"}, {"s0", {1.5}}}) == "s0");
    CHECK(error_path({{"system", "hovership"}, {"snapshots", {50, 0}}}) == "snapshots[1]");
    CHECK(error_path({{"system", "hovership"}, {"output_dir", ""}}) == "output_dir");
    CHECK(error_path({{"system", "hovership"}, {"seed", "zero"}}) == "seed");
    CHECK(error_path(json::array()) == "");  // top level has an empty path
}

TEST_CASE("top-level type errors") {
    CHECK_THROWS_AS(parse_config(json::array()), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("output directory override") {
    auto c = ExperimentConfig::defaults("toy");
    ::unsetenv("VIABILITY_OUT_DIR");
    CHECK(resolve_output_dir(c) == "out/toy");
    ::setenv("VIABILITY_OUT_DIR", "/tmp/elsewhere", 1);
    CHECK(resolve_output_dir(c) == "/tmp/elsewhere");
    ::unsetenv("VIABILITY_OUT_DIR");
}

TEST_CASE("building experiments") {
    const auto toy = build_experiment(ExperimentConfig::defaults("toy"));
    CHECK(toy.grid->discrete());
    CHECK(toy.grid->num_states() == 5);
    CHECK(toy.grid->num_actions() == 3);
    CHECK(toy.dynamics->name() == "toy");

    const auto slip = build_experiment(ExperimentConfig::defaults("slip"));
    REQUIRE(slip.settings.s0.size() == 1);
    const double s_star = slip.settings.s0[0];
    CHECK(s_star > 0.2);
    CHECK(s_star < 0.9);
    // The prior bump sits on the limit cycle.
    CHECK(slip.gp.prior.center == std::vector<double>{s_star, ExperimentConfig::defaults("slip").slip.operating_action});

    auto no_cycle = ExperimentConfig::defaults("slip");
    no_cycle.slip.search_lower = 0.95;
    no_cycle.slip.search_upper = 0.99;
    try {
        build_experiment(no_cycle);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.path() == "slip.operating_action");
    }
}
