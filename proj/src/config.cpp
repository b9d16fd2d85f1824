#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "viability/experiment.hpp"

namespace viability {

using nlohmann::json;

namespace {

const std::set<std::string> kSystems{"toy", "hovership", "slip"};

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string at_index(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    require_object(j, path);
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) throw ConfigError(join(path, key), "unknown key");
    }
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
    return v;
}

std::uint64_t as_unsigned(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) {
        if (j.get<std::int64_t>() < 0) throw ConfigError(path, "must be non-negative");
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    }
    throw ConfigError(path, "expected an integer");
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> as_numbers(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], at_index(path, i)));
    return out;
}

template <class F>
void maybe(const json& j, const std::string& key, F&& f) {
    if (j.contains(key)) f(j.at(key));
}

Ramp as_ramp(const json& j, const std::string& path) {
    const auto v = as_numbers(j, path);
    if (v.size() != 2) throw ConfigError(path, "expected [start, end]");
    return {v[0], v[1]};
}

std::vector<AxisSpec> as_axes(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of axes");
    std::vector<AxisSpec> axes;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto p = at_index(path, i);
        check_keys(j[i], p, {"lower", "upper", "cells"});
        AxisSpec axis;
        for (const char* key : {"lower", "upper", "cells"}) {
            if (!j[i].contains(key)) throw ConfigError(join(p, key), "missing");
        }
        axis.lower = as_number(j[i].at("lower"), join(p, "lower"));
        axis.upper = as_number(j[i].at("upper"), join(p, "upper"));
        axis.cells = as_unsigned(j[i].at("cells"), join(p, "cells"));
        axes.push_back(axis);
    }
    return axes;
}

json axes_json(const std::vector<AxisSpec>& axes) {
    json out = json::array();
    for (const auto& a : axes) out.push_back({{"lower", a.lower}, {"upper", a.upper}, {"cells", a.cells}});
    return out;
}

json ramp_json(const Ramp& r) { return json::array({r.start, r.end}); }

}  // namespace

ExperimentConfig ExperimentConfig::defaults(const std::string& system) {
    if (!kSystems.contains(system)) {
        throw ConfigError("system", "unknown system '" + system + "' (toy, hovership, slip)");
    }
    ExperimentConfig c;
    c.system = system;
    c.output_dir = "out/" + system;
    if (system == "toy") {
        c.gp.kernel = {{1.0, 1.0}, 1.0, Smoothness::FiveHalves};
        c.gp.noise_variance = 1e-4;
        c.gp.prior.offset = 1.0;
        c.lambda_caut = {0.0, 0.3};
        c.s0 = {1.0};
        c.n = 50;
    } else if (system == "hovership") {
        c.state_axes = {{0.0, 2.0, 41}};
        c.action_axes = {{0.0, 0.5, 11}};
        c.gp.kernel = {{0.08, 0.1}, 0.1, Smoothness::FiveHalves};
        c.gp.noise_variance = 0.03;
        c.gp.prior.offset = 0.01;
        c.lambda_caut = {0.0, 0.15};
        c.s0 = {0.1};
        c.n = 250;
    } else {
        const double deg = std::acos(-1.0) / 180.0;
        c.state_axes = {{0.1, 1.0, 40}};
        c.action_axes = {{10 * deg, 70 * deg, 40}};
        c.gp.kernel = {{0.1, 0.15}, 0.05, Smoothness::FiveHalves};
        c.gp.noise_variance = 0.01;
        c.gp.prior = {PriorMean::Kind::Bump, 0.01, 0.3, {}, {0.1, 0.15}};
        c.gamma_opt = {0.8, 0.9};
        c.gamma_caut = {0.95, 0.95};
        c.lambda_caut = {0.0, 0.15};
        c.s0 = {};
        c.n = 500;
    }
    return c;
}

ExperimentConfig parse_config(const json& j) {
    require_object(j, "");
    if (!j.contains("system")) throw ConfigError("system", "missing");
    auto c = ExperimentConfig::defaults(as_string(j.at("system"), "system"));
    check_keys(j, "", {"system", "hovership", "slip", "grid", "gp", "schedule", "s0", "n", "seed",
                       "output_dir", "snapshots"});

    maybe(j, "hovership", [&](const json& h) {
        if (c.system != "hovership") throw ConfigError("hovership", "only valid for system hovership");
        check_keys(h, "hovership", {"g0", "g", "a_max", "s_max", "omega", "substeps"});
        auto& p = c.hovership;
        maybe(h, "g0", [&](const json& v) { p.g0 = as_number(v, "hovership.g0"); });
        maybe(h, "g", [&](const json& v) { p.g = as_number(v, "hovership.g"); });
        maybe(h, "a_max", [&](const json& v) { p.a_max = as_number(v, "hovership.a_max"); });
        maybe(h, "s_max", [&](const json& v) { p.s_max = as_number(v, "hovership.s_max"); });
        maybe(h, "omega", [&](const json& v) { p.omega = as_number(v, "hovership.omega"); });
        maybe(h, "substeps", [&](const json& v) {
            p.substeps = static_cast<int>(std::min<std::uint64_t>(as_unsigned(v, "hovership.substeps"), 1u << 30));
        });
    });

    maybe(j, "slip", [&](const json& s) {
        if (c.system != "slip") throw ConfigError("slip", "only valid for system slip");
        check_keys(s, "slip", {"g", "m", "k", "l0", "apex_height", "apex_speed", "operating_action",
                               "search_lower", "search_upper"});
        auto& p = c.slip;
        maybe(s, "g", [&](const json& v) { p.params.g = as_number(v, "slip.g"); });
        maybe(s, "m", [&](const json& v) { p.params.m = as_number(v, "slip.m"); });
        maybe(s, "k", [&](const json& v) { p.params.k = as_number(v, "slip.k"); });
        maybe(s, "l0", [&](const json& v) { p.params.l0 = as_number(v, "slip.l0"); });
        maybe(s, "apex_height", [&](const json& v) { p.apex_height = as_number(v, "slip.apex_height"); });
        maybe(s, "apex_speed", [&](const json& v) { p.apex_speed = as_number(v, "slip.apex_speed"); });
        maybe(s, "operating_action",
              [&](const json& v) { p.operating_action = as_number(v, "slip.operating_action"); });
        maybe(s, "search_lower", [&](const json& v) { p.search_lower = as_number(v, "slip.search_lower"); });
        maybe(s, "search_upper", [&](const json& v) { p.search_upper = as_number(v, "slip.search_upper"); });
    });

    maybe(j, "grid", [&](const json& g) {
        if (c.system == "toy") throw ConfigError("grid", "the toy grid is fixed");
        check_keys(g, "grid", {"states", "actions"});
        maybe(g, "states", [&](const json& v) { c.state_axes = as_axes(v, "grid.states"); });
        maybe(g, "actions", [&](const json& v) { c.action_axes = as_axes(v, "grid.actions"); });
    });

    maybe(j, "gp", [&](const json& g) {
        check_keys(g, "gp", {"kernel", "noise_variance", "prior", "low_fidelity_stiffness_scale"});
        maybe(g, "kernel", [&](const json& k) {
            check_keys(k, "gp.kernel", {"lengthscales", "signal_variance", "smoothness"});
            maybe(k, "lengthscales",
                  [&](const json& v) { c.gp.kernel.lengthscales = as_numbers(v, "gp.kernel.lengthscales"); });
            maybe(k, "signal_variance", [&](const json& v) {
                c.gp.kernel.signal_variance = as_number(v, "gp.kernel.signal_variance");
            });
            maybe(k, "smoothness", [&](const json& v) {
                try {
                    c.gp.kernel.smoothness = smoothness_from_string(as_string(v, "gp.kernel.smoothness"));
                } catch (const std::invalid_argument& e) {
                    throw ConfigError("gp.kernel.smoothness", e.what());
                }
            });
        });
        maybe(g, "noise_variance",
              [&](const json& v) { c.gp.noise_variance = as_number(v, "gp.noise_variance"); });
        maybe(g, "prior", [&](const json& p) {
            require_object(p, "gp.prior");
            if (!p.contains("kind")) throw ConfigError("gp.prior.kind", "missing");
            const auto kind = as_string(p.at("kind"), "gp.prior.kind");
            PriorSpec spec;
            if (kind == "constant") {
                check_keys(p, "gp.prior", {"kind", "value"});
                if (!p.contains("value")) throw ConfigError("gp.prior.value", "missing");
                spec.offset = as_number(p.at("value"), "gp.prior.value");
            } else if (kind == "bump") {
                check_keys(p, "gp.prior", {"kind", "offset", "peak", "center", "widths"});
                for (const char* key : {"offset", "peak", "center", "widths"}) {
                    if (!p.contains(key)) throw ConfigError(std::string("gp.prior.") + key, "missing");
                }
                spec.kind = PriorMean::Kind::Bump;
                spec.offset = as_number(p.at("offset"), "gp.prior.offset");
                spec.peak = as_number(p.at("peak"), "gp.prior.peak");
                const auto& center = p.at("center");
                if (center.is_string()) {
                    if (center.get<std::string>() != "operating_point") {
                        throw ConfigError("gp.prior.center", "expected coordinates or \"operating_point\"");
                    }
                } else {
                    spec.center = as_numbers(center, "gp.prior.center");
                    if (spec.center.empty()) throw ConfigError("gp.prior.center", "must not be empty");
                }
                spec.widths = as_numbers(p.at("widths"), "gp.prior.widths");
            } else {
                throw ConfigError("gp.prior.kind", "expected \"constant\" or \"bump\"");
            }
            c.gp.prior = spec;
        });
        maybe(g, "low_fidelity_stiffness_scale", [&](const json& v) {
            if (v.is_null()) {
                c.gp.low_fidelity_stiffness_scale.reset();
            } else {
                c.gp.low_fidelity_stiffness_scale = as_number(v, "gp.low_fidelity_stiffness_scale");
            }
        });
    });

    maybe(j, "schedule", [&](const json& s) {
        check_keys(s, "schedule", {"gamma_opt", "gamma_caut", "lambda_caut"});
        maybe(s, "gamma_opt", [&](const json& v) { c.gamma_opt = as_ramp(v, "schedule.gamma_opt"); });
        maybe(s, "gamma_caut", [&](const json& v) { c.gamma_caut = as_ramp(v, "schedule.gamma_caut"); });
        maybe(s, "lambda_caut", [&](const json& v) { c.lambda_caut = as_ramp(v, "schedule.lambda_caut"); });
    });

    maybe(j, "s0", [&](const json& v) {
        if (v.is_string()) {
            if (v.get<std::string>() != "operating_point") {
                throw ConfigError("s0", "expected coordinates or \"operating_point\"");
            }
            c.s0.clear();
        } else {
            c.s0 = as_numbers(v, "s0");
            if (c.s0.empty()) throw ConfigError("s0", "must not be empty");
        }
    });
    maybe(j, "n", [&](const json& v) { c.n = as_unsigned(v, "n"); });
    maybe(j, "seed", [&](const json& v) { c.seed = as_unsigned(v, "seed"); });
    maybe(j, "output_dir", [&](const json& v) { c.output_dir = as_string(v, "output_dir"); });
    maybe(j, "snapshots", [&](const json& v) {
        if (!v.is_array()) throw ConfigError("snapshots", "expected an array of sample counts");
        c.snapshots.clear();
        for (std::size_t i = 0; i < v.size(); ++i) c.snapshots.push_back(as_unsigned(v[i], at_index("snapshots", i)));
    });

    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", "malformed JSON in " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["system"] = c.system;
    if (c.system == "hovership") {
        const auto& p = c.hovership;
        j["hovership"] = {{"g0", p.g0}, {"g", p.g}, {"a_max", p.a_max}, {"s_max", p.s_max},
                          {"omega", p.omega}, {"substeps", p.substeps}};
    }
    if (c.system == "slip") {
        const auto& s = c.slip;
        j["slip"] = {{"g", s.params.g}, {"m", s.params.m}, {"k", s.params.k}, {"l0", s.params.l0},
                     {"apex_height", s.apex_height}, {"apex_speed", s.apex_speed},
                     {"operating_action", s.operating_action}, {"search_lower", s.search_lower},
                     {"search_upper", s.search_upper}};
    }
    if (c.system != "toy") {
        j["grid"] = {{"states", axes_json(c.state_axes)}, {"actions", axes_json(c.action_axes)}};
    }
    json prior;
    if (c.gp.prior.kind == PriorMean::Kind::Constant) {
        prior = {{"kind", "constant"}, {"value", c.gp.prior.offset}};
    } else {
        prior = {{"kind", "bump"}, {"offset", c.gp.prior.offset}, {"peak", c.gp.prior.peak},
                 {"widths", c.gp.prior.widths}};
        prior["center"] = c.gp.prior.center.empty() ? json("operating_point") : json(c.gp.prior.center);
    }
    j["gp"] = {{"kernel",
                {{"lengthscales", c.gp.kernel.lengthscales},
                 {"signal_variance", c.gp.kernel.signal_variance},
                 {"smoothness", to_string(c.gp.kernel.smoothness)}}},
               {"noise_variance", c.gp.noise_variance},
               {"prior", prior}};
    if (c.gp.low_fidelity_stiffness_scale) {
        j["gp"]["low_fidelity_stiffness_scale"] = *c.gp.low_fidelity_stiffness_scale;
    }
    j["schedule"] = {{"gamma_opt", ramp_json(c.gamma_opt)},
                     {"gamma_caut", ramp_json(c.gamma_caut)},
                     {"lambda_caut", ramp_json(c.lambda_caut)}};
    j["s0"] = c.s0.empty() ? json("operating_point") : json(c.s0);
    j["n"] = c.n;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["snapshots"] = c.snapshots;
    return j;
}

void validate(const ExperimentConfig& c) {
    if (!kSystems.contains(c.system)) throw ConfigError("system", "unknown system '" + c.system + "'");
    const bool toy = c.system == "toy";
    const bool slip = c.system == "slip";

    if (c.system == "hovership") {
        try {
            c.hovership.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("hovership", e.what());
        }
    }
    if (slip) {
        try {
            c.slip.params.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("slip", e.what());
        }
        if (!(c.slip.apex_height > 0.0)) throw ConfigError("slip.apex_height", "must be positive");
        if (!(c.slip.apex_speed > 0.0)) throw ConfigError("slip.apex_speed", "must be positive");
        if (!(c.slip.search_lower > 0.0 && c.slip.search_lower < c.slip.search_upper &&
              c.slip.search_upper <= 1.0)) {
            throw ConfigError("slip.search_lower", "need 0 < search_lower < search_upper <= 1");
        }
    }

    if (!toy) {
        const std::pair<const std::vector<AxisSpec>*, std::string> groups[] = {
            {&c.state_axes, "grid.states"}, {&c.action_axes, "grid.actions"}};
        for (const auto& [axes, path] : groups) {
            if (axes->size() != 1) throw ConfigError(path, "this system needs exactly one axis");
            for (std::size_t i = 0; i < axes->size(); ++i) {
                const auto& a = (*axes)[i];
                const auto p = at_index(path, i);
                if (a.cells == 0) throw ConfigError(p + ".cells", "must be positive");
                if (!(a.lower < a.upper)) throw ConfigError(p + ".upper", "must exceed lower");
            }
        }
        const auto& act = c.action_axes[0];
        if (c.system == "hovership" && (act.lower < 0.0 || act.upper > c.hovership.a_max)) {
            throw ConfigError("grid.actions[0]", "thrust must lie in [0, a_max]");
        }
        if (c.system == "hovership" && c.state_axes[0].lower < 0.0) {
            throw ConfigError("grid.states[0].lower", "height below the ceiling must be >= 0");
        }
    }

    const std::size_t dims = 2;
    if (c.gp.kernel.lengthscales.size() != dims) {
        throw ConfigError("gp.kernel.lengthscales", "need one lengthscale per state and action axis");
    }
    try {
        c.gp.kernel.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("gp.kernel", e.what());
    }
    if (!(c.gp.noise_variance > 0.0) || !std::isfinite(c.gp.noise_variance)) {
        throw ConfigError("gp.noise_variance", "must be positive");
    }
    const auto& prior = c.gp.prior;
    if (prior.kind == PriorMean::Kind::Bump) {
        if (prior.center.empty() && !slip) {
            throw ConfigError("gp.prior.center", "operating_point is only defined for slip");
        }
        if (!prior.center.empty() && prior.center.size() != dims) {
            throw ConfigError("gp.prior.center", "need one coordinate per state and action axis");
        }
        if (prior.widths.size() != dims) {
            throw ConfigError("gp.prior.widths", "need one width per state and action axis");
        }
        for (std::size_t i = 0; i < dims; ++i) {
            if (!(prior.widths[i] > 0.0)) throw ConfigError(at_index("gp.prior.widths", i), "must be positive");
        }
    }
    if (c.gp.low_fidelity_stiffness_scale) {
        if (!slip) throw ConfigError("gp.low_fidelity_stiffness_scale", "only available for slip");
        if (!(*c.gp.low_fidelity_stiffness_scale > 0.0)) {
            throw ConfigError("gp.low_fidelity_stiffness_scale", "must be positive");
        }
    }

    ThresholdSchedule schedule{c.gamma_opt, c.gamma_caut, c.lambda_caut, std::max<std::size_t>(c.n, 1)};
    try {
        schedule.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("schedule", e.what());
    }

    if (c.n == 0) throw ConfigError("n", "need at least one sample");
    for (std::size_t i = 0; i < c.snapshots.size(); ++i) {
        if (c.snapshots[i] == 0) throw ConfigError(at_index("snapshots", i), "must be positive");
    }
    if (c.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");

    if (c.s0.empty()) {
        if (!slip) throw ConfigError("s0", "operating_point is only defined for slip");
    } else {
        if (c.s0.size() != 1) throw ConfigError("s0", "need one coordinate per state axis");
        const double s = c.s0[0];
        if (toy) {
            if (s != std::floor(s) || s < 1.0 || s > 4.0) {
                throw ConfigError("s0", "toy start state must be one of 1, 2, 3, 4");
            }
        } else {
            const auto& axis = c.state_axes[0];
            if (s < axis.lower || s > axis.upper) throw ConfigError("s0", "outside the state grid");
            if (c.system == "hovership" && s >= c.hovership.s_max) throw ConfigError("s0", "in the failure set");
            if (slip && !(s > 0.0 && s <= 1.0)) throw ConfigError("s0", "must lie in (0, 1]");
        }
    }
}

std::string resolve_output_dir(const ExperimentConfig& config) {
    if (const char* env = std::getenv("VIABILITY_OUT_DIR"); env && *env) return env;
    return config.output_dir;
}

}  // namespace viability
