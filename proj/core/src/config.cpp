#include "magsim/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "magsim/errors.hpp"
#include "magsim/hash.hpp"
#include "magsim/physics.hpp"
#include "magsim/quantity.hpp"

namespace magsim {

namespace {

using json = nlohmann::ordered_json;

// Json accessor that reports the path of the offending key in every error.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

    bool has(const std::string& key) const { return node_.contains(key); }

    Reader child(const std::string& key) const {
        return Reader(node_.at(key), path_ + "." + key);
    }

    double quantity(const std::string& key, const std::string& dim, double fallback) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        try {
            if (v.is_string()) return parse_quantity(v.get<std::string>(), dim);
            if (v.is_number()) return v.get<double>();
        } catch (const ConfigError& e) {
            throw ConfigError(path_ + "." + key + ": " + e.what());
        }
        throw ConfigError(path_ + "." + key + ": expected number or quantity string");
    }

    double number(const std::string& key, double fallback) const {
        return quantity(key, "", fallback);
    }

    double probability(const std::string& key, double fallback) const {
        const double p = number(key, fallback);
        if (p < 0.0 || p > 1.0) throw ConfigError(path_ + "." + key + ": outside [0, 1]");
        return p;
    }

    int integer(const std::string& key, int fallback) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number_integer()) throw ConfigError(path_ + "." + key + ": expected integer");
        return v.get<int>();
    }

    uint64_t uint64(const std::string& key, uint64_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number_unsigned() && !v.is_number_integer())
            throw ConfigError(path_ + "." + key + ": expected integer");
        return v.get<uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_boolean()) throw ConfigError(path_ + "." + key + ": expected boolean");
        return v.get<bool>();
    }

    Eigen::Vector3d vector3(const std::string& key, const std::string& dim,
                            const Eigen::Vector3d& fallback) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_array() || v.size() != 3)
            throw ConfigError(path_ + "." + key + ": expected array of 3");
        Eigen::Vector3d out;
        for (int i = 0; i < 3; ++i) out(i) = element_quantity(v[i], key, dim);
        return out;
    }

    Eigen::Vector2d vector2(const std::string& key, const std::string& dim,
                            const Eigen::Vector2d& fallback) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_array() || v.size() != 2)
            throw ConfigError(path_ + "." + key + ": expected array of 2");
        Eigen::Vector2d out;
        for (int i = 0; i < 2; ++i) out(i) = element_quantity(v[i], key, dim);
        return out;
    }

    void reject_unknown(const std::set<std::string>& known) const {
        for (const auto& [key, value] : node_.items()) {
            if (!known.count(key))
                throw ConfigError(path_ + "." + key + ": unknown configuration key");
        }
    }

    const json& raw() const { return node_; }
    const std::string& path() const { return path_; }

private:
    double element_quantity(const json& v, const std::string& key, const std::string& dim) const {
        if (v.is_string()) {
            try {
                return parse_quantity(v.get<std::string>(), dim);
            } catch (const ConfigError& e) {
                throw ConfigError(path_ + "." + key + ": " + e.what());
            }
        }
        if (v.is_number()) return v.get<double>();
        throw ConfigError(path_ + "." + key + ": expected number or quantity string");
    }

    const json& node_;
    std::string path_;
};

json axis_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec2_json(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

}  // namespace

TargetPattern PatternSpec::build(const GridGeometry& geom) const {
    if (!sites.empty()) {
        TargetPattern pattern;
        pattern.sites = sites;
        for (int s : pattern.sites) {
            if (s < 0 || s >= geom.site_count())
                throw ConfigError("assembly.sites: site index out of grid");
        }
        return pattern;
    }
    if (!rect) throw ConfigError("assembly: neither rect nor sites given");
    const auto [r0, c0, h, w] = *rect;
    if (r0 < 0 || c0 < 0 || h < 1 || w < 1 || r0 + h > geom.rows || c0 + w > geom.cols)
        throw ConfigError("assembly.rect: rectangle outside grid");
    return TargetPattern::rect(geom, r0, c0, h, w);
}

std::vector<Eigen::Vector2d> ScanSpec::build() const {
    if (line_steps > 0) {
        std::vector<Eigen::Vector2d> out;
        out.reserve(line_steps);
        if (line_steps == 1) return {line_from};
        for (int i = 0; i < line_steps; ++i) {
            const double f = static_cast<double>(i) / (line_steps - 1);
            out.push_back(line_from + f * (line_to - line_from));
        }
        return out;
    }
    return positions;
}

ExperimentParams RunConfig::experiment_params() const {
    ExperimentParams p;
    p.scene = scene;
    p.grid = grid;
    p.constants = AtomicConstants::rb85();
    p.states = SensorStates::default_pair();
    p.ramsey.rabi_frequency = si::two_pi * rabi_frequency_hz;
    p.ramsey.pulse_duration = pulse_duration;
    p.ramsey.contrast = contrast;
    p.ramsey.coherence_time = coherence_time;
    // Delta_12 sits above the reference-field transition by the configured
    // offset, so the average test-off Ramsey frequency is that offset.
    const double b_ref =
        (scene.quantization.magnitude * scene.quantization.axis + scene.uniform_offset).norm();
    p.ramsey.two_photon_difference =
        breit_rabi_splitting(b_ref, p.states, p.constants) +
        si::two_pi * (mean_light_shift_hz + reference_detuning_hz);
    p.prep = prep;
    p.p_load = p_load;
    p.mean_light_shift = si::two_pi * mean_light_shift_hz;
    p.light_shift_spread = si::two_pi * light_shift_spread_hz;
    p.detection_defaults = detection;
    p.timing = timing;
    p.field_drift_per_cycle = field_drift_per_cycle;
    return p;
}

CyclePlan RunConfig::cycle_plan() const {
    CyclePlan plan;
    plan.t_values = equidistant_t_grid(t_min, t_max, t_steps);
    plan.repetitions = repetitions;
    plan.interleave_test_field = interleave;
    plan.test_on_fixed = test_on_fixed;
    plan.master_seed = seed;
    return plan;
}

SteerableTweezer RunConfig::steerable() const {
    SteerableTweezer t = SteerableTweezer::centered_on(grid);
    t.waist = probe_waist;
    t.window_size = probe_window_size;
    t.step_resolution = probe_step_resolution;
    return t;
}

AssemblyParams RunConfig::assembly_params() const {
    AssemblyParams a;
    a.p_load = p_load;
    a.p_move_success = p_move_success;
    a.survival_per_round = detection.survival_probability;
    a.blocking_radius = blocking_radius;
    return a;
}

RunConfig config_from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    RunConfig c;
    const Reader top(root, "config");
    top.reject_unknown({"seed", "grid", "scene", "ramsey", "sites", "prep", "detection", "load",
                        "plan", "assembly", "scan", "probe", "rates", "timing"});
    c.seed = top.uint64("seed", c.seed);

    if (top.has("grid")) {
        const Reader grid = top.child("grid");
        grid.reject_unknown({"rows", "cols", "pitch", "origin"});
        c.grid.rows = grid.integer("rows", c.grid.rows);
        c.grid.cols = grid.integer("cols", c.grid.cols);
        c.grid.pitch = grid.quantity("pitch", "m", c.grid.pitch);
        c.grid.origin = grid.vector2("origin", "m", c.grid.origin);
        if (c.grid.rows < 1 || c.grid.cols < 1 || c.grid.pitch <= 0.0)
            throw ConfigError("config.grid: rows/cols/pitch must be positive");
    }
    if (top.has("scene")) {
        const Reader scene = top.child("scene");
        scene.reject_unknown({"quantization", "test_field", "uniform_offset", "drift_per_cycle"});
        if (scene.has("quantization")) {
            const Reader q = scene.child("quantization");
            q.reject_unknown({"magnitude", "axis"});
            c.scene.quantization.magnitude =
                q.quantity("magnitude", "T", c.scene.quantization.magnitude);
            c.scene.quantization.axis = q.vector3("axis", "", c.scene.quantization.axis);
            if (c.scene.quantization.magnitude <= 0.0)
                throw ConfigError("config.scene.quantization.magnitude: must be positive");
            const double n = c.scene.quantization.axis.norm();
            if (n <= 0.0) throw ConfigError("config.scene.quantization.axis: zero vector");
            c.scene.quantization.axis /= n;
        }
        if (scene.has("test_field")) {
            const Reader t = scene.child("test_field");
            t.reject_unknown({"center", "axis", "axial_gradient", "enabled"});
            c.scene.test.center = t.vector3("center", "m", c.scene.test.center);
            c.scene.test.axis = t.vector3("axis", "", c.scene.test.axis);
            const double n = c.scene.test.axis.norm();
            if (n <= 0.0) throw ConfigError("config.scene.test_field.axis: zero vector");
            c.scene.test.axis /= n;
            c.scene.test.axial_gradient =
                t.quantity("axial_gradient", "T/m", c.scene.test.axial_gradient);
            c.scene.test.enabled = t.boolean("enabled", c.scene.test.enabled);
        }
        c.scene.uniform_offset = scene.vector3("uniform_offset", "T", c.scene.uniform_offset);
        c.field_drift_per_cycle = scene.vector3("drift_per_cycle", "T", c.field_drift_per_cycle);
    }
    if (top.has("ramsey")) {
        const Reader r = top.child("ramsey");
        r.reject_unknown({"rabi_frequency", "pulse_duration", "reference_detuning", "contrast",
                          "coherence_time"});
        c.rabi_frequency_hz = r.quantity("rabi_frequency", "Hz", c.rabi_frequency_hz);
        c.pulse_duration = r.quantity("pulse_duration", "s", c.pulse_duration);
        c.reference_detuning_hz = r.quantity("reference_detuning", "Hz", c.reference_detuning_hz);
        c.contrast = r.probability("contrast", c.contrast);
        c.coherence_time = r.quantity("coherence_time", "s", c.coherence_time);
    }
    if (top.has("sites")) {
        const Reader s = top.child("sites");
        s.reject_unknown({"mean_light_shift", "light_shift_spread"});
        c.mean_light_shift_hz = s.quantity("mean_light_shift", "Hz", c.mean_light_shift_hz);
        c.light_shift_spread_hz = s.quantity("light_shift_spread", "Hz", c.light_shift_spread_hz);
        if (c.light_shift_spread_hz < 0.0)
            throw ConfigError("config.sites.light_shift_spread: negative spread");
    }
    if (top.has("prep")) {
        const Reader p = top.child("prep");
        p.reject_unknown({"p_prepare_up", "residual_down_population"});
        c.prep.p_prepare_up = p.probability("p_prepare_up", c.prep.p_prepare_up);
        c.prep.residual_down_population =
            p.probability("residual_down_population", c.prep.residual_down_population);
    }
    if (top.has("detection")) {
        const Reader d = top.child("detection");
        d.reject_unknown({"true_positive", "false_positive", "survival"});
        c.detection.detection_true_positive =
            d.probability("true_positive", c.detection.detection_true_positive);
        c.detection.detection_false_positive =
            d.probability("false_positive", c.detection.detection_false_positive);
        c.detection.survival_probability =
            d.probability("survival", c.detection.survival_probability);
    }
    if (top.has("load")) {
        const Reader l = top.child("load");
        l.reject_unknown({"p_load"});
        c.p_load = l.probability("p_load", c.p_load);
    }
    if (top.has("plan")) {
        const Reader p = top.child("plan");
        p.reject_unknown({"t_min", "t_max", "steps", "repetitions", "interleave", "test_on_fixed"});
        c.t_min = p.quantity("t_min", "s", c.t_min);
        c.t_max = p.quantity("t_max", "s", c.t_max);
        c.t_steps = p.integer("steps", c.t_steps);
        c.repetitions = p.integer("repetitions", c.repetitions);
        c.interleave = p.boolean("interleave", c.interleave);
        c.test_on_fixed = p.boolean("test_on_fixed", c.test_on_fixed);
        if (c.t_min <= 0.0 || c.t_max < c.t_min || c.t_steps < 1)
            throw ConfigError("config.plan: need 0 < t_min <= t_max and steps >= 1");
        if (c.repetitions < 0) throw ConfigError("config.plan.repetitions: negative");
    }
    if (top.has("assembly")) {
        const Reader a = top.child("assembly");
        a.reject_unknown({"rect", "sites", "blocking_radius", "p_move_success", "max_rounds"});
        if (a.has("rect")) {
            const json& v = a.raw().at("rect");
            if (!v.is_array() || v.size() != 4)
                throw ConfigError("config.assembly.rect: expected [row0, col0, height, width]");
            std::array<int, 4> rect{};
            for (int i = 0; i < 4; ++i) {
                if (!v[i].is_number_integer())
                    throw ConfigError("config.assembly.rect: expected integers");
                rect[static_cast<size_t>(i)] = v[i].get<int>();
            }
            c.pattern.rect = rect;
            c.pattern.sites.clear();
        }
        if (a.has("sites")) {
            const json& v = a.raw().at("sites");
            if (!v.is_array()) throw ConfigError("config.assembly.sites: expected array");
            c.pattern.sites.clear();
            for (const auto& e : v) {
                if (!e.is_number_integer())
                    throw ConfigError("config.assembly.sites: expected integers");
                c.pattern.sites.push_back(e.get<int>());
            }
            if (!c.pattern.sites.empty()) c.pattern.rect.reset();
        }
        c.blocking_radius = a.quantity("blocking_radius", "m", c.blocking_radius);
        c.p_move_success = a.probability("p_move_success", c.p_move_success);
        c.max_rounds = a.integer("max_rounds", c.max_rounds);
        if (c.max_rounds < 1) throw ConfigError("config.assembly.max_rounds: must be >= 1");
    }
    if (top.has("scan")) {
        const Reader s = top.child("scan");
        s.reject_unknown({"positions", "line_from", "line_to", "line_steps"});
        if (s.has("positions")) {
            const json& v = s.raw().at("positions");
            if (!v.is_array()) throw ConfigError("config.scan.positions: expected array");
            c.scan.positions.clear();
            for (size_t i = 0; i < v.size(); ++i) {
                const Reader entry(v[i], "config.scan.positions[" + std::to_string(i) + "]");
                if (!v[i].is_array() || v[i].size() != 2)
                    throw ConfigError(entry.path() + ": expected [x, y]");
                Eigen::Vector2d p;
                for (int k = 0; k < 2; ++k) {
                    const json& e = v[i][k];
                    if (e.is_string())
                        p(k) = parse_quantity(e.get<std::string>(), "m");
                    else if (e.is_number())
                        p(k) = e.get<double>();
                    else
                        throw ConfigError(entry.path() + ": expected number or quantity");
                }
                c.scan.positions.push_back(p);
            }
        }
        c.scan.line_from = s.vector2("line_from", "m", c.scan.line_from);
        c.scan.line_to = s.vector2("line_to", "m", c.scan.line_to);
        c.scan.line_steps = s.integer("line_steps", c.scan.line_steps);
    }
    if (top.has("probe")) {
        const Reader p = top.child("probe");
        p.reject_unknown({"waist", "window_size", "step_resolution", "light_shift"});
        c.probe_waist = p.quantity("waist", "m", c.probe_waist);
        c.probe_window_size = p.quantity("window_size", "m", c.probe_window_size);
        c.probe_step_resolution = p.quantity("step_resolution", "m", c.probe_step_resolution);
        c.probe_light_shift_hz = p.quantity("light_shift", "Hz", c.probe_light_shift_hz);
    }
    if (top.has("rates")) {
        const Reader r = top.child("rates");
        r.reject_unknown({"cycles_per_second"});
        c.cycles_per_second = r.quantity("cycles_per_second", "Hz", c.cycles_per_second);
    }
    if (top.has("timing")) {
        const Reader t = top.child("timing");
        t.reject_unknown({"exposure_time", "trap_depth_load", "trap_depth_sequence"});
        c.timing.exposure_time = t.quantity("exposure_time", "s", c.timing.exposure_time);
        c.timing.trap_depth_load = t.quantity("trap_depth_load", "K", c.timing.trap_depth_load);
        c.timing.trap_depth_sequence =
            t.quantity("trap_depth_sequence", "K", c.timing.trap_depth_sequence);
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

std::string config_to_json_text(const RunConfig& c) {
    json root;
    root["seed"] = c.seed;
    root["grid"] = {{"rows", c.grid.rows},
                    {"cols", c.grid.cols},
                    {"pitch", c.grid.pitch},
                    {"origin", vec2_json(c.grid.origin)}};
    root["scene"] = {
        {"quantization",
         {{"magnitude", c.scene.quantization.magnitude},
          {"axis", axis_json(c.scene.quantization.axis)}}},
        {"test_field",
         {{"center", axis_json(c.scene.test.center)},
          {"axis", axis_json(c.scene.test.axis)},
          {"axial_gradient", c.scene.test.axial_gradient},
          {"enabled", c.scene.test.enabled}}},
        {"uniform_offset", axis_json(c.scene.uniform_offset)},
        {"drift_per_cycle", axis_json(c.field_drift_per_cycle)}};
    root["ramsey"] = {{"rabi_frequency", c.rabi_frequency_hz},
                      {"pulse_duration", c.pulse_duration},
                      {"reference_detuning", c.reference_detuning_hz},
                      {"contrast", c.contrast}};
    if (std::isfinite(c.coherence_time))
        root["ramsey"]["coherence_time"] = c.coherence_time;
    else
        root["ramsey"]["coherence_time"] = "inf";
    root["sites"] = {{"mean_light_shift", c.mean_light_shift_hz},
                     {"light_shift_spread", c.light_shift_spread_hz}};
    root["prep"] = {{"p_prepare_up", c.prep.p_prepare_up},
                    {"residual_down_population", c.prep.residual_down_population}};
    root["detection"] = {{"true_positive", c.detection.detection_true_positive},
                         {"false_positive", c.detection.detection_false_positive},
                         {"survival", c.detection.survival_probability}};
    root["load"] = {{"p_load", c.p_load}};
    root["plan"] = {{"t_min", c.t_min},       {"t_max", c.t_max},
                    {"steps", c.t_steps},     {"repetitions", c.repetitions},
                    {"interleave", c.interleave}, {"test_on_fixed", c.test_on_fixed}};
    json assembly = {{"blocking_radius", c.blocking_radius},
                     {"p_move_success", c.p_move_success},
                     {"max_rounds", c.max_rounds}};
    if (c.pattern.rect)
        assembly["rect"] = json::array({(*c.pattern.rect)[0], (*c.pattern.rect)[1],
                                        (*c.pattern.rect)[2], (*c.pattern.rect)[3]});
    if (!c.pattern.sites.empty()) assembly["sites"] = c.pattern.sites;
    root["assembly"] = assembly;
    json positions = json::array();
    for (const auto& p : c.scan.positions) positions.push_back(vec2_json(p));
    root["scan"] = {{"positions", positions},
                    {"line_from", vec2_json(c.scan.line_from)},
                    {"line_to", vec2_json(c.scan.line_to)},
                    {"line_steps", c.scan.line_steps}};
    root["probe"] = {{"waist", c.probe_waist},
                     {"window_size", c.probe_window_size},
                     {"step_resolution", c.probe_step_resolution},
                     {"light_shift", c.probe_light_shift_hz}};
    root["rates"] = {{"cycles_per_second", c.cycles_per_second}};
    root["timing"] = {{"exposure_time", c.timing.exposure_time},
                      {"trap_depth_load", c.timing.trap_depth_load},
                      {"trap_depth_sequence", c.timing.trap_depth_sequence}};
    return root.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
    return hex64(fnv1a64(config_to_json_text(config)));
}

}  // namespace magsim
