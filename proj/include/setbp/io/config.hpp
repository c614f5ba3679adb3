#pragma once

#include "setbp/io/json_reader.hpp"
#include "setbp/scenario/scenario.hpp"
#include "setbp/slam/filter.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace setbp::io {

inline constexpr int kSchemaVersion = 1;

struct Variant {
    std::string name;
    FilterConfig filter;
};

struct ExperimentSpec {
    ScenarioConfig scenario;
    FilterConfig filter;
    int trials = 1;
    std::uint64_t base_seed = 1;
    std::vector<Variant> variants;

    std::uint64_t trial_seed(int trial) const { return base_seed + static_cast<std::uint64_t>(trial); }

    const Variant& variant(const std::string& name) const {
        for (const auto& v : variants) {
            if (v.name == name) return v;
        }
        throw ConfigError("variants", "no variant named '" + name + "'");
    }
};

inline ScenarioConfig parse_scenario(const Json& j, const std::string& path) {
    ScenarioConfig s;
    ObjectReader r(j, path);
    if (r.has("area")) {
        ObjectReader a(r.raw("area"), r.key_path("area"));
        a.number("x_min", s.area.x_min);
        a.number("x_max", s.area.x_max);
        a.number("y_min", s.area.y_min);
        a.number("y_max", s.area.y_max);
        a.finish();
    }
    r.integer("n_landmarks", s.n_landmarks);
    r.vector<2>("bs_position", s.bs_position);
    r.integer("horizon", s.horizon);
    r.number("dt", s.dt);
    r.number("sigma_process", s.sigma_process);
    r.number("sigma_meas", s.sigma_meas);
    r.number("fov_radius", s.fov_radius);
    r.number("p_detect", s.p_detect);
    r.number("clutter_mean", s.clutter_mean);
    r.number("clutter_density", s.clutter_density);
    r.integer("landmark_visible_from", s.landmark_visible_from);
    r.vector<4>("initial_state_mean", s.initial_state_mean);
    r.vector<4>("initial_cov_diag", s.initial_cov_diag);
    r.number("birth_hint_variance", s.birth_hint_variance);
    r.finish();
    try {
        s.validate();
    } catch (const InputError& e) {
        throw ConfigError(path, e.what());
    }
    return s;
}

/// Filter defaults inherited from the scenario model (the filter knows the true model).
inline FilterConfig filter_defaults(const ScenarioConfig& s) {
    FilterConfig f;
    f.p_detect = s.p_detect;
    f.fov_radius = s.fov_radius;
    f.clutter_intensity = s.clutter_mean > 0.0 ? s.clutter_density : 0.0;
    f.sigma_meas = s.sigma_meas;
    f.motion = ConstantVelocityModel{s.dt, s.sigma_process};
    f.initial_cov_diag = s.initial_cov_diag;
    return f;
}

inline void apply_filter_json(FilterConfig& f, const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    r.number("p_detect", f.p_detect);
    r.number("fov_radius", f.fov_radius);
    r.number("p_survive", f.p_survive);
    r.number("clutter_intensity", f.clutter_intensity);
    r.number("sigma_meas", f.sigma_meas);
    r.number("dt", f.motion.dt);
    r.number("sigma_process", f.motion.sigma_process);
    if (r.has("birth")) {
        std::string b;
        r.string("birth", b);
        if (b == "informative") {
            f.birth = BirthModel::Informative;
        } else if (b == "uninformative") {
            f.birth = BirthModel::Uninformative;
        } else {
            throw ConfigError(r.key_path("birth"), "expected \"informative\" or \"uninformative\"");
        }
    }
    r.number("uninformative_birth_weight", f.uninformative_birth_weight);
    r.number("uninformative_birth_variance", f.uninformative_birth_variance);
    r.number("informative_birth_weight", f.informative_birth_weight);
    r.number("informative_birth_variance", f.informative_birth_variance);
    r.number("mb_birth_existence", f.mb_birth_existence);
    r.number("detect_threshold", f.detect_threshold);
    r.number("bernoulli_prune", f.bernoulli_prune);
    r.number("poisson_prune", f.poisson_prune);
    r.number("merge_distance", f.merge_distance);
    r.integer("max_components", f.max_components);
    r.integer("particle_count", f.particle_count);
    r.number("ess_fraction", f.ess_fraction);
    r.vector<4>("initial_cov_diag", f.initial_cov_diag);
    if (r.has("mode")) {
        std::string m;
        r.string("mode", m);
        if (m == "PMB") {
            f.mode = FilterMode::PMB;
        } else if (m == "MB") {
            f.mode = FilterMode::MB;
        } else {
            throw ConfigError(r.key_path("mode"), "expected \"PMB\" or \"MB\"");
        }
    }
    r.boolean("use_new_target_sensor_messages", f.use_new_target_sensor_messages);
    r.boolean("bs_measurement_present", f.bs_measurement_present);
    r.integer("bs_use_until", f.bs_use_until);
    r.boolean("gating", f.gating);
    r.number("gate_threshold", f.gate_threshold);
    r.integer("assoc_max_iterations", f.association.max_iterations);
    r.number("assoc_tolerance", f.association.tolerance);
    r.number("assoc_damping", f.association.damping);
    r.finish();
    try {
        f.validate();
        if (f.association.max_iterations < 1) throw InputError("assoc_max_iterations must be >= 1");
        if (!(f.association.tolerance > 0.0)) throw InputError("assoc_tolerance must be positive");
        if (f.association.damping < 0.0 || f.association.damping >= 1.0) throw InputError("assoc_damping must lie in [0, 1)");
    } catch (const ConfigError&) {
        throw;
    } catch (const InputError& e) {
        throw ConfigError(path, e.what());
    }
}

inline std::vector<Variant> default_variants(const FilterConfig& base) {
    std::vector<Variant> v{{"pmb_full", base}, {"pmb_baseline", base}, {"mb", base}};
    v[1].filter.use_new_target_sensor_messages = false;
    v[2].filter.mode = FilterMode::MB;
    return v;
}

/// Parses an experiment description. Every error names the offending key path.
inline ExperimentSpec parse_experiment(const Json& j) {
    ExperimentSpec spec;
    ObjectReader r(j, "");
    int schema = -1;
    if (!r.has("schema")) throw ConfigError("schema", "missing schema version");
    r.integer("schema", schema);
    if (schema != kSchemaVersion) {
        throw ConfigError("schema", "unsupported schema version " + std::to_string(schema));
    }
    if (r.has("scenario")) spec.scenario = parse_scenario(r.raw("scenario"), "scenario");
    spec.filter = filter_defaults(spec.scenario);
    Json filter_json = Json::object();
    if (r.has("filter")) {
        filter_json = r.raw("filter");
        apply_filter_json(spec.filter, filter_json, "filter");
    }
    r.integer("trials", spec.trials);
    if (spec.trials < 1) throw ConfigError("trials", "must be >= 1");
    r.integer("base_seed", spec.base_seed);

    if (r.has("variants")) {
        const Json& vs = r.raw("variants");
        if (!vs.is_array()) throw ConfigError("variants", "expected an array");
        std::set<std::string> names;
        for (std::size_t i = 0; i < vs.size(); ++i) {
            const std::string path = "variants[" + std::to_string(i) + "]";
            ObjectReader vr(vs[i], path);
            Variant v;
            if (!vr.has("name")) throw ConfigError(vr.key_path("name"), "missing variant name");
            vr.string("name", v.name);
            if (v.name.empty()) throw ConfigError(vr.key_path("name"), "must not be empty");
            if (!names.insert(v.name).second) throw ConfigError(vr.key_path("name"), "duplicate variant '" + v.name + "'");
            v.filter = spec.filter;
            if (vr.has("filter")) apply_filter_json(v.filter, vr.raw("filter"), vr.key_path("filter"));
            vr.finish();
            spec.variants.push_back(std::move(v));
        }
        if (spec.variants.empty()) throw ConfigError("variants", "must not be empty");
    } else {
        spec.variants = default_variants(spec.filter);
    }
    r.finish();
    return spec;
}

inline ExperimentSpec load_experiment(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file, "cannot open config file");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(file, std::string("malformed JSON: ") + e.what());
    }
    return parse_experiment(j);
}

}  // namespace setbp::io
