#pragma once

#include "setbp/io/json_reader.hpp"
#include "setbp/scenario/scenario.hpp"
#include "setbp/slam/filter.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace setbp::io {

namespace fs = std::filesystem;

/// Writes `content` to a sibling temporary file and renames it into place.
inline void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << content;
        if (!out) throw InputError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string trial_file_name(int trial) {
    std::ostringstream s;
    s << "trial_" << std::setw(4) << std::setfill('0') << trial << ".ndjson";
    return s.str();
}

/// Sorted trial files (trial_*.ndjson) in a directory.
inline std::vector<fs::path> trial_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.rfind("trial_", 0) == 0 && e.path().extension() == ".ndjson") {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<Json> read_ndjson(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open " + file.string());
    std::vector<Json> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::parse_error& e) {
            throw InputError(file.string() + ":" + std::to_string(n) + ": malformed record: " + e.what());
        }
    }
    if (out.empty() || out.front().value("record", "") != "header") {
        throw InputError(file.string() + ": missing header record");
    }
    return out;
}

struct Dataset {
    int trial = 0;
    std::uint64_t seed = 0;
    GroundTruth truth;
};

inline std::string dataset_to_ndjson(const Dataset& d) {
    std::string s;
    Json header{{"record", "header"},
                {"kind", "dataset"},
                {"schema", 1},
                {"trial", d.trial},
                {"seed", d.seed},
                {"horizon", d.truth.steps.size()},
                {"landmarks", to_json(d.truth.landmarks)},
                {"initial_state", to_json(Eigen::Vector4d(d.truth.initial_state))},
                {"prior_mean", to_json(Eigen::Vector4d(d.truth.prior_mean))}};
    s += header.dump() + "\n";
    for (const auto& st : d.truth.steps) {
        Json rec{{"record", "step"},
                 {"k", st.k},
                 {"state", to_json(Eigen::Vector4d(st.state))},
                 {"process_noise", to_json(st.process_noise)},
                 {"measurements", to_json(st.measurements)},
                 {"origins", st.origins},
                 {"visible", st.visible},
                 {"newly_detected", st.newly_detected},
                 {"birth_hints", to_json(st.birth_hints)}};
        s += rec.dump() + "\n";
    }
    return s;
}

inline Dataset read_dataset(const fs::path& file) {
    const auto recs = read_ndjson(file);
    const Json& h = recs.front();
    if (h.value("kind", "") != "dataset") throw InputError(file.string() + ": not a dataset file");
    Dataset d;
    try {
        d.trial = h.at("trial").get<int>();
        d.seed = h.at("seed").get<std::uint64_t>();
        d.truth.landmarks = points_from_json(h.at("landmarks"), "landmarks");
        d.truth.initial_state = vec_from_json<4>(h.at("initial_state"), "initial_state");
        d.truth.prior_mean = vec_from_json<4>(h.at("prior_mean"), "prior_mean");
        for (std::size_t i = 1; i < recs.size(); ++i) {
            const Json& r = recs[i];
            ScenarioStep st;
            st.k = r.at("k").get<int>();
            st.state = vec_from_json<4>(r.at("state"), "state");
            st.process_noise = vec_from_json<2>(r.at("process_noise"), "process_noise");
            st.measurements = points_from_json(r.at("measurements"), "measurements");
            st.origins = r.at("origins").get<std::vector<int>>();
            st.visible = r.at("visible").get<std::vector<int>>();
            st.newly_detected = r.at("newly_detected").get<std::vector<int>>();
            st.birth_hints = points_from_json(r.at("birth_hints"), "birth_hints");
            d.truth.steps.push_back(std::move(st));
        }
    } catch (const Json::exception& e) {
        throw InputError(file.string() + ": " + e.what());
    }
    if (d.truth.steps.size() != h.at("horizon").get<std::size_t>()) {
        throw InputError(file.string() + ": truncated dataset");
    }
    return d;
}

/// Filter output for one time step.
struct StepResult {
    int k = 0;
    SensorState sensor;
    std::vector<Eigen::Vector2d> map;
    StepDiagnostics diag;
};

struct TrialResult {
    int trial = 0;
    std::string variant;
    std::vector<StepResult> steps;
};

inline std::string result_to_ndjson(const TrialResult& r) {
    std::string s;
    Json header{{"record", "header"}, {"kind", "result"}, {"schema", 1},
                {"trial", r.trial},   {"variant", r.variant}, {"horizon", r.steps.size()}};
    s += header.dump() + "\n";
    for (const auto& st : r.steps) {
        Json rec{{"record", "step"},
                 {"k", st.k},
                 {"sensor_estimate", to_json(Eigen::Vector4d(st.sensor))},
                 {"map_estimate", to_json(st.map)},
                 {"ess", st.diag.ess},
                 {"resampled", st.diag.resampled},
                 {"bernoulli_count", st.diag.bernoulli_count},
                 {"ppp_mass", st.diag.ppp_mass},
                 {"association_iterations", st.diag.association_iterations},
                 {"association_converged", st.diag.association_converged}};
        s += rec.dump() + "\n";
    }
    return s;
}

inline TrialResult read_result(const fs::path& file) {
    const auto recs = read_ndjson(file);
    const Json& h = recs.front();
    if (h.value("kind", "") != "result") throw InputError(file.string() + ": not a result file");
    TrialResult r;
    try {
        r.trial = h.at("trial").get<int>();
        r.variant = h.at("variant").get<std::string>();
        for (std::size_t i = 1; i < recs.size(); ++i) {
            const Json& j = recs[i];
            StepResult st;
            st.k = j.at("k").get<int>();
            st.sensor = vec_from_json<4>(j.at("sensor_estimate"), "sensor_estimate");
            st.map = points_from_json(j.at("map_estimate"), "map_estimate");
            st.diag.ess = j.at("ess").get<double>();
            st.diag.resampled = j.at("resampled").get<bool>();
            st.diag.bernoulli_count = j.at("bernoulli_count").get<std::size_t>();
            st.diag.ppp_mass = j.at("ppp_mass").get<double>();
            st.diag.association_iterations = j.at("association_iterations").get<int>();
            st.diag.association_converged = j.at("association_converged").get<bool>();
            r.steps.push_back(std::move(st));
        }
    } catch (const Json::exception& e) {
        throw InputError(file.string() + ": " + e.what());
    }
    if (r.steps.size() != h.at("horizon").get<std::size_t>()) throw InputError(file.string() + ": truncated result");
    return r;
}

}  // namespace setbp::io
