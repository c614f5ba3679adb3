#pragma once

#include "setbp/core/errors.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace setbp::io {

using Json = nlohmann::json;

/// Configuration error carrying the offending key path (e.g. "filter.mode").
class ConfigError : public InputError {
public:
    ConfigError(const std::string& path, const std::string& msg)
        : InputError(path + ": " + msg), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Strict reader over one JSON object: typed getters that report the full key
/// path, plus a final check that rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const Json& raw(const std::string& key) {
        seen_.insert(key);
        return obj_.at(key);
    }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        const Json& v = raw(key);
        if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
        out = v.get<double>();
    }

    template <typename Int>
    void integer(const std::string& key, Int& out) {
        if (!has(key)) return;
        const Json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
        if constexpr (std::is_unsigned_v<Int>) {
            if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0) {
                out = static_cast<Int>(v.get<std::uint64_t>());
                return;
            }
            throw ConfigError(key_path(key), "expected a nonnegative integer");
        } else {
            out = static_cast<Int>(v.get<std::int64_t>());
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (!has(key)) return;
        const Json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(key_path(key), "expected true or false");
        out = v.get<bool>();
    }

    void string(const std::string& key, std::string& out) {
        if (!has(key)) return;
        const Json& v = raw(key);
        if (!v.is_string()) throw ConfigError(key_path(key), "expected a string");
        out = v.get<std::string>();
    }

    template <int N>
    void vector(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
        if (!has(key)) return;
        const Json& v = raw(key);
        if (!v.is_array() || v.size() != static_cast<std::size_t>(N)) {
            throw ConfigError(key_path(key), "expected an array of " + std::to_string(N) + " numbers");
        }
        for (int i = 0; i < N; ++i) {
            if (!v[static_cast<std::size_t>(i)].is_number()) throw ConfigError(key_path(key), "expected numbers");
            out(i) = v[static_cast<std::size_t>(i)].get<double>();
        }
    }

    /// Throws on the first key that was never read.
    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
        }
    }

private:
    const Json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

inline Json to_json(const Eigen::Vector2d& v) { return Json::array({v(0), v(1)}); }
inline Json to_json(const Eigen::Vector4d& v) { return Json::array({v(0), v(1), v(2), v(3)}); }

inline Json to_json(const std::vector<Eigen::Vector2d>& pts) {
    Json a = Json::array();
    for (const auto& p : pts) a.push_back(to_json(p));
    return a;
}

template <int N>
Eigen::Matrix<double, N, 1> vec_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
        throw InputError(what + ": expected an array of " + std::to_string(N) + " numbers");
    }
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) out(i) = j[static_cast<std::size_t>(i)].get<double>();
    return out;
}

inline std::vector<Eigen::Vector2d> points_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) throw InputError(what + ": expected an array of points");
    std::vector<Eigen::Vector2d> out;
    out.reserve(j.size());
    for (const auto& p : j) out.push_back(vec_from_json<2>(p, what));
    return out;
}

}  // namespace setbp::io
