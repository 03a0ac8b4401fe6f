#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "opnorm/errors.hpp"

namespace opnorm {

inline constexpr int kSchemaVersion = 1;

/// Strict reader over a JSON object: every key must be consumed, and type
/// mismatches are reported with the dotted field path.
class StrictObject {
public:
    StrictObject(const nlohmann::json& j, std::string path);

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    T get(const std::string& key, T fallback) {
        if (!j_.contains(key)) {
            return fallback;
        }
        return require<T>(key);
    }

    template <typename T>
    T require(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) {
            throw ConfigError("missing field '" + field(key) + "'", field(key));
        }
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("field '" + field(key) + "' has the wrong type", field(key));
        }
    }

    const nlohmann::json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    /// Throws ConfigError naming the first unknown key.
    void finish() const;

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    nlohmann::json j_;
    std::string path_;
    std::set<std::string> used_;
};

/// Requires schema_version to be present and equal to kSchemaVersion.
void check_schema_version(StrictObject& obj);

}  // namespace opnorm
