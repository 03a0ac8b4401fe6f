#include "opnorm/config.hpp"

namespace opnorm {

StrictObject::StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
        throw ConfigError("'" + (path_.empty() ? std::string("config") : path_) + "' must be a JSON object",
                          path_);
    }
}

void StrictObject::finish() const {
    for (const auto& item : j_.items()) {
        if (!used_.count(item.key())) {
            throw ConfigError("unknown key '" + field(item.key()) + "'", field(item.key()));
        }
    }
}

void check_schema_version(StrictObject& obj) {
    if (!obj.has("schema_version")) {
        throw ConfigError("missing schema_version (expected " + std::to_string(kSchemaVersion) + ")",
                          obj.field("schema_version"));
    }
    const int version = obj.require<int>("schema_version");
    if (version != kSchemaVersion) {
        throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                              std::to_string(kSchemaVersion) + ")",
                          obj.field("schema_version"));
    }
}

}  // namespace opnorm
