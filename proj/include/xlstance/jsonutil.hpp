#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "xlstance/common.hpp"

namespace xlstance {

using json = nlohmann::json;

// Strict object reader: every key must be consumed through it, and
// finish() turns anything left over into a hard error naming the key.
// Silent acceptance of a misspelled field would silently change an
// experiment, so unknown keys are never tolerated.
class StrictObject {
public:
    StrictObject(const json& j, std::string context) : j_(j), ctx_(std::move(context)) {
        if (!j_.is_object()) throw ConfigError(ctx_ + ": expected an object");
    }

    bool contains(const std::string& key) {
        if (j_.contains(key)) {
            seen_.insert(key);
            return true;
        }
        return false;
    }

    const json& at(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(ctx_ + ": missing required key '" + key + "'");
        seen_.insert(key);
        return j_.at(key);
    }

    const json* find(const std::string& key) {
        if (!j_.contains(key)) return nullptr;
        seen_.insert(key);
        return &j_.at(key);
    }

    template <typename T>
    T require(const std::string& key) {
        return get_as<T>(at(key), key);
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        const json* v = find(key);
        return v == nullptr ? fallback : get_as<T>(*v, key);
    }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError(ctx_ + ": unknown key '" + it.key() + "'");
            }
        }
    }

private:
    template <typename T>
    T get_as(const json& v, const std::string& key) {
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            throw ConfigError(ctx_ + ": key '" + key + "' has the wrong type");
        }
    }

    const json& j_;
    std::string ctx_;
    std::set<std::string> seen_;
};

json load_json_file(const std::string& path);

}  // namespace xlstance
