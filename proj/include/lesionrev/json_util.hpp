#pragma once

#include <set>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "lesionrev/geometry.hpp"

namespace lesionrev {

// Reads keys from a JSON object and rejects any key that was not read.
class StrictObject {
public:
    StrictObject(const nlohmann::json &j, std::string context) : j_(j), context_(std::move(context)) {
        if (!j_.is_object()) throw std::invalid_argument(context_ + ": expected a JSON object");
    }

    template <class T>
    void get(const char *key, T &out) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception &e) {
            throw std::invalid_argument(context_ + "." + key + ": " + e.what());
        }
    }

    const nlohmann::json *sub(const char *key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw std::invalid_argument(context_ + ": unknown key \"" + it.key() + "\"");
    }

private:
    const nlohmann::json &j_;
    std::string context_;
    std::set<std::string> seen_;
};

inline nlohmann::json vec3_json(const Vec3 &v) { return nlohmann::json::array({v.x, v.y, v.z}); }

inline Vec3 vec3_from_json(const nlohmann::json &j, const std::string &context) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument(context + ": expected [x, y, z]");
    try {
        return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    } catch (const nlohmann::json::exception &e) {
        throw std::invalid_argument(context + ": " + e.what());
    }
}

} // namespace lesionrev
