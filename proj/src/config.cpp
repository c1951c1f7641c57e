#include "quorum/config.hpp"

#include <fstream>

#include "quorum/ensemble_math.hpp"

namespace quorum {

namespace {

double require_number(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + ": field '" + key + "' must be a number");
    return v.get<double>();
}

}  // namespace

SystemSpec system_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    SystemSpec system;
    system.theta = require_number(doc, "theta", "config");
    if (!doc.contains("users") || !doc.at("users").is_array() || doc.at("users").empty())
        throw ConfigError("config: 'users' must be a nonempty array");
    std::size_t index = 0;
    for (const auto& uj : doc.at("users")) {
        const std::string where = "users[" + std::to_string(index) + "]";
        if (!uj.is_object()) throw ConfigError(where + ": must be an object");
        UserClusterSpec user;
        user.lambda = require_number(uj, "lambda", where);
        user.w = require_number(uj, "w", where);
        user.p = require_number(uj, "p", where);
        user.t = require_number(uj, "t", where);
        user.mu = require_number(uj, "mu", where);
        system.users.push_back(user);
        ++index;
    }
    try {
        validate(system);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return system;
}

LoadedConfig config_from_json(const nlohmann::json& doc) {
    LoadedConfig loaded;
    loaded.system = system_from_json(doc);
    if (doc.contains("m_range")) {
        const auto& r = doc.at("m_range");
        if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() ||
            !r[1].is_number_integer())
            throw ConfigError("config: 'm_range' must be [min, max] integers");
        const int lo = r[0].get<int>();
        const int hi = r[1].get<int>();
        if (lo < 1 || lo > hi) throw ConfigError("config: need 1 <= m_range[0] <= m_range[1]");
        loaded.m_range = {lo, hi};
    }
    if (doc.contains("seed")) {
        const auto& s = doc.at("seed");
        if (!s.is_number_unsigned() && !s.is_number_integer())
            throw ConfigError("config: 'seed' must be an integer");
        loaded.seed = s.get<std::uint64_t>();
    }
    return loaded;
}

LoadedConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(doc);
}

nlohmann::ordered_json system_to_json(const SystemSpec& system) {
    nlohmann::ordered_json doc;
    doc["theta"] = system.theta;
    auto users = nlohmann::ordered_json::array();
    for (const auto& u : system.users) {
        users.push_back({{"lambda", u.lambda},
                         {"w", u.w},
                         {"p", u.p},
                         {"t", u.t},
                         {"mu", u.mu}});
    }
    doc["users"] = std::move(users);
    return doc;
}

SystemSpec fig5_system(double theta) {
    SystemSpec system;
    system.theta = theta;
    for (int i = 1; i <= 10; ++i) {
        UserClusterSpec user;
        user.lambda = 1.0;
        user.w = 0.5;
        user.p = 0.7 + (i - 1) / 90.0;
        user.t = 1.0 + (i - 1) / 9.0;
        user.mu = 2.0 + 2.0 * (i - 1) / 9.0;
        system.users.push_back(user);
    }
    return system;
}

}  // namespace quorum
