#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "quorum/types.hpp"

namespace quorum {

inline constexpr const char* kToolVersion = "0.1.0";

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadedConfig {
    SystemSpec system;
    std::optional<std::pair<int, int>> m_range;
    std::optional<std::uint64_t> seed;
};

// Schema: { "theta": number, "users": [ {lambda, w, p, t, mu}, ... ],
//           "m_range": [min, max]?, "seed": integer? }
// Throws ConfigError with a diagnostic naming the offending field.
SystemSpec system_from_json(const nlohmann::json& doc);
LoadedConfig config_from_json(const nlohmann::json& doc);
LoadedConfig load_config_file(const std::string& path);

nlohmann::ordered_json system_to_json(const SystemSpec& system);

// The built-in 10-cluster reference family behind the CLI's --fig5 flag:
// lambda_i = 1, w_i = 0.5, p_i = 0.7 + (i-1)/90, t_i = 1 + (i-1)/9,
// mu_i = 2 + 2(i-1)/9 for i = 1..10. theta is left for the caller.
SystemSpec fig5_system(double theta = 0.0);

}  // namespace quorum
