#pragma once

#include "json.hpp"
#include "rewards.hpp"
#include "world.hpp"

namespace patrol {

// JSON forms of the parameter structs, shared by the config file, the
// trainer's run manifest and the C API. Ranges are [lo, hi] pairs:
//   {"b_max":550, "b_swap_range":[80,150], "b_init_range":[0.9,1.0],
//    "p_dyn_max":0.05, "dt_minutes":0.1, "duration_multiplier_max":1.2,
//    "drain_range":[0.9,1.1], "init_idleness":"zero"}
// Parsing starts from the given struct (callers pass defaults), touches only
// present keys, and rejects unknown ones.
void parse_env_json(const nlohmann::json& j, EnvParams& env);
nlohmann::json env_to_json(const EnvParams& env);

void parse_rewards_json(const nlohmann::json& j, RewardParams& rewards);
nlohmann::json rewards_to_json(const RewardParams& rewards);

}  // namespace patrol
