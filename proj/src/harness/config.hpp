#pragma once

#include <string>

#include "harness/episode.hpp"
#include "harness/experiments.hpp"
#include "json.hpp"
#include "mappo/mappo.hpp"
#include "rewards.hpp"
#include "world.hpp"

namespace patrol::harness {

// One JSON file drives every command: {map, env, rewards, strategy, train,
// eval}. Every section and key is optional — defaults are the reference
// values baked into the structs — but unknown keys are rejected (BadConfig)
// so typos cannot silently fall back to defaults. A trainer run's emitted
// config.json parses back unchanged.
struct FileConfig {
  std::string map_path;  // map.path; commands may override it by flag
  EnvParams env;
  RewardParams rewards;
  StrategySpec strategy;
  mappo::TrainConfig train;
  SimulateOptions eval;
};

FileConfig parse_config(const nlohmann::json& root);
FileConfig load_config(const std::string& path);  // IO on file trouble

}  // namespace patrol::harness
