#include "harness/config.hpp"

#include <fstream>

#include "error.hpp"
#include "json_util.hpp"
#include "params_json.hpp"

namespace patrol::harness {

namespace {

void parse_strategy(const nlohmann::json& j, StrategySpec& spec) {
  JsonSection s(j, "strategy");
  s.text("kind", spec.kind);
  s.text("checkpoint", spec.checkpoint);
  s.number("b_l", spec.baseline.b_l);
  s.number("theta", spec.baseline.theta);
  s.number("kappa", spec.baseline.kappa);
  double c_norm = spec.c_norm;
  s.number("c_norm", c_norm);
  spec.c_norm = c_norm;           // rl observation normalization
  spec.baseline.c_norm = c_norm;  // and the classical scorers' one constant
  s.integer("dense1", spec.dense1);
  s.integer("dense2", spec.dense2);
  s.integer("dense3", spec.dense3);
  s.integer("gru", spec.gru);
  s.finish();
  if (spec.kind != "cr" && spec.kind != "part" && spec.kind != "sebs" &&
      spec.kind != "rl")
    fail(Err::bad_config, "strategy.kind must be cr, part, sebs or rl");
}

void parse_train(const nlohmann::json& j, mappo::TrainConfig& cfg) {
  JsonSection s(j, "train");
  s.number("gamma", cfg.gamma);
  s.number("gae_lambda", cfg.gae_lambda);
  s.number("clip_eps", cfg.clip_eps);
  s.integer("batches", cfg.batches);
  s.integer("epochs", cfg.epochs);
  s.number("entropy_coef", cfg.entropy_coef);
  s.number("lr_initial", cfg.lr_initial);
  s.number("lr_late", cfg.lr_late);
  s.integer("lr_switch_episode", cfg.lr_switch_episode);
  s.integer("episodes", cfg.episodes);
  s.integer("horizon", cfg.horizon);
  s.integer("parallel_episodes", cfg.parallel_episodes);
  if (const auto* stages = s.visit("curriculum")) {
    if (!stages->is_array() || stages->empty())
      fail(Err::bad_config, "train.curriculum must be a non-empty array");
    cfg.curriculum.clear();
    for (const auto& stage : *stages) {
      JsonSection st(stage, "train.curriculum[]");
      mappo::CurriculumStage parsed{-1, {}};
      st.integer("until_episode", parsed.until_episode);
      if (const auto* lanes = st.visit("lane_agents")) {
        if (!lanes->is_array())
          fail(Err::bad_config,
               "train.curriculum[].lane_agents must be an array");
        for (const auto& lane : *lanes) {
          if (!lane.is_number_integer())
            fail(Err::bad_config,
                 "train.curriculum[].lane_agents entries must be integers");
          parsed.lane_agents.push_back(lane.get<int>());
        }
      }
      st.finish();
      cfg.curriculum.push_back(std::move(parsed));
    }
  }
  s.integer("max_agents", cfg.max_agents);
  s.integer("truncation", cfg.truncation);
  s.integer("checkpoint_every", cfg.checkpoint_every);
  s.unsigned64("seed", cfg.seed);
  s.number("c_norm", cfg.c_norm);
  s.integer("dense1", cfg.dense1);
  s.integer("dense2", cfg.dense2);
  s.integer("dense3", cfg.dense3);
  s.integer("gru", cfg.gru);
  s.finish();
}

void parse_eval(const nlohmann::json& j, SimulateOptions& opt) {
  JsonSection s(j, "eval");
  s.integer("episodes", opt.episodes);
  s.integer("horizon", opt.horizon);
  s.integer("n_agents", opt.n_agents);
  s.integer("burnin", opt.burnin);
  s.unsigned64("seed", opt.seed);
  s.boolean("require_success", opt.require_success);
  s.integer("workers", opt.workers);
  s.boolean("events", opt.write_events);
  s.boolean("csv", opt.write_csv);
  s.finish();
}

}  // namespace

FileConfig parse_config(const nlohmann::json& root) {
  FileConfig cfg;
  JsonSection top(root, "config");
  if (const auto* map = top.visit("map")) {
    JsonSection s(*map, "map");
    s.text("path", cfg.map_path);
    // A trainer run records its map dimensions here; they are informational.
    s.ignore("height");
    s.ignore("width");
    s.finish();
  }
  if (const auto* env = top.visit("env")) parse_env_json(*env, cfg.env);
  if (const auto* rew = top.visit("rewards"))
    parse_rewards_json(*rew, cfg.rewards);
  if (const auto* str = top.visit("strategy"))
    parse_strategy(*str, cfg.strategy);
  if (const auto* train = top.visit("train")) parse_train(*train, cfg.train);
  if (const auto* eval = top.visit("eval")) parse_eval(*eval, cfg.eval);
  top.finish();
  return cfg;
}

FileConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::io, "cannot open config file " + path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Err::bad_config, "config file " + path + ": " + e.what());
  }
  return parse_config(root);
}

}  // namespace patrol::harness
