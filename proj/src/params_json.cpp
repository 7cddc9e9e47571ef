#include "params_json.hpp"

#include "error.hpp"
#include "json_util.hpp"

namespace patrol {

void parse_env_json(const nlohmann::json& j, EnvParams& env) {
  JsonSection s(j, "env");
  s.number("b_max", env.b_max);
  s.integer_range("b_swap_range", env.b_swap_min, env.b_swap_max);
  s.number_range("b_init_range", env.b_init_min, env.b_init_max);
  s.number("p_dyn_max", env.p_dyn_max);
  s.number("dt_minutes", env.dt_minutes);
  s.number("duration_multiplier_max", env.duration_multiplier_max);
  s.number_range("drain_range", env.drain_min, env.drain_max);
  std::string init;
  s.text("init_idleness", init);
  if (!init.empty()) {
    if (init == "zero")
      env.init_idleness = EnvParams::InitIdleness::Zero;
    else if (init == "saturated")
      env.init_idleness = EnvParams::InitIdleness::Saturated;
    else
      fail(Err::bad_config, "env.init_idleness must be 'zero' or 'saturated'");
  }
  s.number("saturated_idleness_minutes", env.saturated_idleness_minutes);
  s.finish();
}

nlohmann::json env_to_json(const EnvParams& env) {
  return {
      {"b_max", env.b_max},
      {"b_swap_range", {env.b_swap_min, env.b_swap_max}},
      {"b_init_range", {env.b_init_min, env.b_init_max}},
      {"p_dyn_max", env.p_dyn_max},
      {"dt_minutes", env.dt_minutes},
      {"duration_multiplier_max", env.duration_multiplier_max},
      {"drain_range", {env.drain_min, env.drain_max}},
      {"init_idleness",
       env.init_idleness == EnvParams::InitIdleness::Zero ? "zero"
                                                          : "saturated"},
      {"saturated_idleness_minutes", env.saturated_idleness_minutes},
  };
}

void parse_rewards_json(const nlohmann::json& j, RewardParams& rewards) {
  JsonSection s(j, "rewards");
  s.number("c_norm", rewards.c_norm);
  s.number("c_rp", rewards.c_rp);
  s.number("c_d", rewards.c_d);
  s.number("c_pb", rewards.c_pb);
  s.number("c_pbm", rewards.c_pbm);
  s.number("c_pbb", rewards.c_pbb);
  s.number("c_pc", rewards.c_pc);
  s.number("b_l", rewards.b_l);
  s.finish();
}

nlohmann::json rewards_to_json(const RewardParams& rewards) {
  return {
      {"c_norm", rewards.c_norm}, {"c_rp", rewards.c_rp},
      {"c_d", rewards.c_d},       {"c_pb", rewards.c_pb},
      {"c_pbm", rewards.c_pbm},   {"c_pbb", rewards.c_pbb},
      {"c_pc", rewards.c_pc},     {"b_l", rewards.b_l},
  };
}

}  // namespace patrol
