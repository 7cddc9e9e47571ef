#include <patrol/patrol.h>

#include <climits>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "grid_map.hpp"
#include "harness/config.hpp"
#include "harness/episode.hpp"
#include "harness/experiments.hpp"
#include "json.hpp"
#include "json_util.hpp"
#include "mappo/mappo.hpp"
#include "params_json.hpp"
#include "world.hpp"

struct patrol_map {
  std::shared_ptr<const patrol::GridMap> map;
};

struct patrol_world {
  patrol::World world;
};

namespace {

using patrol::Err;
using patrol::Error;
using patrol::fail;

thread_local std::string g_last_error;

template <typename F>
patrol_status guarded(F&& f) noexcept {
  try {
    f();
    g_last_error.clear();
    return PATROL_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return e.status();
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PATROL_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return PATROL_E_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) fail(Err::invalid_argument, what);
}

nlohmann::json parse_json_text(const char* text, const char* what) {
  require(text != nullptr, "options JSON must not be null");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Err::bad_config, std::string(what) + ": " + e.what());
  }
}

// Options shared by simulate/compare/evaluate: a base config (inline object
// or file) refined by flat overrides.
struct RunRequest {
  patrol::harness::FileConfig cfg;
  std::string out_dir;
  std::vector<std::string> compare_kinds;
};

RunRequest parse_run_request(const nlohmann::json& j, bool compare_mode) {
  patrol::JsonSection s(j, "options");
  RunRequest req;
  std::string config_path;
  s.text("config_path", config_path);
  const nlohmann::json* inline_cfg = s.visit("config");
  if (inline_cfg && !config_path.empty())
    fail(Err::bad_config, "give either config or config_path, not both");
  if (inline_cfg) req.cfg = patrol::harness::parse_config(*inline_cfg);
  if (!config_path.empty()) req.cfg = patrol::harness::load_config(config_path);

  s.text("map_path", req.cfg.map_path);
  std::string kind;
  s.text("strategy", kind);
  if (!kind.empty()) req.cfg.strategy.kind = kind;
  s.text("checkpoint", req.cfg.strategy.checkpoint);
  s.integer("episodes", req.cfg.eval.episodes);
  s.integer("horizon", req.cfg.eval.horizon);
  s.integer("agents", req.cfg.eval.n_agents);
  s.integer("burnin", req.cfg.eval.burnin);
  s.unsigned64("seed", req.cfg.eval.seed);
  s.boolean("require_success", req.cfg.eval.require_success);
  s.integer("workers", req.cfg.eval.workers);
  s.boolean("events", req.cfg.eval.write_events);
  s.boolean("csv", req.cfg.eval.write_csv);
  s.text("out_dir", req.out_dir);
  if (compare_mode) {
    const auto* kinds = s.visit("strategies");
    if (!kinds || !kinds->is_array() || kinds->empty())
      fail(Err::bad_config, "compare needs a non-empty strategies array");
    for (const auto& k : *kinds) {
      if (!k.is_string())
        fail(Err::bad_config, "strategies entries must be strings");
      req.compare_kinds.push_back(k.get<std::string>());
    }
  }
  s.finish();
  if (req.cfg.map_path.empty())
    fail(Err::bad_config, "map_path is required (option or config map.path)");
  if (req.cfg.eval.episodes < 1)
    fail(Err::bad_config, "episode count must be positive");
  return req;
}

std::shared_ptr<const patrol::GridMap> load_shared_map(
    const std::string& path) {
  return std::make_shared<const patrol::GridMap>(patrol::load_map(path));
}

patrol_status run_simulate(const char* options_json, char** report_out,
                           bool force_rl) {
  return guarded([&] {
    require(report_out != nullptr, "report output pointer must not be null");
    auto req = parse_run_request(
        parse_json_text(options_json, "options"), false);
    if (force_rl) req.cfg.strategy.kind = "rl";
    auto map = load_shared_map(req.cfg.map_path);
    auto result = patrol::harness::simulate(map, req.cfg.env,
                                            req.cfg.strategy, req.cfg.eval,
                                            req.out_dir);
    *report_out = dup_string(result.metrics_json(req.cfg.eval).dump(2));
  });
}

const char* status_string(patrol::AgentStatus s) {
  switch (s) {
    case patrol::AgentStatus::Active: return "active";
    case patrol::AgentStatus::Swapping: return "swapping";
    case patrol::AgentStatus::Failed: return "failed";
  }
  return "?";
}

}  // namespace

extern "C" {

const char* patrol_version(void) { return "1.0.0"; }

const char* patrol_last_error(void) { return g_last_error.c_str(); }

void patrol_string_free(char* s) { std::free(s); }

/* ---- maps ---- */

patrol_status patrol_map_parse(const char* text, patrol_map** out) {
  return guarded([&] {
    require(text != nullptr, "map text must not be null");
    require(out != nullptr, "map output pointer must not be null");
    *out = new patrol_map{
        std::make_shared<const patrol::GridMap>(patrol::parse_map(text))};
  });
}

patrol_status patrol_map_load(const char* path, patrol_map** out) {
  return guarded([&] {
    require(path != nullptr, "map path must not be null");
    require(out != nullptr, "map output pointer must not be null");
    *out = new patrol_map{load_shared_map(path)};
  });
}

patrol_status patrol_map_generate(const char* options_json, patrol_map** out) {
  return guarded([&] {
    require(out != nullptr, "map output pointer must not be null");
    auto j = parse_json_text(options_json, "map options");
    patrol::JsonSection s(j, "map options");
    patrol::MapGenOptions opt;
    uint64_t seed = 1;
    s.integer("width", opt.width);
    s.integer("height", opt.height);
    s.number("obstacle_density", opt.obstacle_density);
    s.number("priority_density", opt.priority_density);
    s.integer("max_priority", opt.max_priority);
    s.integer("stations", opt.stations);
    s.unsigned64("seed", seed);
    s.finish();
    *out = new patrol_map{std::make_shared<const patrol::GridMap>(
        patrol::generate_map(opt, seed))};
  });
}

patrol_status patrol_map_render(const patrol_map* map, char** text_out) {
  return guarded([&] {
    require(map != nullptr, "map handle must not be null");
    require(text_out != nullptr, "text output pointer must not be null");
    *text_out = dup_string(patrol::render_map(*map->map));
  });
}

void patrol_map_free(patrol_map* map) { delete map; }

int32_t patrol_map_width(const patrol_map* map) {
  return map ? map->map->width() : 0;
}

int32_t patrol_map_height(const patrol_map* map) {
  return map ? map->map->height() : 0;
}

int32_t patrol_map_cell_kind(const patrol_map* map, int32_t row, int32_t col) {
  if (!map || !map->map->in_bounds({row, col})) return -1;
  return static_cast<int32_t>(map->map->kind(row, col));
}

int32_t patrol_map_priority(const patrol_map* map, int32_t row, int32_t col) {
  if (!map || !map->map->in_bounds({row, col})) return INT32_MIN;
  return map->map->priority(row, col);
}

/* ---- worlds ---- */

patrol_status patrol_world_create(const patrol_map* map, const char* env_json,
                                  uint32_t n_agents, uint64_t seed,
                                  patrol_world** out) {
  return guarded([&] {
    require(map != nullptr, "map handle must not be null");
    require(out != nullptr, "world output pointer must not be null");
    patrol::EnvParams env;
    if (env_json != nullptr && *env_json != '\0')
      patrol::parse_env_json(parse_json_text(env_json, "env"), env);
    *out = new patrol_world{
        patrol::reset(map->map, static_cast<int>(n_agents), env, seed)};
  });
}

void patrol_world_free(patrol_world* world) { delete world; }

patrol_status patrol_world_valid_actions(const patrol_world* world,
                                         uint32_t agent, uint8_t mask_out[5]) {
  return guarded([&] {
    require(world != nullptr, "world handle must not be null");
    require(mask_out != nullptr, "mask output pointer must not be null");
    auto mask = world->world.valid_actions(static_cast<int>(agent));
    for (int a = 0; a < patrol::kNumActions; ++a)
      mask_out[a] = mask[static_cast<size_t>(a)] ? 1 : 0;
  });
}

patrol_status patrol_world_step(patrol_world* world, const uint32_t* messages,
                                const uint32_t* actions, uint32_t n,
                                char** outcome_json_out) {
  return guarded([&] {
    require(world != nullptr, "world handle must not be null");
    require(messages != nullptr, "messages must not be null");
    require(actions != nullptr, "actions must not be null");
    if (static_cast<int>(n) != world->world.n_agents())
      fail(Err::length_mismatch,
           "messages/actions arrays must hold one entry per agent");
    std::vector<int> msg(n), act(n);
    for (uint32_t i = 0; i < n; ++i) {
      msg[i] = static_cast<int>(messages[i]);
      act[i] = static_cast<int>(actions[i]);
    }
    auto outcome = world->world.step(msg, act);
    if (outcome_json_out) {
      nlohmann::json events = nlohmann::json::array();
      for (const auto& e : outcome.events)
        events.push_back(
            {{"agent", e.agent}, {"kind", patrol::event_name(e.kind)}});
      nlohmann::json j = {
          {"step", world->world.step_index()},
          {"duration_minutes", outcome.duration_minutes},
          {"clock_minutes", world->world.clock_minutes()},
          {"collisions", outcome.collisions},
          {"events", std::move(events)},
          {"idleness_mean", world->world.idleness_mean()},
          {"idleness_max", world->world.idleness_max()},
          {"active_agents", world->world.active_count()},
      };
      *outcome_json_out = dup_string(j.dump());
    }
  });
}

patrol_status patrol_world_state_json(const patrol_world* world,
                                      char** state_json_out) {
  return guarded([&] {
    require(world != nullptr, "world handle must not be null");
    require(state_json_out != nullptr, "state output pointer must not be null");
    const patrol::World& w = world->world;
    nlohmann::json idleness = nlohmann::json::array();
    for (int r = 0; r < w.map().height(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < w.map().width(); ++c)
        row.push_back(w.idleness().at(r, c));
      idleness.push_back(std::move(row));
    }
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& a : w.agents())
      agents.push_back({{"id", a.id},
                        {"row", a.location.row},
                        {"col", a.location.col},
                        {"battery", a.battery},
                        {"status", status_string(a.status)},
                        {"swap_remaining", a.swap_remaining},
                        {"p_dyn", a.p_dyn},
                        {"last_message", a.last_message}});
    nlohmann::json j = {
        {"step", w.step_index()},
        {"clock_minutes", w.clock_minutes()},
        {"idleness", std::move(idleness)},
        {"agents", std::move(agents)},
    };
    *state_json_out = dup_string(j.dump());
  });
}

/* ---- experiments ---- */

patrol_status patrol_simulate(const char* options_json,
                              char** report_json_out) {
  return run_simulate(options_json, report_json_out, false);
}

patrol_status patrol_evaluate(const char* options_json,
                              char** report_json_out) {
  return run_simulate(options_json, report_json_out, true);
}

patrol_status patrol_compare(const char* options_json,
                             char** report_json_out) {
  return guarded([&] {
    require(report_json_out != nullptr,
            "report output pointer must not be null");
    auto req =
        parse_run_request(parse_json_text(options_json, "options"), true);
    auto map = load_shared_map(req.cfg.map_path);
    std::vector<patrol::harness::StrategySpec> specs;
    for (const auto& kind : req.compare_kinds) {
      auto spec = req.cfg.strategy;  // shared knobs (checkpoint, widths, ...)
      spec.kind = kind;
      specs.push_back(std::move(spec));
    }
    auto results = patrol::harness::compare(map, req.cfg.env, specs,
                                            req.cfg.eval, req.out_dir);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : results)
      rows.push_back({{"strategy", r.strategy_name},
                      {"episodes_kept", static_cast<int>(r.episodes.size())},
                      {"episodes_discarded", r.discarded},
                      {"aggregate",
                       r.metrics_json(req.cfg.eval)["aggregate"]}});
    nlohmann::json report = {{"strategies", std::move(rows)}};
    *report_json_out = dup_string(report.dump(2));
  });
}

patrol_status patrol_train(const char* options_json, char** report_json_out) {
  return guarded([&] {
    auto j = parse_json_text(options_json, "options");
    patrol::JsonSection s(j, "options");
    patrol::harness::FileConfig cfg;
    std::string config_path, run_dir;
    s.text("config_path", config_path);
    const nlohmann::json* inline_cfg = s.visit("config");
    if (inline_cfg && !config_path.empty())
      fail(Err::bad_config, "give either config or config_path, not both");
    if (inline_cfg) cfg = patrol::harness::parse_config(*inline_cfg);
    if (!config_path.empty()) cfg = patrol::harness::load_config(config_path);
    s.text("map_path", cfg.map_path);
    s.text("run_dir", run_dir);
    s.unsigned64("seed", cfg.train.seed);
    s.finish();
    if (cfg.map_path.empty())
      fail(Err::bad_config, "map_path is required (option or config map.path)");
    if (run_dir.empty()) fail(Err::bad_config, "run_dir is required");

    auto map = load_shared_map(cfg.map_path);
    patrol::mappo::Trainer trainer(map, cfg.env, cfg.rewards, cfg.train);
    trainer.run(run_dir);
    if (report_json_out) {
      nlohmann::json report = {
          {"run_dir", run_dir},
          {"episodes", trainer.episode()},
          {"final_checkpoint", run_dir + "/final.bin"},
      };
      *report_json_out = dup_string(report.dump(2));
    }
  });
}

}  // extern "C"
