// Command-line front end over the patrol C API. Every run is fully
// determined by (config file, flags, --seed); flags override config values.
// Usage errors exit 2; runtime errors exit 1 with a JSON error object on
// standard error; reports go to standard output as JSON.

#include <patrol/patrol.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

const char* status_name(patrol_status s) {
  switch (s) {
    case PATROL_OK: return "ok";
    case PATROL_E_UNKNOWN_GLYPH: return "unknown_glyph";
    case PATROL_E_NON_RECTANGULAR: return "non_rectangular";
    case PATROL_E_NO_STATION: return "no_station";
    case PATROL_E_NO_VERTEX: return "no_vertex";
    case PATROL_E_DISCONNECTED_GRAPH: return "disconnected_graph";
    case PATROL_E_TOO_MANY_AGENTS: return "too_many_agents";
    case PATROL_E_UNKNOWN_AGENT: return "unknown_agent";
    case PATROL_E_INVALID_ACTION: return "invalid_action";
    case PATROL_E_MESSAGE_OUT_OF_RANGE: return "message_out_of_range";
    case PATROL_E_NEGATIVE_IDLENESS: return "negative_idleness";
    case PATROL_E_OUT_OF_RANGE: return "out_of_range";
    case PATROL_E_SHAPE_MISMATCH: return "shape_mismatch";
    case PATROL_E_ALL_ACTIONS_MASKED: return "all_actions_masked";
    case PATROL_E_NON_FINITE: return "non_finite";
    case PATROL_E_NO_PATH_TO_STATION: return "no_path_to_station";
    case PATROL_E_PARTITION_FAILURE: return "partition_failure";
    case PATROL_E_INSUFFICIENT_SAMPLES: return "insufficient_samples";
    case PATROL_E_INVALID_HORIZON: return "invalid_horizon";
    case PATROL_E_LENGTH_MISMATCH: return "length_mismatch";
    case PATROL_E_ZERO_PROBABILITY: return "zero_probability";
    case PATROL_E_NO_RECORDED_FORWARD: return "no_recorded_forward";
    case PATROL_E_BAD_CONFIG: return "bad_config";
    case PATROL_E_IO: return "io";
    case PATROL_E_INVALID_ARGUMENT: return "invalid_argument";
    case PATROL_E_INTERNAL: return "internal";
  }
  return "unknown";
}

int runtime_failure(patrol_status status) {
  nlohmann::json err = {{"error",
                         {{"status", status},
                          {"code", status_name(status)},
                          {"message", patrol_last_error()}}}};
  std::cerr << err.dump() << "\n";
  return 1;
}

// Accumulates only the options the user actually set, so config-file values
// are overridden by flags but never by flag defaults.
struct OptionsBuilder {
  nlohmann::json j = nlohmann::json::object();

  void add_common(CLI::App* cmd) {
    cmd->add_option_function<std::string>(
        "--config", [this](const std::string& v) { j["config_path"] = v; },
        "JSON config file ({map, env, rewards, strategy, train, eval})");
    cmd->add_option_function<std::string>(
        "--map", [this](const std::string& v) { j["map_path"] = v; },
        "Map text file");
    cmd->add_option_function<uint64_t>(
        "--seed", [this](uint64_t v) { j["seed"] = v; }, "Master seed");
  }

  void add_episode_set(CLI::App* cmd) {
    cmd->add_option_function<int>(
        "--episodes", [this](const int& v) { j["episodes"] = v; },
        "Number of episodes");
    cmd->add_option_function<int>(
        "--horizon", [this](const int& v) { j["horizon"] = v; },
        "Steps per episode");
    cmd->add_option_function<int>(
        "--agents", [this](const int& v) { j["agents"] = v; },
        "Agent count");
    cmd->add_option_function<int>(
        "--burnin", [this](const int& v) { j["burnin"] = v; },
        "Steps excluded from the idleness means");
    cmd->add_option_function<int>(
        "--workers", [this](const int& v) { j["workers"] = v; },
        "Worker threads (0 = hardware concurrency)");
    cmd->add_flag_function(
        "--require-success",
        [this](int64_t) { j["require_success"] = true; },
        "Drop episodes with battery failures from the aggregate");
    cmd->add_flag_function(
        "--events", [this](int64_t) { j["events"] = true; },
        "Write per-step events.jsonl (needs --out)");
    cmd->add_flag_function(
        "--csv", [this](int64_t) { j["csv"] = true; },
        "Write per-step steps.csv for plotting (needs --out)");
    cmd->add_option_function<std::string>(
        "--out", [this](const std::string& v) { j["out_dir"] = v; },
        "Directory for metrics.json / episodes.jsonl / ...");
    cmd->add_option_function<std::string>(
        "--checkpoint", [this](const std::string& v) { j["checkpoint"] = v; },
        "Trained actor checkpoint (rl strategy)");
  }
};

int emit_report(patrol_status status, char* report) {
  if (status != PATROL_OK) return runtime_failure(status);
  if (report != nullptr) std::cout << report << "\n";
  patrol_string_free(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent patrolling laboratory"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Run one strategy for N episodes and aggregate metrics");
  OptionsBuilder sim_opts;
  sim_opts.add_common(simulate);
  simulate->add_option_function<std::string>(
      "--strategy",
      [&sim_opts](const std::string& v) { sim_opts.j["strategy"] = v; },
      "cr | part | sebs | rl");
  sim_opts.add_episode_set(simulate);

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "Run a trained checkpoint (rl strategy) for N episodes");
  OptionsBuilder eval_opts;
  eval_opts.add_common(evaluate);
  eval_opts.add_episode_set(evaluate);

  // compare
  auto* compare = app.add_subcommand(
      "compare", "Run several strategies on the same worlds, one table");
  OptionsBuilder cmp_opts;
  cmp_opts.add_common(compare);
  cmp_opts.add_episode_set(compare);
  compare->add_option_function<std::vector<std::string>>(
      "--strategies",
      [&cmp_opts](const std::vector<std::string>& v) {
        cmp_opts.j["strategies"] = v;
      },
      "Comma-separated strategy kinds (e.g. cr,sebs)")
      ->delimiter(',');

  // train
  auto* train = app.add_subcommand("train", "MAPPO training run from config");
  OptionsBuilder train_opts;
  train_opts.add_common(train);
  train->add_option_function<std::string>(
      "--run-dir",
      [&train_opts](const std::string& v) { train_opts.j["run_dir"] = v; },
      "Output directory for config.json, metrics.jsonl and checkpoints");

  // map validate / generate
  auto* map_cmd = app.add_subcommand("map", "Map utilities");
  map_cmd->require_subcommand(1);
  auto* validate = map_cmd->add_subcommand("validate", "Parse and check a map");
  std::string validate_path;
  validate->add_option("path", validate_path, "Map text file")->required();
  auto* generate = map_cmd->add_subcommand("generate", "Random connected map");
  OptionsBuilder gen_opts;
  generate->add_option_function<int>(
      "--width", [&gen_opts](const int& v) { gen_opts.j["width"] = v; },
      "Map width");
  generate->add_option_function<int>(
      "--height", [&gen_opts](const int& v) { gen_opts.j["height"] = v; },
      "Map height");
  generate->add_option_function<double>(
      "--obstacle-density",
      [&gen_opts](const double& v) { gen_opts.j["obstacle_density"] = v; },
      "Fraction of obstacle cells");
  generate->add_option_function<double>(
      "--priority-density",
      [&gen_opts](const double& v) { gen_opts.j["priority_density"] = v; },
      "Fraction of prioritized vertices");
  generate->add_option_function<int>(
      "--stations", [&gen_opts](const int& v) { gen_opts.j["stations"] = v; },
      "Charging station count");
  generate->add_option_function<uint64_t>(
      "--seed", [&gen_opts](uint64_t v) { gen_opts.j["seed"] = v; },
      "Generator seed");
  std::string generate_out;
  generate->add_option("--out", generate_out,
                       "Write the map here instead of standard output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // --help exits 0 with the usage text
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  if (simulate->parsed()) {
    char* report = nullptr;
    const patrol_status status =
        patrol_simulate(sim_opts.j.dump().c_str(), &report);
    return emit_report(status, report);
  }
  if (evaluate->parsed()) {
    char* report = nullptr;
    const patrol_status status =
        patrol_evaluate(eval_opts.j.dump().c_str(), &report);
    return emit_report(status, report);
  }
  if (compare->parsed()) {
    char* report = nullptr;
    const patrol_status status =
        patrol_compare(cmp_opts.j.dump().c_str(), &report);
    return emit_report(status, report);
  }
  if (train->parsed()) {
    char* report = nullptr;
    const patrol_status status =
        patrol_train(train_opts.j.dump().c_str(), &report);
    return emit_report(status, report);
  }
  if (validate->parsed()) {
    patrol_map* map = nullptr;
    const patrol_status status = patrol_map_load(validate_path.c_str(), &map);
    if (status != PATROL_OK) return runtime_failure(status);
    nlohmann::json report = {{"valid", true},
                             {"width", patrol_map_width(map)},
                             {"height", patrol_map_height(map)}};
    patrol_map_free(map);
    std::cout << report.dump() << "\n";
    return 0;
  }
  if (generate->parsed()) {
    patrol_map* map = nullptr;
    patrol_status status =
        patrol_map_generate(gen_opts.j.dump().c_str(), &map);
    if (status != PATROL_OK) return runtime_failure(status);
    char* text = nullptr;
    status = patrol_map_render(map, &text);
    patrol_map_free(map);
    if (status != PATROL_OK) return runtime_failure(status);
    if (generate_out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(generate_out, std::ios::binary);
      if (!out) {
        patrol_string_free(text);
        std::cerr << R"({"error":{"status":23,"code":"io","message":")"
                  << "cannot open " << generate_out << R"("}})" << "\n";
        return 1;
      }
      out << text;
    }
    patrol_string_free(text);
    return 0;
  }
  return 2;
}
