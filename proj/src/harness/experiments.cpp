#include "harness/experiments.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include "error.hpp"
#include "rng.hpp"

namespace patrol::harness {

namespace {

double mean_active(const std::vector<int>& trace) {
  if (trace.empty()) return 0.0;
  double sum = 0.0;
  for (int a : trace) sum += a;
  return sum / static_cast<double>(trace.size());
}

nlohmann::json stat_json(const MetricStat& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}};
}

nlohmann::json aggregate_json(const AggregateReport& r) {
  return {{"avg_idleness", stat_json(r.avg_idleness)},
          {"max_bar_idleness", stat_json(r.max_bar_idleness)},
          {"collisions", stat_json(r.collisions)},
          {"battery_failures", stat_json(r.battery_failures)},
          {"recharge_battery_fraction", stat_json(r.recharge_battery_fraction)},
          {"battery_failure_rate", r.battery_failure_rate},
          {"episodes", r.episodes},
          {"agent_episodes", r.agent_episodes},
          {"recharge_count", r.recharge_count}};
}

nlohmann::json options_json(const SimulateOptions& opt) {
  // Worker count is excluded: it never affects the results, and reruns with
  // a different pool size must still produce byte-identical files.
  return {{"episodes", opt.episodes},
          {"horizon", opt.horizon},
          {"n_agents", opt.n_agents},
          {"burnin", opt.burnin},
          {"seed", opt.seed},
          {"require_success", opt.require_success}};
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::io, "cannot open " + path.string() + " for writing");
  return out;
}

nlohmann::json event_json(int episode, const StepEvent& ev) {
  nlohmann::json agent_events = nlohmann::json::array();
  for (const auto& [agent, kind] : ev.agent_events)
    agent_events.push_back({agent, kind});
  return {{"episode", episode},
          {"step", ev.step},
          {"duration_minutes", ev.duration_minutes},
          {"clock_minutes", ev.clock_minutes},
          {"mean_idleness", ev.mean_idleness},
          {"max_idleness", ev.max_idleness},
          {"active_agents", ev.active_agents},
          {"collisions", ev.collisions},
          {"agent_events", agent_events}};
}

}  // namespace

nlohmann::json SimulationResult::episode_json(size_t kept_index) const {
  const EpisodeMetrics& m = episodes.at(kept_index);
  return {{"episode", episode_indices.at(kept_index)},
          {"seed", episode_seeds.at(kept_index)},
          {"avg_idleness", m.avg_idleness},
          {"max_bar_idleness", m.max_bar_idleness},
          {"collisions", m.collisions},
          {"battery_failures", m.battery_failures},
          {"recharge_battery_samples", m.recharge_battery_samples},
          {"horizon", m.horizon},
          {"n_agents", m.n_agents},
          {"mean_active_agents", mean_active(m.n_agents_effective)}};
}

nlohmann::json SimulationResult::metrics_json(
    const SimulateOptions& opt) const {
  return {{"strategy", strategy_name},
          {"options", options_json(opt)},
          {"episodes_kept", static_cast<int>(episodes.size())},
          {"episodes_discarded", discarded},
          {"aggregate", aggregate_json(report)}};
}

SimulationResult simulate(std::shared_ptr<const GridMap> map,
                          const EnvParams& env, const StrategySpec& strategy,
                          const SimulateOptions& opt,
                          const std::string& out_dir) {
  if (opt.episodes < 1)
    fail(Err::bad_config, "episode count must be positive");

  Rng master(opt.seed);
  std::vector<uint64_t> seeds(static_cast<size_t>(opt.episodes));
  for (auto& s : seeds) s = master.next_u64();

  struct Slot {
    EpisodeMetrics metrics;
    std::vector<StepEvent> events;
  };
  std::vector<Slot> slots(static_cast<size_t>(opt.episodes));
  const bool capture = !out_dir.empty() && (opt.write_events || opt.write_csv);

  int workers = opt.workers > 0
                    ? opt.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (workers > opt.episodes) workers = opt.episodes;

  std::atomic<int> cursor{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          const int i = cursor.fetch_add(1);
          if (i >= opt.episodes) break;
          RunSpec rs;
          rs.strategy = strategy;
          rs.n_agents = opt.n_agents;
          rs.horizon = opt.horizon;
          rs.burnin = opt.burnin;
          rs.seed = seeds[static_cast<size_t>(i)];
          EventSink sink;
          if (capture) {
            auto& events = slots[static_cast<size_t>(i)].events;
            events.reserve(static_cast<size_t>(opt.horizon));
            sink = [&events](const StepEvent& ev) { events.push_back(ev); };
          }
          slots[static_cast<size_t>(i)].metrics =
              run_episode(map, env, rs, sink);
        }
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  SimulationResult result;
  result.strategy_name = strategy.kind;
  std::vector<EpisodeMetrics> kept;
  for (int i = 0; i < opt.episodes; ++i) {
    const EpisodeMetrics& m = slots[static_cast<size_t>(i)].metrics;
    if (opt.require_success && m.battery_failures > 0) {
      ++result.discarded;
      continue;
    }
    result.episode_indices.push_back(i);
    result.episode_seeds.push_back(seeds[static_cast<size_t>(i)]);
    kept.push_back(m);
  }
  result.episodes = kept;
  result.report = aggregate(kept);

  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    {
      auto out = open_out(dir / "metrics.json");
      out << result.metrics_json(opt).dump(2) << "\n";
    }
    {
      auto out = open_out(dir / "episodes.jsonl");
      for (size_t k = 0; k < result.episodes.size(); ++k)
        out << result.episode_json(k).dump() << "\n";
    }
    if (opt.write_events) {
      auto out = open_out(dir / "events.jsonl");
      for (int i = 0; i < opt.episodes; ++i)
        for (const StepEvent& ev : slots[static_cast<size_t>(i)].events)
          out << event_json(i, ev).dump() << "\n";
    }
    if (opt.write_csv) {
      auto out = open_out(dir / "steps.csv");
      out << "episode,step,mean_idleness,max_idleness\n";
      char line[128];
      for (int i = 0; i < opt.episodes; ++i)
        for (const StepEvent& ev : slots[static_cast<size_t>(i)].events) {
          std::snprintf(line, sizeof(line), "%d,%d,%.17g,%.17g\n", i, ev.step,
                        ev.mean_idleness, ev.max_idleness);
          out << line;
        }
    }
  }
  return result;
}

std::vector<SimulationResult> compare(
    std::shared_ptr<const GridMap> map, const EnvParams& env,
    const std::vector<StrategySpec>& strategies, const SimulateOptions& opt,
    const std::string& out_dir) {
  if (strategies.empty())
    fail(Err::bad_config, "compare needs at least one strategy");
  std::vector<SimulationResult> results;
  results.reserve(strategies.size());
  for (const StrategySpec& spec : strategies)
    results.push_back(simulate(map, env, spec, opt, ""));

  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    nlohmann::json rows = nlohmann::json::array();
    for (size_t i = 0; i < results.size(); ++i) {
      nlohmann::json row = {
          {"strategy", results[i].strategy_name},
          {"episodes_kept", static_cast<int>(results[i].episodes.size())},
          {"episodes_discarded", results[i].discarded},
          {"aggregate", aggregate_json(results[i].report)}};
      if (strategies[i].kind == "rl")
        row["checkpoint"] = strategies[i].checkpoint;
      rows.push_back(row);
    }
    auto out = open_out(dir / "compare.json");
    out << nlohmann::json{{"options", options_json(opt)},
                          {"strategies", rows}}
               .dump(2)
        << "\n";
  }
  return results;
}

}  // namespace patrol::harness
