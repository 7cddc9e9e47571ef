#include "harness/metrics.hpp"

#include <cmath>

#include "error.hpp"

namespace patrol::harness {

MetricsAccumulator::MetricsAccumulator(int burnin) : burnin_(burnin) {
  if (burnin < 0) fail(Err::invalid_horizon, "negative burn-in");
}

void MetricsAccumulator::observe(int step, double mean_idleness,
                                 double max_idleness, int collisions,
                                 int active_agents) {
  if (step > burnin_) {
    ++measured_;
    sum_mean_ += mean_idleness;
    sum_max_ += max_idleness;
  }
  collisions_ += collisions;
  active_trace_.push_back(active_agents);
}

EpisodeMetrics MetricsAccumulator::finish(
    int horizon, int n_agents, int battery_failures,
    std::vector<double> recharge_samples) const {
  if (measured_ == 0)
    fail(Err::invalid_horizon, "no measured steps: horizon <= burn-in");
  EpisodeMetrics m;
  m.avg_idleness = sum_mean_ / measured_;
  m.max_bar_idleness = sum_max_ / measured_;
  m.collisions = collisions_;
  m.battery_failures = battery_failures;
  m.recharge_battery_samples = std::move(recharge_samples);
  m.horizon = horizon;
  m.n_agents = n_agents;
  m.n_agents_effective = active_trace_;
  return m;
}

MetricStat mean_stddev(const std::vector<double>& values) {
  if (values.size() < 2)
    fail(Err::insufficient_samples,
         "need at least two samples for a standard deviation");
  MetricStat s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(acc / static_cast<double>(values.size()));
  return s;
}

AggregateReport aggregate(const std::vector<EpisodeMetrics>& episodes) {
  if (episodes.size() < 2)
    fail(Err::insufficient_samples, "aggregate needs at least two episodes");

  const size_t n = episodes.size();
  std::vector<double> avg(n), maxbar(n), colls(n), fails(n);
  std::vector<double> recharge;
  AggregateReport report;
  report.episodes = static_cast<int>(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& e = episodes[i];
    avg[i] = e.avg_idleness;
    maxbar[i] = e.max_bar_idleness;
    colls[i] = static_cast<double>(e.collisions);
    fails[i] = static_cast<double>(e.battery_failures);
    report.agent_episodes += e.n_agents;
    recharge.insert(recharge.end(), e.recharge_battery_samples.begin(),
                    e.recharge_battery_samples.end());
  }
  report.avg_idleness = mean_stddev(avg);
  report.max_bar_idleness = mean_stddev(maxbar);
  report.collisions = mean_stddev(colls);
  report.battery_failures = mean_stddev(fails);
  report.recharge_count = static_cast<int>(recharge.size());
  if (recharge.size() >= 2)
    report.recharge_battery_fraction = mean_stddev(recharge);
  else if (recharge.size() == 1)
    report.recharge_battery_fraction = {recharge[0], 0.0};

  double total_failures = 0.0;
  for (double f : fails) total_failures += f;
  if (report.agent_episodes > 0)
    report.battery_failure_rate =
        total_failures / static_cast<double>(report.agent_episodes);
  return report;
}

}  // namespace patrol::harness
