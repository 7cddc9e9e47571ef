#pragma once

#include <vector>

namespace patrol::harness {

// Per-episode evaluation bundle. avg_idleness is the mean over the measured
// steps of the per-step mean vertex idleness; max_bar_idleness the mean of
// the per-step maximum — both in minutes, so avg <= max_bar always holds.
struct EpisodeMetrics {
  double avg_idleness = 0.0;
  double max_bar_idleness = 0.0;
  int collisions = 0;
  int battery_failures = 0;
  std::vector<double> recharge_battery_samples;  // fractions at swap entry
  int horizon = 0;
  int n_agents = 0;
  std::vector<int> n_agents_effective;  // active count after each step
};

// Streaming accumulator fed once per completed step (steps are 1-based).
// Steps at or below the burn-in threshold are excluded from the idleness
// means; collision counts cover the whole run.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(int burnin = 0);

  void observe(int step, double mean_idleness, double max_idleness,
               int collisions, int active_agents);

  // Throws InvalidHorizon when the burn-in swallowed every step.
  EpisodeMetrics finish(int horizon, int n_agents, int battery_failures,
                        std::vector<double> recharge_samples) const;

 private:
  int burnin_;
  int measured_ = 0;
  double sum_mean_ = 0.0;
  double sum_max_ = 0.0;
  int collisions_ = 0;
  std::vector<int> active_trace_;
};

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;  // population convention: sqrt(sum (x-mu)^2 / n)
};

struct AggregateReport {
  MetricStat avg_idleness;
  MetricStat max_bar_idleness;
  MetricStat collisions;
  MetricStat battery_failures;
  MetricStat recharge_battery_fraction;  // over all samples, all episodes
  double battery_failure_rate = 0.0;     // failures per agent-episode
  int episodes = 0;
  int agent_episodes = 0;
  int recharge_count = 0;
};

// Mean and population standard deviation; needs at least two values.
MetricStat mean_stddev(const std::vector<double>& values);

// Folds per-episode metrics into the report; throws InsufficientSamples for
// fewer than two episodes (a single sample has no spread to report).
AggregateReport aggregate(const std::vector<EpisodeMetrics>& episodes);

}  // namespace patrol::harness
