#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avfm/cost_model.hpp"
#include "avfm/selector.hpp"

namespace avfm {

struct TimelineSegment {
  std::string scene;
  std::int64_t frames = 0;
};

// File format: {frame_period_ms, segments:[{scene, frames}]}
struct SceneTimeline {
  double frame_period_ms = 50.0;
  std::vector<TimelineSegment> segments;

  std::int64_t total_frames() const;
  void check() const;
};

SceneTimeline load_timeline(const std::string& path);
SceneTimeline timeline_from_json(const std::string& text);
std::string timeline_to_json(const SceneTimeline& timeline);

struct SimConfig {
  double alpha = 0.95;
  double agent_cadence_s = 300.0;  // periodic agent re-confirmation
  double switch_latency_ms = 0.0;
  double switch_energy_mj = 0.0;
  CostMetric cost_metric = CostMetric::flops;
  double deadline_budget_ms = 1000.0;
  int resolution = 224;
};

struct SegmentReport {
  std::string scene;
  std::string subnet_id;
  std::int64_t frames = 0;
  int switches = 0;  // switches charged while this segment was active
  double flops = 0.0;
  double latency_ms = 0.0;  // includes switch latency
  double energy_mj = 0.0;   // includes switch energy
  double accuracy_sum = 0.0;
};

struct SimReport {
  std::int64_t total_frames = 0;
  int subnet_switches = 0;
  int selector_invocations = 0;
  std::int64_t deadline_violations = 0;
  double total_flops = 0.0;
  double total_latency_ms = 0.0;
  double total_energy_mj = 0.0;
  double avg_flops_per_frame = 0.0;
  double avg_latency_ms = 0.0;
  double avg_energy_mj = 0.0;
  double avg_accuracy = 0.0;
  std::vector<SegmentReport> per_segment;

  std::string to_json() const;
};

// Event loop over the frame stream: the selector runs at t=0, on every
// scene change, and at each cadence boundary; every frame accrues the
// active subnet's per-frame cost and profile accuracy; a subnet change
// charges the switch cost once. Aggregates are sums of the per-segment
// rows, so conservation is exact.
SimReport run_sim(const SceneTimeline& timeline, const AccuracyProfile& profile,
                  const CalibrationTable& calibration, const SearchSpace& space,
                  const SimConfig& config, const std::vector<SubnetConfig>& candidates);

struct TradeoffPoint {
  double alpha = 0.0;
  double avg_flops = 0.0;
  double avg_latency_ms = 0.0;
  double avg_energy_mj = 0.0;
  double avg_accuracy = 0.0;
};

// One run_sim per alpha (ascending).
std::vector<TradeoffPoint> tradeoff_curve(const SceneTimeline& timeline,
                                          const AccuracyProfile& profile,
                                          const CalibrationTable& calibration,
                                          const SearchSpace& space, const SimConfig& base_config,
                                          const std::vector<double>& alphas,
                                          const std::vector<SubnetConfig>& candidates);

std::string curve_to_csv(const std::vector<TradeoffPoint>& curve);
std::string curve_to_json(const std::vector<TradeoffPoint>& curve);

}  // namespace avfm
