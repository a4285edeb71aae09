#include "avfm/sim_runtime.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "avfm/errors.hpp"
#include "avfm/io_util.hpp"

namespace avfm {

namespace {
using nlohmann::json;

struct PerFrameCost {
  double flops = 0.0;
  double latency_ms = 0.0;
  double energy_mj = 0.0;
};

}  // namespace

std::int64_t SceneTimeline::total_frames() const {
  std::int64_t total = 0;
  for (const TimelineSegment& s : segments) total += s.frames;
  return total;
}

void SceneTimeline::check() const {
  if (frame_period_ms <= 0.0) throw ValidationError("timeline: frame period must be positive");
  if (segments.empty()) throw ValidationError("timeline: no segments");
  for (const TimelineSegment& s : segments) {
    if (s.frames <= 0)
      throw ValidationError("timeline: segment '" + s.scene + "' must have frames > 0");
  }
}

SceneTimeline timeline_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    SceneTimeline timeline;
    timeline.frame_period_ms = j.at("frame_period_ms").get<double>();
    for (const auto& seg : j.at("segments"))
      timeline.segments.push_back(
          {seg.at("scene").get<std::string>(), seg.at("frames").get<std::int64_t>()});
    timeline.check();
    return timeline;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("timeline JSON: ") + e.what());
  }
}

SceneTimeline load_timeline(const std::string& path) {
  return timeline_from_json(read_file(path));
}

std::string timeline_to_json(const SceneTimeline& timeline) {
  json j;
  j["frame_period_ms"] = timeline.frame_period_ms;
  j["segments"] = json::array();
  for (const TimelineSegment& s : timeline.segments)
    j["segments"].push_back({{"scene", s.scene}, {"frames", s.frames}});
  return j.dump(2) + "\n";
}

SimReport run_sim(const SceneTimeline& timeline, const AccuracyProfile& profile,
                  const CalibrationTable& calibration, const SearchSpace& space,
                  const SimConfig& config, const std::vector<SubnetConfig>& candidates) {
  timeline.check();
  if (config.agent_cadence_s <= 0.0) throw ValidationError("agent cadence must be positive");
  if (config.switch_latency_ms < 0.0 || config.switch_energy_mj < 0.0)
    throw ValidationError("switch costs must be nonnegative");
  if (candidates.empty()) throw ValidationError("no candidate subnets");
  for (const TimelineSegment& s : timeline.segments) {
    if (!profile.has_scene(s.scene))
      throw ValidationError("profile has no scene '" + s.scene + "' used by the timeline");
  }

  const CostFn cost_fn = make_cost_fn(space, config.resolution, config.cost_metric, &calibration);

  // Per-frame cost of each candidate, keyed by id.
  std::map<std::string, PerFrameCost> frame_cost;
  for (const SubnetConfig& c : candidates) {
    const std::string id = c.id();
    const double flops = static_cast<double>(count_flops(space, c, config.resolution));
    const CostEstimate e = estimate(calibration, id, flops);
    frame_cost[id] = {flops, e.latency_ms, e.energy_mj};
  }

  SimReport report;
  const double cadence_ms = config.agent_cadence_s * 1000.0;
  double next_cadence = cadence_ms;
  std::string active;  // empty before the first activation
  std::int64_t frame_index = 0;

  for (const TimelineSegment& seg : timeline.segments) {
    SegmentReport row;
    row.scene = seg.scene;
    row.frames = seg.frames;

    // Scene-change trigger.
    SelectionRequest request{seg.scene, config.alpha, config.cost_metric, candidates};
    const SelectionResult selection = select_subnet(profile, request, cost_fn);
    ++report.selector_invocations;
    const std::string chosen = selection.chosen.id();
    const bool switched = !active.empty() && chosen != active;
    if (switched) {
      ++report.subnet_switches;
      ++row.switches;
    }
    active = chosen;
    row.subnet_id = active;

    // Cadence ticks inside this segment re-confirm the same scene, so
    // they never change the active subnet; only the invocation count
    // moves.
    const double t_first = static_cast<double>(frame_index) * timeline.frame_period_ms;
    const double t_last =
        static_cast<double>(frame_index + seg.frames - 1) * timeline.frame_period_ms;
    if (next_cadence <= t_last) {
      const std::int64_t ticks =
          static_cast<std::int64_t>(std::floor((t_last - next_cadence) / cadence_ms)) + 1;
      report.selector_invocations += static_cast<int>(ticks);
      next_cadence += static_cast<double>(ticks) * cadence_ms;
    }
    (void)t_first;

    const PerFrameCost& cost = frame_cost.at(active);
    const double accuracy = profile.at(seg.scene, active);
    row.flops = static_cast<double>(seg.frames) * cost.flops;
    row.latency_ms = static_cast<double>(seg.frames) * cost.latency_ms +
                     (switched ? config.switch_latency_ms : 0.0);
    row.energy_mj = static_cast<double>(seg.frames) * cost.energy_mj +
                    (switched ? config.switch_energy_mj : 0.0);
    row.accuracy_sum = static_cast<double>(seg.frames) * accuracy;

    // Deadline check per frame; the switch penalty lands on the first frame.
    if (cost.latency_ms > config.deadline_budget_ms) {
      report.deadline_violations += seg.frames;
    } else if (switched &&
               cost.latency_ms + config.switch_latency_ms > config.deadline_budget_ms) {
      report.deadline_violations += 1;
    }

    frame_index += seg.frames;
    report.per_segment.push_back(std::move(row));
  }

  // Aggregates are sums of the emitted rows, so conservation is exact.
  for (const SegmentReport& row : report.per_segment) {
    report.total_frames += row.frames;
    report.total_flops += row.flops;
    report.total_latency_ms += row.latency_ms;
    report.total_energy_mj += row.energy_mj;
    report.avg_accuracy += row.accuracy_sum;
  }
  const double n = static_cast<double>(report.total_frames);
  report.avg_flops_per_frame = report.total_flops / n;
  report.avg_latency_ms = report.total_latency_ms / n;
  report.avg_energy_mj = report.total_energy_mj / n;
  report.avg_accuracy /= n;
  return report;
}

std::vector<TradeoffPoint> tradeoff_curve(const SceneTimeline& timeline,
                                          const AccuracyProfile& profile,
                                          const CalibrationTable& calibration,
                                          const SearchSpace& space, const SimConfig& base_config,
                                          const std::vector<double>& alphas,
                                          const std::vector<SubnetConfig>& candidates) {
  if (!std::is_sorted(alphas.begin(), alphas.end()))
    throw ValidationError("curve alphas must be ascending");
  std::vector<TradeoffPoint> curve;
  for (const double alpha : alphas) {
    SimConfig config = base_config;
    config.alpha = alpha;
    const SimReport report = run_sim(timeline, profile, calibration, space, config, candidates);
    curve.push_back({alpha, report.avg_flops_per_frame, report.avg_latency_ms,
                     report.avg_energy_mj, report.avg_accuracy});
  }
  return curve;
}

std::string SimReport::to_json() const {
  json j;
  j["total_frames"] = total_frames;
  j["subnet_switches"] = subnet_switches;
  j["selector_invocations"] = selector_invocations;
  j["deadline_violations"] = deadline_violations;
  j["total_flops"] = total_flops;
  j["total_latency_ms"] = total_latency_ms;
  j["total_energy_mj"] = total_energy_mj;
  j["avg_flops_per_frame"] = avg_flops_per_frame;
  j["avg_latency_ms"] = avg_latency_ms;
  j["avg_energy_mj"] = avg_energy_mj;
  j["avg_accuracy"] = avg_accuracy;
  j["per_segment"] = json::array();
  for (const SegmentReport& row : per_segment) {
    j["per_segment"].push_back({{"scene", row.scene},
                                {"subnet_id", row.subnet_id},
                                {"frames", row.frames},
                                {"switches", row.switches},
                                {"flops", row.flops},
                                {"latency_ms", row.latency_ms},
                                {"energy_mj", row.energy_mj},
                                {"accuracy_sum", row.accuracy_sum}});
  }
  return j.dump(2) + "\n";
}

std::string curve_to_csv(const std::vector<TradeoffPoint>& curve) {
  std::string out = "alpha,avg_flops,avg_latency_ms,avg_energy_mj,avg_accuracy\n";
  for (const TradeoffPoint& p : curve) {
    out += format_double(p.alpha) + "," + format_double(p.avg_flops) + "," +
           format_double(p.avg_latency_ms) + "," + format_double(p.avg_energy_mj) + "," +
           format_double(p.avg_accuracy) + "\n";
  }
  return out;
}

std::string curve_to_json(const std::vector<TradeoffPoint>& curve) {
  json j = json::array();
  for (const TradeoffPoint& p : curve) {
    j.push_back({{"alpha", p.alpha},
                 {"avg_flops", p.avg_flops},
                 {"avg_latency_ms", p.avg_latency_ms},
                 {"avg_energy_mj", p.avg_energy_mj},
                 {"avg_accuracy", p.avg_accuracy}});
  }
  return j.dump(2) + "\n";
}

}  // namespace avfm
