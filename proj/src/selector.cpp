#include "avfm/selector.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

#include "avfm/errors.hpp"
#include "avfm/io_util.hpp"

namespace avfm {

namespace {
using nlohmann::json;
}

CostMetric cost_metric_from_string(const std::string& name) {
  if (name == "flops") return CostMetric::flops;
  if (name == "latency") return CostMetric::latency;
  if (name == "energy") return CostMetric::energy;
  if (name == "params") return CostMetric::params;
  throw ValidationError("unknown cost metric: " + name);
}

const char* to_string(CostMetric metric) {
  switch (metric) {
    case CostMetric::flops: return "flops";
    case CostMetric::latency: return "latency";
    case CostMetric::energy: return "energy";
    case CostMetric::params: return "params";
  }
  return "unknown";
}

double AccuracyProfile::at(const std::string& scene, const std::string& subnet_id) const {
  const auto row = table.find(scene);
  if (row == table.end()) throw ValidationError("profile has no scene " + scene);
  const auto cell = row->second.find(subnet_id);
  if (cell == row->second.end())
    throw ValidationError("profile hole: scene " + scene + ", subnet " + subnet_id);
  return cell->second;
}

bool AccuracyProfile::has_scene(const std::string& scene) const {
  return table.count(scene) > 0;
}

std::vector<std::string> AccuracyProfile::subnet_ids() const {
  std::set<std::string> common;
  bool first = true;
  for (const auto& [_, row] : table) {
    std::set<std::string> ids;
    for (const auto& [id, __] : row) ids.insert(id);
    if (first) {
      common = std::move(ids);
      first = false;
    } else {
      std::set<std::string> kept;
      std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(),
                            std::inserter(kept, kept.begin()));
      common = std::move(kept);
    }
  }
  return {common.begin(), common.end()};
}

AccuracyProfile load_profile_csv(const std::string& path, const std::string& metric_name) {
  const auto lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != "scene,subnet_id,accuracy")
    throw ValidationError("profile CSV must start with header scene,subnet_id,accuracy");

  struct Row {
    std::string scene, id;
    double acc;
  };
  std::vector<Row> rows;
  bool any_above_one = false;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cells = split(lines[i], ',');
    if (cells.size() != 3)
      throw ValidationError("profile CSV line " + std::to_string(i + 1) + ": need 3 columns");
    Row row;
    row.scene = trim(cells[0]);
    row.id = trim(cells[1]);
    try {
      row.acc = std::stod(cells[2]);
    } catch (const std::exception&) {
      throw ValidationError("profile CSV line " + std::to_string(i + 1) + ": bad accuracy");
    }
    if (row.acc < 0.0)
      throw ValidationError("profile CSV line " + std::to_string(i + 1) + ": negative accuracy");
    any_above_one |= row.acc > 1.0;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("profile CSV has no data rows: " + path);

  AccuracyProfile profile;
  profile.metric_name = metric_name;
  const double scale = any_above_one ? 0.01 : 1.0;  // percent inputs normalized
  for (const Row& row : rows) {
    if (!profile.table.count(row.scene)) profile.scenes.push_back(row.scene);
    auto [_, inserted] = profile.table[row.scene].emplace(row.id, row.acc * scale);
    if (!inserted)
      throw ValidationError("profile CSV: duplicate entry for " + row.scene + "/" + row.id);
  }
  for (const auto& [scene, row] : profile.table) {
    for (const auto& [id, acc] : row) {
      if (acc < 0.0 || acc > 1.0)
        throw ValidationError("profile accuracy out of [0,1] for " + scene + "/" + id);
    }
  }
  return profile;
}

CostFn make_cost_fn(const SearchSpace& space, int resolution, CostMetric metric,
                    const CalibrationTable* calibration) {
  if ((metric == CostMetric::latency || metric == CostMetric::energy) && calibration == nullptr)
    throw ValidationError(std::string("cost metric ") + to_string(metric) +
                          " needs a calibration table");
  const CalibrationTable calib = calibration ? *calibration : CalibrationTable{};
  const bool has_calib = calibration != nullptr;
  return [space, resolution, metric, calib, has_calib](const SubnetConfig& config) {
    CandidateCost out;
    out.params = count_params(space, config);
    switch (metric) {
      case CostMetric::params:
        out.cost = static_cast<double>(out.params);
        break;
      case CostMetric::flops:
        out.cost = static_cast<double>(count_flops(space, config, resolution));
        break;
      case CostMetric::latency:
      case CostMetric::energy: {
        const double flops = static_cast<double>(count_flops(space, config, resolution));
        const CostEstimate e = estimate(calib, config.id(), flops);
        out.cost = metric == CostMetric::latency ? e.latency_ms : e.energy_mj;
        break;
      }
    }
    (void)has_calib;
    return out;
  };
}

SelectionResult select_subnet(const AccuracyProfile& profile, const SelectionRequest& request,
                              const CostFn& cost_fn) {
  if (!(request.alpha > 0.0))
    throw ValidationError("alpha must be positive (alpha = 0 is rejected, not 'always minimal')");
  if (request.alpha > 1.0) throw ValidationError("alpha must not exceed 1");
  if (request.candidates.empty()) throw ValidationError("no candidate subnets");
  if (!profile.has_scene(request.scene))
    throw ValidationError("profile has no scene " + request.scene);

  struct Scored {
    const SubnetConfig* config;
    std::string id;
    double accuracy;
    CandidateCost cost;
  };
  std::vector<Scored> scored;
  scored.reserve(request.candidates.size());
  double max_acc = 0.0;
  for (const SubnetConfig& candidate : request.candidates) {
    Scored s;
    s.config = &candidate;
    s.id = candidate.id();
    s.accuracy = profile.at(request.scene, s.id);  // throws naming any hole
    s.cost = cost_fn(candidate);
    max_acc = std::max(max_acc, s.accuracy);
    scored.push_back(std::move(s));
  }

  const double threshold = request.alpha * max_acc;
  const Scored* best = nullptr;
  for (const Scored& s : scored) {
    if (s.accuracy < threshold) continue;
    if (best == nullptr || s.cost.cost < best->cost.cost ||
        (s.cost.cost == best->cost.cost &&
         (s.cost.params < best->cost.params ||
          (s.cost.params == best->cost.params && s.id < best->id))))
      best = &s;
  }
  // alpha <= 1 guarantees the argmax candidate qualifies.

  SelectionResult result;
  result.chosen = *best->config;
  result.matched_scene = request.scene;
  result.threshold = threshold;
  result.achieved_accuracy = best->accuracy;
  result.cost = best->cost.cost;
  return result;
}

std::string resolve_scene(const std::string& query, const std::vector<std::string>& known_scenes) {
  const std::string normalized = normalize_scene_phrase(query);
  for (const std::string& scene : known_scenes) {
    if (normalize_scene_phrase(scene) == normalized) return scene;
  }
  throw ValidationError("unknown scene '" + query + "' and no embedding available");
}

std::string nearest_scene(const VectorX<float>& query, const EmbeddingBank& scene_bank) {
  if (scene_bank.count() == 0) throw ValidationError("nearest_scene: empty scene bank");
  int best = 0;
  double best_sim = -2.0;
  for (int i = 0; i < scene_bank.count(); ++i) {
    const double s = cosine(query, scene_bank.vectors.row(i).transpose());
    if (s > best_sim) {  // strict: ties keep the earliest bank row
      best_sim = s;
      best = i;
    }
  }
  return scene_bank.labels[static_cast<size_t>(best)];
}

std::string SelectionResult::to_json(CostMetric metric) const {
  json j;
  j["chosen"] = chosen.id();
  j["matched_scene"] = matched_scene;
  j["threshold"] = threshold;
  j["achieved_accuracy"] = achieved_accuracy;
  j["cost"] = cost;
  j["cost_metric"] = to_string(metric);
  return j.dump(2) + "\n";
}

SweepTable sweep_alpha(const AccuracyProfile& profile, const std::vector<std::string>& scenes,
                       const std::vector<double>& alphas,
                       const std::vector<SubnetConfig>& candidates, CostMetric metric,
                       const CostFn& cost_fn) {
  if (!std::is_sorted(alphas.begin(), alphas.end()))
    throw ValidationError("sweep alphas must be ascending");
  if (scenes.empty()) throw ValidationError("sweep needs at least one scene");

  // Column order: cost-ascending, same tie-break chain as selection.
  struct Col {
    std::string id;
    CandidateCost cost;
  };
  std::vector<Col> cols;
  for (const SubnetConfig& c : candidates) cols.push_back({c.id(), cost_fn(c)});
  std::sort(cols.begin(), cols.end(), [](const Col& a, const Col& b) {
    if (a.cost.cost != b.cost.cost) return a.cost.cost < b.cost.cost;
    if (a.cost.params != b.cost.params) return a.cost.params < b.cost.params;
    return a.id < b.id;
  });

  SweepTable table;
  table.alphas = alphas;
  for (const Col& col : cols) table.subnet_ids.push_back(col.id);

  for (const double alpha : alphas) {
    std::vector<double> fractions(cols.size(), 0.0);
    for (const std::string& scene : scenes) {
      SelectionRequest request{scene, alpha, metric, candidates};
      const SelectionResult result = select_subnet(profile, request, cost_fn);
      const std::string id = result.chosen.id();
      for (size_t i = 0; i < cols.size(); ++i) {
        if (cols[i].id == id) {
          fractions[i] += 1.0 / static_cast<double>(scenes.size());
          break;
        }
      }
    }
    table.fractions.push_back(std::move(fractions));
  }
  return table;
}

std::string SweepTable::to_csv() const {
  std::string out = "alpha";
  for (const std::string& id : subnet_ids) out += "," + id;
  out += "\n";
  for (size_t r = 0; r < alphas.size(); ++r) {
    out += format_double(alphas[r]);
    for (double f : fractions[r]) out += "," + format_double(f);
    out += "\n";
  }
  return out;
}

std::string SweepTable::to_json() const {
  json j;
  j["subnet_ids"] = subnet_ids;
  j["rows"] = json::array();
  for (size_t r = 0; r < alphas.size(); ++r) {
    json row;
    row["alpha"] = alphas[r];
    row["fractions"] = fractions[r];
    j["rows"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

}  // namespace avfm
