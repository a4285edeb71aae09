#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "avfm/cost_model.hpp"
#include "avfm/embedding_engine.hpp"
#include "avfm/search_space.hpp"

namespace avfm {

enum class CostMetric { flops, latency, energy, params };

CostMetric cost_metric_from_string(const std::string& name);
const char* to_string(CostMetric metric);

// Acc(subnet, scene) lookup. Accuracies live in [0,1]; percent-style
// files are normalized on load.
struct AccuracyProfile {
  std::vector<std::string> scenes;
  std::map<std::string, std::map<std::string, double>> table;  // scene -> id -> acc
  std::string metric_name = "accuracy";

  double at(const std::string& scene, const std::string& subnet_id) const;
  bool has_scene(const std::string& scene) const;
  // Subnet ids present for every scene, sorted.
  std::vector<std::string> subnet_ids() const;
};

// CSV with header "scene,subnet_id,accuracy"; values > 1 anywhere flag the
// whole file as percent.
AccuracyProfile load_profile_csv(const std::string& path,
                                 const std::string& metric_name = "accuracy");

struct SelectionRequest {
  std::string scene;
  double alpha = 1.0;  // required fraction of the best achievable accuracy
  CostMetric cost_metric = CostMetric::flops;
  std::vector<SubnetConfig> candidates;
};

struct SelectionResult {
  SubnetConfig chosen;
  std::string matched_scene;
  double threshold = 0.0;   // alpha * MaxAcc
  double achieved_accuracy = 0.0;
  double cost = 0.0;

  std::string to_json(CostMetric metric) const;
};

// Cost of one candidate under the request's metric, plus params for
// tie-breaking.
struct CandidateCost {
  double cost = 0.0;
  std::int64_t params = 0;
};
using CostFn = std::function<CandidateCost(const SubnetConfig&)>;

// flops/params analytically; latency/energy via the calibration table
// (required for those metrics).
CostFn make_cost_fn(const SearchSpace& space, int resolution, CostMetric metric,
                    const CalibrationTable* calibration = nullptr);

// Cheapest candidate whose accuracy reaches alpha * MaxAcc, where MaxAcc
// is the best accuracy any candidate achieves for the scene. Cost ties
// break by params, then id.
SelectionResult select_subnet(const AccuracyProfile& profile, const SelectionRequest& request,
                              const CostFn& cost_fn);

// Exact scene-name match after normalization; no embedding fallback here.
std::string resolve_scene(const std::string& query, const std::vector<std::string>& known_scenes);

// Cosine nearest neighbor over the bank; ties keep bank order.
std::string nearest_scene(const VectorX<float>& query, const EmbeddingBank& scene_bank);

// Per-alpha fractions of scenes that select each candidate.
struct SweepTable {
  std::vector<double> alphas;
  std::vector<std::string> subnet_ids;          // cost-ascending
  std::vector<std::vector<double>> fractions;   // [alpha][subnet]

  std::string to_csv() const;
  std::string to_json() const;
};

SweepTable sweep_alpha(const AccuracyProfile& profile, const std::vector<std::string>& scenes,
                       const std::vector<double>& alphas,
                       const std::vector<SubnetConfig>& candidates, CostMetric metric,
                       const CostFn& cost_fn);

}  // namespace avfm
