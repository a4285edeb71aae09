#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avfm/search_space.hpp"

namespace avfm {

struct CostReport {
  std::string subnet_id;
  std::int64_t params = 0;
  std::int64_t flops = 0;
  int resolution = 224;
  std::optional<double> latency_ms;
  std::optional<double> energy_mj;

  std::string to_json() const;
  static std::string csv_header();
  std::string to_csv_row() const;
};

struct AnchorPoint {
  std::string subnet_id;
  double gflops = 0.0;
  double latency_ms = 0.0;
  double energy_mj = 0.0;
};

// Affine cost model fitted on measured anchors:
//   latency_ms = latency_per_gflop * GFLOPs + latency_offset
//   energy_mj  = energy_per_gflop  * GFLOPs + energy_offset
// Anchor subnets bypass the fit and evaluate to their measured values.
struct CalibrationTable {
  std::vector<AnchorPoint> anchors;
  double latency_per_gflop = 0.0;
  double latency_offset = 0.0;
  double energy_per_gflop = 0.0;
  double energy_offset = 0.0;
};

// Parameter count per the backbone structure: ConvNeXt-v2 stages plus the
// stage downsample layers (3x3 stem pair, 3x3, then 1x1 reducers), biases
// and norms included. The output projector is counted only when
// `projector_dim` is set.
std::int64_t count_params(const SearchSpace& space, const SubnetConfig& config,
                          std::optional<int> projector_dim = std::nullopt);

// Multiply-accumulate count at `resolution` (one MAC = one FLOP);
// elementwise ops excluded. Resolution must be divisible by 32.
std::int64_t count_flops(const SearchSpace& space, const SubnetConfig& config,
                         int resolution, std::optional<int> projector_dim = std::nullopt);

// Least-squares affine fit over >= 2 anchors; slopes must come out
// nonnegative or the anchors are rejected.
CalibrationTable calibrate(std::vector<AnchorPoint> anchors);

struct CostEstimate {
  double latency_ms = 0.0;
  double energy_mj = 0.0;
};

// Exact lookup for anchor ids, affine fit otherwise; clamped at zero.
CostEstimate estimate(const CalibrationTable& table, const std::string& subnet_id,
                      double flops);

CostReport cost_report(const SearchSpace& space, const SubnetConfig& config,
                       int resolution, const CalibrationTable* calibration = nullptr,
                       std::optional<int> projector_dim = std::nullopt);

// CSV with header "subnet_id,latency_ms,energy_mj"; anchor GFLOPs are
// resolved through count_flops against `space` at `resolution`.
CalibrationTable load_calibration_csv(const std::string& path, const SearchSpace& space,
                                      int resolution = 224);

}  // namespace avfm
