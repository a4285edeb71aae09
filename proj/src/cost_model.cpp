#include "avfm/cost_model.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "avfm/errors.hpp"
#include "avfm/io_util.hpp"

namespace avfm {

namespace {

using nlohmann::json;

void require_valid(const SearchSpace& space, const SubnetConfig& config) {
  const auto violations = validate(space, config);
  if (!violations.empty())
    throw ValidationError("invalid subnet " + config.id() + ": " + join(violations, "; "));
}

// ConvNeXt-v2 block at width d: 7x7 depthwise conv (+bias), norm,
// pointwise d->4d (+bias), GRN over the hidden width, pointwise 4d->d
// (+bias).
std::int64_t block_params(std::int64_t d) {
  return (49 * d + d) + 2 * d + (4 * d * d + 4 * d) + 8 * d + (4 * d * d + d);
}

std::int64_t block_macs(std::int64_t d, std::int64_t spatial) {
  return spatial * spatial * (49 * d + 8 * d * d);
}

}  // namespace

std::int64_t count_params(const SearchSpace& space, const SubnetConfig& config,
                          std::optional<int> projector_dim) {
  require_valid(space, config);
  const auto& dims = config.dims;
  std::int64_t p = 0;

  // Stage 1 stem: two 3x3 convs (3 -> d1 -> d1), then one norm per stage
  // reducer; stage 2 uses a 3x3 conv, stages 3-4 use 1x1 convs.
  p += 9 * 3 * dims[0] + dims[0];
  p += 9 * static_cast<std::int64_t>(dims[0]) * dims[0] + dims[0];
  p += 2 * dims[0];
  p += 9 * static_cast<std::int64_t>(dims[0]) * dims[1] + dims[1] + 2 * dims[1];
  p += static_cast<std::int64_t>(dims[1]) * dims[2] + dims[2] + 2 * dims[2];
  p += static_cast<std::int64_t>(dims[2]) * dims[3] + dims[3] + 2 * dims[3];

  for (int s = 0; s < 4; ++s) p += config.depths[s] * block_params(dims[s]);

  if (projector_dim) p += static_cast<std::int64_t>(dims[3]) * *projector_dim + *projector_dim;
  return p;
}

std::int64_t count_flops(const SearchSpace& space, const SubnetConfig& config, int resolution,
                         std::optional<int> projector_dim) {
  require_valid(space, config);
  if (resolution <= 0 || resolution % 32 != 0)
    throw ValidationError("resolution must be a positive multiple of 32, got " +
                          std::to_string(resolution));
  const auto& dims = config.dims;
  const std::int64_t r = resolution;
  auto sq = [](std::int64_t v) { return v * v; };

  std::int64_t f = 0;
  f += sq(r / 2) * dims[0] * (9 * 3);                // stem conv 1
  f += sq(r / 4) * dims[0] * (9 * dims[0]);          // stem conv 2
  f += sq(r / 8) * dims[1] * (9 * dims[0]);          // reducer 2 (3x3)
  f += sq(r / 16) * dims[2] * (1 * dims[1]);         // reducer 3 (1x1)
  f += sq(r / 32) * dims[3] * (1 * dims[2]);         // reducer 4 (1x1)

  const std::int64_t spatial[4] = {r / 4, r / 8, r / 16, r / 32};
  for (int s = 0; s < 4; ++s) f += config.depths[s] * block_macs(dims[s], spatial[s]);

  if (projector_dim) f += sq(r / 32) * (*projector_dim) * dims[3];
  return f;
}

CalibrationTable calibrate(std::vector<AnchorPoint> anchors) {
  if (anchors.size() < 2)
    throw ValidationError("calibration needs at least 2 anchors, got " +
                          std::to_string(anchors.size()));

  Eigen::MatrixXd a(static_cast<Eigen::Index>(anchors.size()), 2);
  Eigen::VectorXd lat(static_cast<Eigen::Index>(anchors.size()));
  Eigen::VectorXd en(static_cast<Eigen::Index>(anchors.size()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    a(i, 0) = anchors[static_cast<size_t>(i)].gflops;
    a(i, 1) = 1.0;
    lat(i) = anchors[static_cast<size_t>(i)].latency_ms;
    en(i) = anchors[static_cast<size_t>(i)].energy_mj;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 2)
    throw ValidationError("calibration anchors are degenerate (identical GFLOPs)");
  const Eigen::Vector2d lat_fit = qr.solve(lat);
  const Eigen::Vector2d en_fit = qr.solve(en);

  if (lat_fit(0) < 0.0 || en_fit(0) < 0.0)
    throw ValidationError("calibration fit has a negative slope; cost must grow with compute");

  CalibrationTable table;
  table.anchors = std::move(anchors);
  table.latency_per_gflop = lat_fit(0);
  table.latency_offset = lat_fit(1);
  table.energy_per_gflop = en_fit(0);
  table.energy_offset = en_fit(1);
  return table;
}

CostEstimate estimate(const CalibrationTable& table, const std::string& subnet_id, double flops) {
  for (const AnchorPoint& anchor : table.anchors) {
    if (anchor.subnet_id == subnet_id) return {anchor.latency_ms, anchor.energy_mj};
  }
  const double gflops = flops / 1e9;
  return {std::max(0.0, table.latency_per_gflop * gflops + table.latency_offset),
          std::max(0.0, table.energy_per_gflop * gflops + table.energy_offset)};
}

CostReport cost_report(const SearchSpace& space, const SubnetConfig& config, int resolution,
                       const CalibrationTable* calibration, std::optional<int> projector_dim) {
  CostReport report;
  report.subnet_id = config.id();
  report.resolution = resolution;
  report.params = count_params(space, config, projector_dim);
  report.flops = count_flops(space, config, resolution, projector_dim);
  if (calibration) {
    const CostEstimate e = estimate(*calibration, report.subnet_id,
                                    static_cast<double>(report.flops));
    report.latency_ms = e.latency_ms;
    report.energy_mj = e.energy_mj;
  }
  return report;
}

std::string CostReport::to_json() const {
  json j;
  j["subnet_id"] = subnet_id;
  j["params"] = params;
  j["flops"] = flops;
  j["resolution"] = resolution;
  if (latency_ms) j["latency_ms"] = *latency_ms;
  if (energy_mj) j["energy_mj"] = *energy_mj;
  return j.dump(2) + "\n";
}

std::string CostReport::csv_header() {
  return "subnet_id,resolution,params,flops,latency_ms,energy_mj";
}

std::string CostReport::to_csv_row() const {
  std::string row = subnet_id + "," + std::to_string(resolution) + "," + std::to_string(params) +
                    "," + std::to_string(flops) + ",";
  if (latency_ms) row += format_double(*latency_ms);
  row += ",";
  if (energy_mj) row += format_double(*energy_mj);
  return row;
}

CalibrationTable load_calibration_csv(const std::string& path, const SearchSpace& space,
                                      int resolution) {
  const auto lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != "subnet_id,latency_ms,energy_mj")
    throw ValidationError("calibration CSV must start with header subnet_id,latency_ms,energy_mj");
  std::vector<AnchorPoint> anchors;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cells = split(lines[i], ',');
    if (cells.size() != 3)
      throw ValidationError("calibration CSV line " + std::to_string(i + 1) + ": need 3 columns");
    AnchorPoint anchor;
    anchor.subnet_id = trim(cells[0]);
    try {
      anchor.latency_ms = std::stod(cells[1]);
      anchor.energy_mj = std::stod(cells[2]);
    } catch (const std::exception&) {
      throw ValidationError("calibration CSV line " + std::to_string(i + 1) + ": bad number");
    }
    const SubnetConfig config = parse_subnet_id(anchor.subnet_id);
    anchor.gflops =
        static_cast<double>(count_flops(space, config, resolution)) / 1e9;
    anchors.push_back(std::move(anchor));
  }
  return calibrate(std::move(anchors));
}

}  // namespace avfm
