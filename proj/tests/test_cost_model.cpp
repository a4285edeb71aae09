#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "avfm/cost_model.hpp"
#include "avfm/errors.hpp"
#include "avfm/rng.hpp"
#include "avfm/search_space.hpp"

using namespace avfm;

// ---------------------------------------------------------------------------
// Counting oracle: enumerates every tensor shape of the backbone explicitly
// and counts from the shapes, independent of the closed-form implementation.
// ---------------------------------------------------------------------------
namespace oracle {

struct Layer {
  enum Kind { conv, dwconv, norm, grn } kind;
  int k = 0;        // kernel size
  int cin = 0;
  int cout = 0;
  int spatial = 0;  // output spatial side
};

std::vector<Layer> layers_of(const SubnetConfig& c, int r) {
  std::vector<Layer> layers;
  auto block = [&](int d, int s) {
    layers.push_back({Layer::dwconv, 7, d, d, s});
    layers.push_back({Layer::norm, 0, 0, d, s});
    layers.push_back({Layer::conv, 1, d, 4 * d, s});
    layers.push_back({Layer::grn, 0, 0, 4 * d, s});
    layers.push_back({Layer::conv, 1, 4 * d, d, s});
  };
  const auto& dims = c.dims;
  layers.push_back({Layer::conv, 3, 3, dims[0], r / 2});
  layers.push_back({Layer::conv, 3, dims[0], dims[0], r / 4});
  layers.push_back({Layer::norm, 0, 0, dims[0], r / 4});
  for (int i = 0; i < c.depths[0]; ++i) block(dims[0], r / 4);
  layers.push_back({Layer::conv, 3, dims[0], dims[1], r / 8});
  layers.push_back({Layer::norm, 0, 0, dims[1], r / 8});
  for (int i = 0; i < c.depths[1]; ++i) block(dims[1], r / 8);
  layers.push_back({Layer::conv, 1, dims[1], dims[2], r / 16});
  layers.push_back({Layer::norm, 0, 0, dims[2], r / 16});
  for (int i = 0; i < c.depths[2]; ++i) block(dims[2], r / 16);
  layers.push_back({Layer::conv, 1, dims[2], dims[3], r / 32});
  layers.push_back({Layer::norm, 0, 0, dims[3], r / 32});
  for (int i = 0; i < c.depths[3]; ++i) block(dims[3], r / 32);
  return layers;
}

std::int64_t params(const SubnetConfig& c) {
  std::int64_t p = 0;
  for (const Layer& l : layers_of(c, 224)) {
    switch (l.kind) {
      case Layer::conv: p += std::int64_t{l.k} * l.k * l.cin * l.cout + l.cout; break;
      case Layer::dwconv: p += std::int64_t{l.k} * l.k * l.cout + l.cout; break;
      case Layer::norm:
      case Layer::grn: p += 2 * std::int64_t{l.cout}; break;
    }
  }
  return p;
}

std::int64_t macs(const SubnetConfig& c, int r) {
  std::int64_t f = 0;
  for (const Layer& l : layers_of(c, r)) {
    const std::int64_t area = std::int64_t{l.spatial} * l.spatial;
    switch (l.kind) {
      case Layer::conv: f += area * l.cout * (std::int64_t{l.k} * l.k * l.cin); break;
      case Layer::dwconv: f += area * l.cout * (std::int64_t{l.k} * l.k); break;
      default: break;  // elementwise excluded
    }
  }
  return f;
}

}  // namespace oracle

namespace {

struct Golden {
  const char* name;
  SubnetConfig config;
  std::int64_t params;
  std::int64_t flops224;
  double paper_params;
  double paper_gflops;
  double latency_ms;
  double energy_mj;
};

// Frozen from the shape-enumeration oracle before the implementation was
// written.
const Golden kGoldens[] = {
    {"Min", {{3, 3, 9, 3}, {48, 96, 192, 384}}, 6842784, 1214027136, 6.2e6, 1.29, 25, 1.2},
    {"Tiny", {{3, 3, 9, 3}, {72, 144, 288, 576}}, 15232176, 2679953472, 16.1e6, 2.86, 52, 2.4},
    {"Small", {{3, 3, 9, 3}, {96, 192, 384, 768}}, 26933568, 4718488320, 28.7e6, 5.05, 89, 4.1},
    {"Base", {{3, 3, 15, 3}, {96, 192, 384, 768}}, 34161216, 6127881984, 35.9e6, 6.46, 120, 5.5},
    {"Large", {{3, 3, 27, 3}, {96, 192, 384, 768}}, 48616512, 8946669312, 50.3e6, 9.28, 182, 8.4},
};

std::vector<AnchorPoint> table_anchors(const SearchSpace& space) {
  std::vector<AnchorPoint> anchors;
  for (const Golden& g : kGoldens) {
    anchors.push_back({g.config.id(),
                       static_cast<double>(count_flops(space, g.config, 224)) / 1e9, g.latency_ms,
                       g.energy_mj});
  }
  return anchors;
}

}  // namespace

TEST_CASE("frozen goldens: implementation, oracle and paper all agree") {
  const SearchSpace space = default_space();
  for (const Golden& g : kGoldens) {
    CAPTURE(g.name);
    const std::int64_t p = count_params(space, g.config);
    const std::int64_t f = count_flops(space, g.config, 224);
    CHECK(p == g.params);
    CHECK(f == g.flops224);
    CHECK(p == oracle::params(g.config));
    CHECK(f == oracle::macs(g.config, 224));
    // Published values are matched within +-15%.
    CHECK(std::abs(p - g.paper_params) / g.paper_params < 0.15);
    CHECK(std::abs(f / 1e9 - g.paper_gflops) / g.paper_gflops < 0.15);
  }
}

TEST_CASE("oracle equivalence on random configs") {
  const SearchSpace space = default_space();
  const auto subnets = enumerate_space(space);
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const SubnetConfig& c = subnets[rng.uniform_u64(subnets.size())];
    CAPTURE(c.id());
    CHECK(count_params(space, c) == oracle::params(c));
    CHECK(count_flops(space, c, 224) == oracle::macs(c, 224));
    CHECK(count_flops(space, c, 448) == oracle::macs(c, 448));
  }
}

TEST_CASE("flops scale exactly with spatial area; params do not move") {
  const SearchSpace space = default_space();
  for (const Golden& g : kGoldens) {
    CHECK(count_flops(space, g.config, 448) == 4 * count_flops(space, g.config, 224));
    CHECK(count_flops(space, g.config, 672) == 9 * count_flops(space, g.config, 224));
  }
}

TEST_CASE("monotonicity: growing any depth or width never shrinks cost") {
  const SearchSpace space = default_space();
  const auto subnets = enumerate_space(space);
  Rng rng(23);
  int tested = 0;
  while (tested < 60) {
    const SubnetConfig& c = subnets[rng.uniform_u64(subnets.size())];
    SubnetConfig grown = c;
    const int axis = static_cast<int>(rng.uniform_u64(8));
    const int stage = axis / 2;
    if (axis % 2 == 0) {
      grown.dims[stage] += space.width_step;
    } else {
      grown.depths[stage] += space.depth_step;
    }
    if (!validate(space, grown).empty()) continue;
    ++tested;
    CHECK(count_params(space, grown) >= count_params(space, c));
    CHECK(count_flops(space, grown, 224) >= count_flops(space, c, 224));
  }
}

TEST_CASE("projector is excluded by default and counted when configured") {
  const SearchSpace space = default_space();
  const SubnetConfig min = kGoldens[0].config;
  const std::int64_t base = count_params(space, min);
  const std::int64_t with = count_params(space, min, 256);
  CHECK(with - base == 384 * 256 + 256);
  CHECK(count_flops(space, min, 224, 256) > count_flops(space, min, 224));
}

TEST_CASE("invalid inputs are rejected") {
  const SearchSpace space = default_space();
  CHECK_THROWS_AS(count_params(space, {{3, 3, 9, 3}, {48, 96, 192, 1024}}), ValidationError);
  CHECK_THROWS_AS(count_flops(space, kGoldens[0].config, 200), ValidationError);
  CHECK_THROWS_AS(count_flops(space, kGoldens[0].config, 0), ValidationError);
}

TEST_CASE("calibration: anchors evaluate exactly to their measured values") {
  const SearchSpace space = default_space();
  const CalibrationTable table = calibrate(table_anchors(space));
  for (const Golden& g : kGoldens) {
    const CostEstimate e =
        estimate(table, g.config.id(), static_cast<double>(count_flops(space, g.config, 224)));
    CHECK(e.latency_ms == g.latency_ms);
    CHECK(e.energy_mj == g.energy_mj);
  }
}

TEST_CASE("calibration: least-squares fit matches the closed-form normal equations") {
  const SearchSpace space = default_space();
  const std::vector<AnchorPoint> anchors = table_anchors(space);
  const CalibrationTable table = calibrate(anchors);

  // Closed-form 2x2 normal equations, computed here as the second route.
  double sg = 0, sgg = 0, sl = 0, sgl = 0, se = 0, sge = 0;
  const double n = static_cast<double>(anchors.size());
  for (const AnchorPoint& a : anchors) {
    sg += a.gflops;
    sgg += a.gflops * a.gflops;
    sl += a.latency_ms;
    sgl += a.gflops * a.latency_ms;
    se += a.energy_mj;
    sge += a.gflops * a.energy_mj;
  }
  const double det = n * sgg - sg * sg;
  const double slope_lat = (n * sgl - sg * sl) / det;
  const double icept_lat = (sgg * sl - sg * sgl) / det;
  const double slope_en = (n * sge - sg * se) / det;
  const double icept_en = (sgg * se - sg * sge) / det;

  CHECK(table.latency_per_gflop == doctest::Approx(slope_lat).epsilon(1e-9));
  CHECK(table.latency_offset == doctest::Approx(icept_lat).epsilon(1e-9));
  CHECK(table.energy_per_gflop == doctest::Approx(slope_en).epsilon(1e-9));
  CHECK(table.energy_offset == doctest::Approx(icept_en).epsilon(1e-9));

  // Frozen fit over the published anchors.
  CHECK(table.latency_per_gflop == doctest::Approx(20.281233991669946).epsilon(1e-9));
  CHECK(table.latency_offset == doctest::Approx(-2.480399945672427).epsilon(1e-9));

  // A non-anchor 7.0-GFLOP config evaluates on the fitted line.
  const CostEstimate e = estimate(table, "d3-3-21-3_c96-192-384-768", 7.0e9);
  CHECK(e.latency_ms == doctest::Approx(139.4882379960172).epsilon(1e-9));
  CHECK(e.energy_mj == doctest::Approx(6.424457924408544).epsilon(1e-9));
}

TEST_CASE("two-anchor fit is exact interpolation") {
  const CalibrationTable table =
      calibrate({{"a", 1.0, 10.0, 1.0}, {"b", 2.0, 20.0, 2.0}});
  const CostEstimate e = estimate(table, "other", 3.0e9);
  CHECK(e.latency_ms == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(e.energy_mj == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("calibration rejects bad anchor sets") {
  CHECK_THROWS_AS(calibrate({{"a", 1.0, 10.0, 1.0}}), ValidationError);
  CHECK_THROWS_AS(calibrate({{"a", 1.0, 10.0, 1.0}, {"b", 1.0, 20.0, 2.0}}), ValidationError);
  // Latency falling with compute: negative slope.
  CHECK_THROWS_AS(calibrate({{"a", 1.0, 20.0, 2.0}, {"b", 2.0, 10.0, 1.0}}), ValidationError);
}

TEST_CASE("estimates never go negative") {
  const CalibrationTable table =
      calibrate({{"a", 1.0, 1.0, 0.1}, {"b", 10.0, 100.0, 10.0}});
  // Extrapolating below the anchors would dip under zero; it is clamped.
  const CostEstimate e = estimate(table, "tiny", 0.0);
  CHECK(e.latency_ms >= 0.0);
  CHECK(e.energy_mj >= 0.0);
}

TEST_CASE("bundled calibration CSV reproduces the anchor table") {
  const SearchSpace space = default_space();
  const CalibrationTable table =
      load_calibration_csv(std::string(AVFM_DATA_DIR) + "/calibration/tab3.csv", space);
  REQUIRE(table.anchors.size() == 5);
  const CostEstimate min = estimate(table, "d3-3-9-3_c48-96-192-384", 0.0);
  CHECK(min.latency_ms == 25.0);
  CHECK(min.energy_mj == 1.2);
}

TEST_CASE("cost report serialization") {
  const SearchSpace space = default_space();
  const CalibrationTable table = calibrate(table_anchors(space));
  const CostReport report = cost_report(space, kGoldens[0].config, 224, &table);
  CHECK(report.params == kGoldens[0].params);
  REQUIRE(report.latency_ms.has_value());
  CHECK(*report.latency_ms == 25.0);
  CHECK(report.to_json().find("\"latency_ms\": 25.0") != std::string::npos);
  CHECK(report.to_csv_row() ==
        "d3-3-9-3_c48-96-192-384,224,6842784,1214027136,25,1.2");

  const CostReport bare = cost_report(space, kGoldens[0].config, 224);
  CHECK(!bare.latency_ms.has_value());
  CHECK(bare.to_csv_row() == "d3-3-9-3_c48-96-192-384,224,6842784,1214027136,,");
}
