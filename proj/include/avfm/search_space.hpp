#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace avfm {

enum class BlockKind { downsample, convnext_stage };

struct BlockSpec {
  std::string name;
  BlockKind kind = BlockKind::convnext_stage;
  int dim_min = 0;
  int dim_max = 0;
  int depth_min = 0;
  int depth_max = 0;
  int stride = 1;
};

// Four stages, each a downsample block followed by a convnext stage
// (8 blocks total). Width/depth axes are quantized by width_step /
// depth_step; axis endpoints are always representable.
struct SearchSpace {
  std::vector<BlockSpec> blocks;
  int input_resolution = 224;
  int width_step = 24;
  int depth_step = 6;

  static constexpr int kNumStages = 4;

  const BlockSpec& downsample(int stage) const { return blocks.at(2 * stage); }
  const BlockSpec& stage(int stage) const { return blocks.at(2 * stage + 1); }

  // Throws ValidationError if the block structure breaks the invariants
  // (8 alternating blocks, total stride 32, sane bounds).
  void check() const;
};

struct SubnetConfig {
  std::array<int, 4> depths{};
  std::array<int, 4> dims{};

  // Canonical cross-module key: "d3-3-9-3_c48-96-192-384".
  std::string id() const;

  friend bool operator==(const SubnetConfig&, const SubnetConfig&) = default;
};

struct NamedSubnet {
  std::string name;
  SubnetConfig config;
};

SearchSpace default_space();

// Quantized axis values for one [lo, hi] range: lo, lo+step, ... with hi
// appended even when the step does not land on it.
std::vector<int> axis_values(int lo, int hi, int step);

// Empty list means the config is valid; otherwise one entry per violated
// bound or misaligned value.
std::vector<std::string> validate(const SearchSpace& space, const SubnetConfig& config);

// Duplicate-free, lexicographic in (dims, depths); always contains the
// minimal and maximal configs. Throws ValidationError when the count
// would exceed `cap`.
std::vector<SubnetConfig> enumerate_space(const SearchSpace& space,
                                          std::uint64_t cap = 1000000);
std::uint64_t enumeration_count(const SearchSpace& space);

SubnetConfig min_config(const SearchSpace& space);
SubnetConfig max_config(const SearchSpace& space);

// Min/Tiny/Small/Base/Large.
std::array<NamedSubnet, 5> representative_subnets();

// Width ladder scaled from the maximal dims by w in [0.5, 1.0], rounded
// to the space's width step and clamped into range.
SubnetConfig proportional_config(const SearchSpace& space, double width_multiplier,
                                 const std::array<int, 4>& depths);

SubnetConfig parse_subnet_id(const std::string& id);

// JSON file formats.
// Space:  {input_resolution, width_step, depth_step, blocks:[{name, kind,
//          dim_min, dim_max, depth_min, depth_max, stride}]}
// Subnet: {depths:[4], dims:[4]}
SearchSpace load_space(const std::string& path);
void save_space(const SearchSpace& space, const std::string& path);
std::string space_to_json(const SearchSpace& space);
SearchSpace space_from_json(const std::string& text);

SubnetConfig load_subnet(const std::string& path);
void save_subnet(const SubnetConfig& config, const std::string& path);
std::string subnet_to_json(const SubnetConfig& config);
SubnetConfig subnet_from_json(const std::string& text);

}  // namespace avfm
