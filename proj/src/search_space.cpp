#include "avfm/search_space.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

#include "avfm/errors.hpp"
#include "avfm/io_util.hpp"

namespace avfm {

namespace {

using nlohmann::json;

const char* kind_name(BlockKind kind) {
  return kind == BlockKind::downsample ? "downsample" : "convnext_stage";
}

BlockKind kind_from_name(const std::string& name) {
  if (name == "downsample") return BlockKind::downsample;
  if (name == "convnext_stage") return BlockKind::convnext_stage;
  throw ValidationError("unknown block kind: " + name);
}

}  // namespace

void SearchSpace::check() const {
  if (blocks.size() != 2 * kNumStages)
    throw ValidationError("search space must have 8 blocks (4 stages of downsample + convnext)");
  int total_stride = 1;
  for (int s = 0; s < kNumStages; ++s) {
    const BlockSpec& ds = blocks[2 * s];
    const BlockSpec& cn = blocks[2 * s + 1];
    if (ds.kind != BlockKind::downsample || cn.kind != BlockKind::convnext_stage)
      throw ValidationError("stage " + std::to_string(s + 1) +
                            " must be a downsample block followed by a convnext stage");
    for (const BlockSpec* b : {&ds, &cn}) {
      if (!(0 < b->dim_min && b->dim_min <= b->dim_max))
        throw ValidationError(b->name + ": need 0 < dim_min <= dim_max");
      if (!(0 < b->depth_min && b->depth_min <= b->depth_max))
        throw ValidationError(b->name + ": need 0 < depth_min <= depth_max");
      if (b->stride != 1 && b->stride != 2 && b->stride != 4)
        throw ValidationError(b->name + ": stride must be 1, 2 or 4");
    }
    if (ds.depth_min != 1 || ds.depth_max != 1)
      throw ValidationError(ds.name + ": downsample blocks have fixed depth 1");
    total_stride *= ds.stride * cn.stride;
  }
  if (total_stride != 32)
    throw ValidationError("total stride must be 32, got " + std::to_string(total_stride));
  if (width_step <= 0 || depth_step <= 0)
    throw ValidationError("width_step and depth_step must be positive");
  if (input_resolution <= 0) throw ValidationError("input_resolution must be positive");
}

std::string SubnetConfig::id() const {
  std::string out = "d";
  for (int i = 0; i < 4; ++i) {
    if (i) out += '-';
    out += std::to_string(depths[i]);
  }
  out += "_c";
  for (int i = 0; i < 4; ++i) {
    if (i) out += '-';
    out += std::to_string(dims[i]);
  }
  return out;
}

SubnetConfig parse_subnet_id(const std::string& id) {
  const auto underscore = id.find("_c");
  if (id.size() < 2 || id[0] != 'd' || underscore == std::string::npos)
    throw ValidationError("malformed subnet id: " + id);
  auto parse4 = [&](const std::string& csv) {
    std::array<int, 4> vals{};
    std::vector<std::string> parts = split(csv, '-');
    if (parts.size() != 4) throw ValidationError("malformed subnet id: " + id);
    for (int i = 0; i < 4; ++i) {
      try {
        vals[i] = std::stoi(parts[i]);
      } catch (const std::exception&) {
        throw ValidationError("malformed subnet id: " + id);
      }
    }
    return vals;
  };
  SubnetConfig config;
  config.depths = parse4(id.substr(1, underscore - 1));
  config.dims = parse4(id.substr(underscore + 2));
  return config;
}

SearchSpace default_space() {
  SearchSpace space;
  space.input_resolution = 224;
  space.width_step = 24;
  space.depth_step = 6;
  auto ds = [](const char* name, int lo, int hi, int stride) {
    return BlockSpec{name, BlockKind::downsample, lo, hi, 1, 1, stride};
  };
  auto cn = [](const char* name, int lo, int hi, int dmin, int dmax) {
    return BlockSpec{name, BlockKind::convnext_stage, lo, hi, dmin, dmax, 1};
  };
  space.blocks = {
      ds("downsample-1", 48, 96, 4),   cn("convnext-block-1", 48, 96, 3, 3),
      ds("downsample-2", 96, 192, 2),  cn("convnext-block-2", 96, 192, 3, 3),
      ds("downsample-3", 192, 384, 2), cn("convnext-block-3", 192, 384, 9, 27),
      ds("downsample-4", 384, 768, 2), cn("convnext-block-4", 384, 768, 3, 3),
  };
  space.check();
  return space;
}

std::vector<int> axis_values(int lo, int hi, int step) {
  std::vector<int> values;
  for (int v = lo; v <= hi; v += step) values.push_back(v);
  if (values.back() != hi) values.push_back(hi);
  return values;
}

std::vector<std::string> validate(const SearchSpace& space, const SubnetConfig& config) {
  std::vector<std::string> violations;
  for (int s = 0; s < SearchSpace::kNumStages; ++s) {
    const BlockSpec& cn = space.stage(s);
    const std::string stage = "stage-" + std::to_string(s + 1);
    const int dim = config.dims[s];
    const int depth = config.depths[s];
    if (dim < cn.dim_min)
      violations.push_back(stage + " width " + std::to_string(dim) + " below " +
                           std::to_string(cn.dim_min));
    else if (dim > cn.dim_max)
      violations.push_back(stage + " width above " + std::to_string(cn.dim_max));
    else {
      const auto values = axis_values(cn.dim_min, cn.dim_max, space.width_step);
      if (!std::binary_search(values.begin(), values.end(), dim))
        violations.push_back(stage + " width not aligned to step " +
                             std::to_string(space.width_step));
    }
    if (depth < cn.depth_min)
      violations.push_back(stage + " depth " + std::to_string(depth) + " below " +
                           std::to_string(cn.depth_min));
    else if (depth > cn.depth_max)
      violations.push_back(stage + " depth above " + std::to_string(cn.depth_max));
    else {
      const auto values = axis_values(cn.depth_min, cn.depth_max, space.depth_step);
      if (!std::binary_search(values.begin(), values.end(), depth))
        violations.push_back(stage + " depth not aligned to step " +
                             std::to_string(space.depth_step));
    }
  }
  return violations;
}

std::uint64_t enumeration_count(const SearchSpace& space) {
  std::uint64_t count = 1;
  for (int s = 0; s < SearchSpace::kNumStages; ++s) {
    const BlockSpec& cn = space.stage(s);
    count *= axis_values(cn.dim_min, cn.dim_max, space.width_step).size();
    count *= axis_values(cn.depth_min, cn.depth_max, space.depth_step).size();
  }
  return count;
}

std::vector<SubnetConfig> enumerate_space(const SearchSpace& space, std::uint64_t cap) {
  space.check();
  const std::uint64_t count = enumeration_count(space);
  if (count > cap)
    throw ValidationError("enumeration would produce " + std::to_string(count) +
                          " subnets, above the cap of " + std::to_string(cap));

  std::array<std::vector<int>, 4> dim_axis, depth_axis;
  for (int s = 0; s < 4; ++s) {
    const BlockSpec& cn = space.stage(s);
    dim_axis[s] = axis_values(cn.dim_min, cn.dim_max, space.width_step);
    depth_axis[s] = axis_values(cn.depth_min, cn.depth_max, space.depth_step);
  }

  // Nesting order yields lexicographic (dims, depths) directly.
  std::vector<SubnetConfig> out;
  out.reserve(count);
  SubnetConfig c;
  for (int c0 : dim_axis[0])
    for (int c1 : dim_axis[1])
      for (int c2 : dim_axis[2])
        for (int c3 : dim_axis[3])
          for (int d0 : depth_axis[0])
            for (int d1 : depth_axis[1])
              for (int d2 : depth_axis[2])
                for (int d3 : depth_axis[3]) {
                  c.dims = {c0, c1, c2, c3};
                  c.depths = {d0, d1, d2, d3};
                  out.push_back(c);
                }
  return out;
}

SubnetConfig min_config(const SearchSpace& space) {
  SubnetConfig c;
  for (int s = 0; s < 4; ++s) {
    c.dims[s] = space.stage(s).dim_min;
    c.depths[s] = space.stage(s).depth_min;
  }
  return c;
}

SubnetConfig max_config(const SearchSpace& space) {
  SubnetConfig c;
  for (int s = 0; s < 4; ++s) {
    c.dims[s] = space.stage(s).dim_max;
    c.depths[s] = space.stage(s).depth_max;
  }
  return c;
}

std::array<NamedSubnet, 5> representative_subnets() {
  return {{
      {"Min", {{3, 3, 9, 3}, {48, 96, 192, 384}}},
      {"Tiny", {{3, 3, 9, 3}, {72, 144, 288, 576}}},
      {"Small", {{3, 3, 9, 3}, {96, 192, 384, 768}}},
      {"Base", {{3, 3, 15, 3}, {96, 192, 384, 768}}},
      {"Large", {{3, 3, 27, 3}, {96, 192, 384, 768}}},
  }};
}

SubnetConfig proportional_config(const SearchSpace& space, double width_multiplier,
                                 const std::array<int, 4>& depths) {
  if (width_multiplier < 0.5 || width_multiplier > 1.0)
    throw ValidationError("width multiplier must lie in [0.5, 1.0]");
  SubnetConfig c;
  c.depths = depths;
  for (int s = 0; s < 4; ++s) {
    const BlockSpec& cn = space.stage(s);
    const double target = width_multiplier * cn.dim_max;
    int snapped = static_cast<int>(std::lround(target / space.width_step)) * space.width_step;
    snapped = std::clamp(snapped, cn.dim_min, cn.dim_max);
    c.dims[s] = snapped;
  }
  const auto violations = validate(space, c);
  if (!violations.empty())
    throw ValidationError("proportional config invalid: " + violations.front());
  return c;
}

std::string space_to_json(const SearchSpace& space) {
  json j;
  j["input_resolution"] = space.input_resolution;
  j["width_step"] = space.width_step;
  j["depth_step"] = space.depth_step;
  j["blocks"] = json::array();
  for (const BlockSpec& b : space.blocks) {
    j["blocks"].push_back({{"name", b.name},
                           {"kind", kind_name(b.kind)},
                           {"dim_min", b.dim_min},
                           {"dim_max", b.dim_max},
                           {"depth_min", b.depth_min},
                           {"depth_max", b.depth_max},
                           {"stride", b.stride}});
  }
  return j.dump(2) + "\n";
}

SearchSpace space_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("search-space JSON: ") + e.what());
  }
  SearchSpace space;
  try {
    space.input_resolution = j.value("input_resolution", 224);
    space.width_step = j.value("width_step", 24);
    space.depth_step = j.value("depth_step", 6);
    for (const auto& jb : j.at("blocks")) {
      BlockSpec b;
      b.name = jb.at("name").get<std::string>();
      b.kind = kind_from_name(jb.at("kind").get<std::string>());
      b.dim_min = jb.at("dim_min").get<int>();
      b.dim_max = jb.at("dim_max").get<int>();
      b.depth_min = jb.at("depth_min").get<int>();
      b.depth_max = jb.at("depth_max").get<int>();
      b.stride = jb.at("stride").get<int>();
      space.blocks.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("search-space JSON: ") + e.what());
  }
  space.check();
  return space;
}

SearchSpace load_space(const std::string& path) { return space_from_json(read_file(path)); }
void save_space(const SearchSpace& space, const std::string& path) {
  write_file(path, space_to_json(space));
}

std::string subnet_to_json(const SubnetConfig& config) {
  json j;
  j["depths"] = config.depths;
  j["dims"] = config.dims;
  return j.dump(2) + "\n";
}

SubnetConfig subnet_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    SubnetConfig c;
    const auto depths = j.at("depths");
    const auto dims = j.at("dims");
    if (depths.size() != 4 || dims.size() != 4)
      throw ValidationError("subnet JSON needs 4 depths and 4 dims");
    for (int i = 0; i < 4; ++i) {
      c.depths[i] = depths[i].get<int>();
      c.dims[i] = dims[i].get<int>();
    }
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("subnet JSON: ") + e.what());
  }
}

SubnetConfig load_subnet(const std::string& path) { return subnet_from_json(read_file(path)); }
void save_subnet(const SubnetConfig& config, const std::string& path) {
  write_file(path, subnet_to_json(config));
}

}  // namespace avfm
