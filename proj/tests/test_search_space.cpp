#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "avfm/errors.hpp"
#include "avfm/search_space.hpp"

using namespace avfm;

namespace {

SearchSpace two_choice_space() {
  // Two width choices per stage via the endpoint rule, two stage-3 depths.
  SearchSpace space = default_space();
  space.width_step = 1000;  // only endpoints representable
  space.depth_step = 18;    // stage 3: {9, 27}
  return space;
}

}  // namespace

TEST_CASE("default space matches the published search table") {
  const SearchSpace space = default_space();
  REQUIRE(space.blocks.size() == 8);
  CHECK(space.blocks[4].dim_max == 384);
  CHECK(space.blocks[5].depth_max == 27);
  CHECK(space.blocks[5].depth_min == 9);
  CHECK(space.blocks[0].stride == 4);

  int stride_product = 1;
  for (const BlockSpec& b : space.blocks) stride_product *= b.stride;
  CHECK(stride_product == 32);

  CHECK(space.stage(0).dim_min == 48);
  CHECK(space.stage(3).dim_max == 768);
  for (int s = 0; s < 4; ++s) {
    CHECK(space.downsample(s).depth_min == 1);
    CHECK(space.downsample(s).depth_max == 1);
  }
}

TEST_CASE("canonical id format and round trip") {
  const SubnetConfig min{{3, 3, 9, 3}, {48, 96, 192, 384}};
  CHECK(min.id() == "d3-3-9-3_c48-96-192-384");
  CHECK(parse_subnet_id(min.id()) == min);
  CHECK_THROWS_AS(parse_subnet_id("c48_d3"), ValidationError);
  CHECK_THROWS_AS(parse_subnet_id("d3-3-9_c48-96-192-384"), ValidationError);
}

TEST_CASE("validate accepts the table minimum and rejects bound violations") {
  const SearchSpace space = default_space();
  CHECK(validate(space, {{3, 3, 9, 3}, {48, 96, 192, 384}}).empty());

  SUBCASE("depth below range") {
    SearchSpace with_step3 = space;
    with_step3.depth_step = 3;
    const auto violations = validate(with_step3, {{3, 3, 8, 3}, {48, 96, 192, 384}});
    REQUIRE(!violations.empty());
    CHECK(violations.front().find("stage-3 depth") != std::string::npos);
  }
  SUBCASE("depth misaligned to step") {
    const auto violations = validate(space, {{3, 3, 12, 3}, {48, 96, 192, 384}});
    REQUIRE(violations.size() == 1);
    CHECK(violations.front().find("not aligned") != std::string::npos);
  }
  SUBCASE("width above range") {
    const auto violations = validate(space, {{3, 3, 9, 3}, {48, 96, 192, 1024}});
    REQUIRE(violations.size() == 1);
    CHECK(violations.front() == "stage-4 width above 768");
  }
  SUBCASE("several violations are all reported") {
    const auto violations = validate(space, {{3, 3, 5, 3}, {40, 96, 192, 1024}});
    CHECK(violations.size() == 3);
  }
}

TEST_CASE("axis values always include both endpoints") {
  CHECK(axis_values(48, 96, 24) == std::vector<int>{48, 72, 96});
  CHECK(axis_values(9, 27, 6) == std::vector<int>{9, 15, 21, 27});
  CHECK(axis_values(9, 27, 18) == std::vector<int>{9, 27});
  CHECK(axis_values(6, 12, 4) == std::vector<int>{6, 10, 12});
  CHECK(axis_values(5, 5, 3) == std::vector<int>{5});
}

TEST_CASE("enumeration of a 2-choices-per-axis space yields 2^5 subnets") {
  const auto subnets = enumerate_space(two_choice_space());
  CHECK(subnets.size() == 32);
}

TEST_CASE("enumeration is deterministic, duplicate-free and ordered") {
  const SearchSpace space = two_choice_space();
  const auto a = enumerate_space(space);
  const auto b = enumerate_space(space);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  std::set<std::string> ids;
  for (const SubnetConfig& c : a) ids.insert(c.id());
  CHECK(ids.size() == a.size());  // canonical id injective

  for (size_t i = 1; i < a.size(); ++i) {
    const auto key = [](const SubnetConfig& c) { return std::make_pair(c.dims, c.depths); };
    CHECK(key(a[i - 1]) < key(a[i]));
  }
}

TEST_CASE("enumeration contains the published Min and Large configs") {
  const auto subnets = enumerate_space(default_space());
  CHECK(subnets.size() == 3 * 5 * 9 * 17 * 4);
  const auto reps = representative_subnets();
  auto contains = [&](const SubnetConfig& c) {
    return std::find(subnets.begin(), subnets.end(), c) != subnets.end();
  };
  CHECK(contains(reps[0].config));  // Min
  CHECK(contains(reps[4].config));  // Large
}

TEST_CASE("enumeration cap") {
  CHECK_THROWS_AS(enumerate_space(default_space(), 100), ValidationError);
}

TEST_CASE("every enumerated config validates and dominates the minimum") {
  const SearchSpace space = default_space();
  const SubnetConfig lo = min_config(space);
  for (const SubnetConfig& c : enumerate_space(space)) {
    CHECK(validate(space, c).empty());
    for (int s = 0; s < 4; ++s) {
      CHECK(lo.dims[s] <= c.dims[s]);
      CHECK(lo.depths[s] <= c.depths[s]);
    }
  }
}

TEST_CASE("representative subnets match the published table") {
  const auto reps = representative_subnets();
  REQUIRE(reps.size() == 5);
  CHECK(reps[0].name == "Min");
  CHECK(reps[0].config.dims == std::array<int, 4>{48, 96, 192, 384});
  CHECK(reps[1].config.dims == std::array<int, 4>{72, 144, 288, 576});
  CHECK(reps[3].name == "Base");
  CHECK(reps[3].config.depths == std::array<int, 4>{3, 3, 15, 3});
  CHECK(reps[4].config.depths == std::array<int, 4>{3, 3, 27, 3});

  const SearchSpace space = default_space();
  for (const NamedSubnet& rep : reps) CHECK(validate(space, rep.config).empty());
}

TEST_CASE("proportional width ladders reproduce the representative dims") {
  const SearchSpace space = default_space();
  CHECK(proportional_config(space, 0.5, {3, 3, 9, 3}).dims ==
        std::array<int, 4>{48, 96, 192, 384});
  CHECK(proportional_config(space, 0.75, {3, 3, 9, 3}).dims ==
        std::array<int, 4>{72, 144, 288, 576});
  CHECK(proportional_config(space, 1.0, {3, 3, 27, 3}).dims ==
        std::array<int, 4>{96, 192, 384, 768});
  CHECK_THROWS_AS(proportional_config(space, 0.4, {3, 3, 9, 3}), ValidationError);
  CHECK_THROWS_AS(proportional_config(space, 1.2, {3, 3, 9, 3}), ValidationError);
}

TEST_CASE("space and subnet JSON round trips") {
  const SearchSpace space = default_space();
  const SearchSpace reloaded = space_from_json(space_to_json(space));
  CHECK(reloaded.width_step == space.width_step);
  CHECK(reloaded.depth_step == space.depth_step);
  REQUIRE(reloaded.blocks.size() == space.blocks.size());
  for (size_t i = 0; i < space.blocks.size(); ++i) {
    CHECK(reloaded.blocks[i].name == space.blocks[i].name);
    CHECK(reloaded.blocks[i].dim_max == space.blocks[i].dim_max);
    CHECK(reloaded.blocks[i].stride == space.blocks[i].stride);
  }

  const SubnetConfig base{{3, 3, 15, 3}, {96, 192, 384, 768}};
  CHECK(subnet_from_json(subnet_to_json(base)) == base);
  CHECK_THROWS_AS(subnet_from_json("{\"depths\": [1,2]}"), ValidationError);
  CHECK_THROWS_AS(space_from_json("not json"), ValidationError);
}

TEST_CASE("bundled space fixture equals the built-in default") {
  const SearchSpace fixture = load_space(std::string(AVFM_DATA_DIR) + "/spaces/default.json");
  const SearchSpace builtin = default_space();
  CHECK(space_to_json(fixture) == space_to_json(builtin));
}

TEST_CASE("malformed spaces are rejected") {
  SearchSpace space = default_space();
  space.blocks.pop_back();
  CHECK_THROWS_AS(space.check(), ValidationError);

  SearchSpace bad_stride = default_space();
  bad_stride.blocks[0].stride = 2;
  CHECK_THROWS_AS(bad_stride.check(), ValidationError);

  SearchSpace bad_depth = default_space();
  bad_depth.blocks[0].depth_max = 2;
  CHECK_THROWS_AS(bad_depth.check(), ValidationError);
}
