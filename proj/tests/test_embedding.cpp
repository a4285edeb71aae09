#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "avfm/embedding_engine.hpp"
#include "avfm/io_util.hpp"
#include "avfm/rng.hpp"

using namespace avfm;

namespace {

// Plain-loop cosine, independent of the Eigen path.
double cosine_oracle(const std::vector<double>& u, const std::vector<double>& v) {
  double dot = 0, nu = 0, nv = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

EmbeddingBank random_bank(int count, int dim, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingBank bank;
  bank.vectors.resize(count, dim);
  for (int i = 0; i < count; ++i) {
    bank.labels.push_back("label_" + std::to_string(i));
    double norm = 0.0;
    for (int j = 0; j < dim; ++j) {
      bank.vectors(i, j) = static_cast<float>(rng.normal());
      norm += bank.vectors(i, j) * bank.vectors(i, j);
    }
    for (int j = 0; j < dim; ++j) bank.vectors(i, j) /= static_cast<float>(std::sqrt(norm));
  }
  return bank;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("cosine basics") {
  VectorX<float> e(3);
  e << 0.3f, -1.2f, 4.0f;
  CHECK(cosine(e, e) == doctest::Approx(1.0).epsilon(1e-12));

  VectorX<float> x(2), y(2);
  x << 1, 0;
  y << 0, 1;
  CHECK(cosine(x, y) == 0.0);

  VectorX<double> u(3), v(3);
  u << 1, 2, 3;
  v << 4, 5, 6;
  CHECK(cosine(u, v) == doctest::Approx(0.9746318461970762).epsilon(1e-12));
  CHECK(cosine(u, v) == doctest::Approx(32.0 / std::sqrt(14.0 * 77.0)).epsilon(1e-12));

  VectorX<float> zero = VectorX<float>::Zero(3);
  CHECK_THROWS_AS(cosine(zero, e), ValidationError);
  CHECK_THROWS_AS(cosine(x, e), ValidationError);
}

TEST_CASE("cosine clamps rounding overshoot into [-1, 1]") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    VectorX<double> u(8);
    for (int j = 0; j < 8; ++j) u(j) = rng.normal();
    const double s = cosine(u, (3.7 * u).eval());
    CHECK(s <= 1.0);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("classify ranks the query's own row first") {
  EmbeddingBank bank = random_bank(6, 16, 42);
  const VectorX<float> query = bank.vectors.row(3).transpose();
  const auto ranked = classify(query, bank, 3);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].label == "label_3");
  CHECK(ranked[0].similarity == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("classify is invariant under positive scaling of the query") {
  EmbeddingBank bank = random_bank(8, 12, 7);
  Rng rng(8);
  VectorX<float> query(12);
  for (int j = 0; j < 12; ++j) query(j) = static_cast<float>(rng.normal());
  const auto a = classify(query, bank, 8);
  const auto b = classify((10.0f * query).eval(), bank, 8);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].similarity == doctest::Approx(b[i].similarity).epsilon(1e-5));
  }
}

TEST_CASE("classify equals the brute-force oracle on seeded fixtures") {
  EmbeddingBank bank = random_bank(5, 10, 99);
  Rng rng(100);
  VectorX<float> query(10);
  for (int j = 0; j < 10; ++j) query(j) = static_cast<float>(rng.normal());

  std::vector<std::pair<double, int>> sims;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> u(10), v(10);
    for (int j = 0; j < 10; ++j) {
      u[static_cast<size_t>(j)] = query(j);
      v[static_cast<size_t>(j)] = bank.vectors(i, j);
    }
    sims.emplace_back(cosine_oracle(u, v), i);
  }
  std::stable_sort(sims.begin(), sims.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  const auto ranked = classify(query, bank, 5);
  REQUIRE(ranked.size() == 5);
  for (size_t i = 0; i < 5; ++i) {
    CHECK(ranked[i].label == bank.labels[static_cast<size_t>(sims[i].second)]);
    CHECK(ranked[i].similarity == doctest::Approx(sims[i].first).epsilon(1e-6));
  }
}

TEST_CASE("classify tie-break keeps bank order") {
  EmbeddingBank bank;
  bank.labels = {"first", "second", "third"};
  bank.vectors.resize(3, 2);
  bank.vectors << 1, 0, 1, 0, 0, 1;  // rows 0 and 1 identical
  VectorX<float> query(2);
  query << 1, 0;
  const auto ranked = classify(query, bank, 3);
  CHECK(ranked[0].label == "first");
  CHECK(ranked[1].label == "second");
  CHECK_THROWS_AS(classify(query, EmbeddingBank{}, 1), ValidationError);
}

TEST_CASE("restricting the bank to a subset containing the argmax keeps the top-1") {
  EmbeddingBank bank = random_bank(10, 8, 13);
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    VectorX<float> query(8);
    for (int j = 0; j < 8; ++j) query(j) = static_cast<float>(rng.normal());
    const auto full = classify(query, bank, 1);

    EmbeddingBank subset;
    for (int i = 0; i < bank.count(); ++i) {
      const bool is_top = bank.labels[static_cast<size_t>(i)] == full[0].label;
      if (is_top || rng.uniform01() < 0.4) {
        subset.labels.push_back(bank.labels[static_cast<size_t>(i)]);
        subset.vectors.conservativeResize(subset.vectors.rows() + 1, 8);
        subset.vectors.row(subset.vectors.rows() - 1) = bank.vectors.row(i);
      }
    }
    const auto restricted = classify(query, subset, 1);
    CHECK(restricted[0].label == full[0].label);
  }
}

TEST_CASE("segment: single patch paints the whole map") {
  EmbeddingBank bank = random_bank(4, 6, 3);
  PatchGrid grid;
  grid.rows = grid.cols = 1;
  grid.features = bank.vectors.row(2);
  const SegmentationMap map = segment(grid, bank, 8, 8);
  for (int v : map.class_indices) CHECK(v == 2);
}

TEST_CASE("segment: 2x2 grid of bank rows gives a 4-quadrant map") {
  EmbeddingBank bank = random_bank(4, 6, 21);
  PatchGrid grid;
  grid.rows = grid.cols = 2;
  grid.features.resize(4, 6);
  for (int i = 0; i < 4; ++i) grid.features.row(i) = bank.vectors.row(i);
  const SegmentationMap map = segment(grid, bank, 4, 4);
  CHECK(map.at(0, 0) == 0);
  CHECK(map.at(3, 0) == 1);
  CHECK(map.at(0, 3) == 2);
  CHECK(map.at(3, 3) == 3);
}

TEST_CASE("segment equals brute-force per-patch argmax on a seeded 3x3 grid") {
  EmbeddingBank bank = random_bank(4, 8, 77);
  Rng rng(78);
  PatchGrid grid;
  grid.rows = grid.cols = 3;
  grid.features.resize(9, 8);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 8; ++j) grid.features(i, j) = static_cast<float>(rng.normal());

  const SegmentationMap map = segment(grid, bank, 3, 3);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      std::vector<double> patch(8);
      for (int j = 0; j < 8; ++j) patch[static_cast<size_t>(j)] = grid.features(r * 3 + c, j);
      int best = 0;
      double best_sim = -2;
      for (int i = 0; i < 4; ++i) {
        std::vector<double> row(8);
        for (int j = 0; j < 8; ++j) row[static_cast<size_t>(j)] = bank.vectors(i, j);
        const double s = cosine_oracle(patch, row);
        if (s > best_sim) {
          best_sim = s;
          best = i;
        }
      }
      CHECK(map.at(c, r) == best);
    }
  }
}

TEST_CASE("segment rejects a zero patch and names its coordinates") {
  EmbeddingBank bank = random_bank(3, 4, 1);
  PatchGrid grid;
  grid.rows = 2;
  grid.cols = 2;
  grid.features = MatrixX<float>::Zero(4, 4);
  grid.features.row(0).setOnes();
  grid.features.row(1).setOnes();
  grid.features.row(3).setOnes();
  try {
    segment(grid, bank, 2, 2);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("(1,0)") != std::string::npos);
  }
}

TEST_CASE("segment is invariant under positive rescaling of any bank row") {
  EmbeddingBank bank = random_bank(5, 8, 31);
  Rng rng(32);
  PatchGrid grid;
  grid.rows = grid.cols = 3;
  grid.features.resize(9, 8);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 8; ++j) grid.features(i, j) = static_cast<float>(rng.normal());
  const SegmentationMap before = segment(grid, bank, 6, 6);
  bank.vectors.row(2) *= 25.0f;
  const SegmentationMap after = segment(grid, bank, 6, 6);
  CHECK(before.class_indices == after.class_indices);
}

TEST_CASE("miou hand-checked 2x2 fixture") {
  SegmentationMap gt{2, 2, {0, 0, 1, 1}};
  SegmentationMap pred{2, 2, {0, 1, 1, 1}};
  // class 0: TP 1, FP 0, FN 1 -> 1/2; class 1: TP 2, FP 1, FN 0 -> 2/3
  CHECK(miou(pred, gt, 2) == doctest::Approx(7.0 / 12.0).epsilon(1e-12));
  CHECK(miou(pred, pred, 2) == 1.0);
}

TEST_CASE("miou excludes zero-union classes and the ignore index") {
  SegmentationMap gt{2, 2, {0, 0, 1, 1}};
  SegmentationMap pred{2, 2, {0, 1, 1, 1}};
  // Class 2 never appears: the mean is unchanged.
  CHECK(miou(pred, gt, 3) == doctest::Approx(7.0 / 12.0).epsilon(1e-12));

  // gt ignore sentinel (= num_classes) drops that pixel entirely.
  SegmentationMap gt_ignore{2, 2, {0, 2, 1, 1}};
  // remaining: (0,0),(1,1),(1,1) -> class0 1/1, class1 2/2
  CHECK(miou(pred, gt_ignore, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("miou is symmetric under pred/gt swap") {
  Rng rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    SegmentationMap a{8, 8, {}}, b{8, 8, {}};
    for (int i = 0; i < 64; ++i) {
      a.class_indices.push_back(static_cast<int>(rng.uniform_u64(4)));
      b.class_indices.push_back(static_cast<int>(rng.uniform_u64(4)));
    }
    CHECK(miou(a, b, 4) == doctest::Approx(miou(b, a, 4)).epsilon(1e-12));
  }
}

TEST_CASE("miou matches a brute-force confusion counter on random 8x8 maps") {
  Rng rng(66);
  for (int trial = 0; trial < 25; ++trial) {
    const int num_classes = 5;
    SegmentationMap pred{8, 8, {}}, gt{8, 8, {}};
    for (int i = 0; i < 64; ++i) {
      pred.class_indices.push_back(static_cast<int>(rng.uniform_u64(num_classes)));
      gt.class_indices.push_back(static_cast<int>(rng.uniform_u64(num_classes + 1)));  // + ignore
    }

    // Brute force: full confusion matrix, then per-class IoU.
    std::vector<std::vector<int>> confusion(num_classes, std::vector<int>(num_classes, 0));
    for (int i = 0; i < 64; ++i) {
      if (gt.class_indices[static_cast<size_t>(i)] == num_classes) continue;
      confusion[static_cast<size_t>(gt.class_indices[static_cast<size_t>(i)])]
                [static_cast<size_t>(pred.class_indices[static_cast<size_t>(i)])]++;
    }
    double sum = 0;
    int counted = 0;
    for (int c = 0; c < num_classes; ++c) {
      int tp = confusion[static_cast<size_t>(c)][static_cast<size_t>(c)];
      int row = 0, col = 0;
      for (int k = 0; k < num_classes; ++k) {
        row += confusion[static_cast<size_t>(c)][static_cast<size_t>(k)];
        col += confusion[static_cast<size_t>(k)][static_cast<size_t>(c)];
      }
      const int uni = row + col - tp;
      if (uni == 0) continue;
      sum += static_cast<double>(tp) / uni;
      ++counted;
    }
    CHECK(miou(pred, gt, num_classes) == doctest::Approx(sum / counted).epsilon(1e-12));
  }
}

TEST_CASE("miou input validation") {
  SegmentationMap a{2, 2, {0, 0, 1, 1}};
  SegmentationMap b{2, 1, {0, 0}};
  CHECK_THROWS_AS(miou(a, b, 2), ValidationError);
  SegmentationMap bad{2, 2, {0, 0, 5, 1}};
  CHECK_THROWS_AS(miou(bad, a, 2), ValidationError);  // pred index out of range
}

TEST_CASE("acc@1") {
  CHECK(acc_at_1({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(acc_at_1({1, 2, 3, 4}, {1, 0, 3, 0}) == 0.5);
  CHECK_THROWS_AS(acc_at_1({1}, {1, 2}), ValidationError);
  CHECK_THROWS_AS(acc_at_1({}, {}), ValidationError);
}

TEST_CASE("bank file round trip is bit-exact") {
  const EmbeddingBank bank = random_bank(7, 5, 123);
  const std::string path = temp_path("avfm_test_bank.bin");
  save_bank(bank, path);
  const EmbeddingBank loaded = load_bank(path);
  CHECK(loaded.labels == bank.labels);
  CHECK(loaded.vectors == bank.vectors);  // float-exact

  const std::string path2 = temp_path("avfm_test_bank2.bin");
  save_bank(loaded, path2);
  CHECK(read_file(path) == read_file(path2));  // byte-identical container

  // Header spot check: magic + LE count/dim.
  const std::string raw = read_file(path);
  CHECK(raw.substr(0, 8) == "AVFMEMB1");
  CHECK(static_cast<unsigned char>(raw[8]) == 7);
  CHECK(static_cast<unsigned char>(raw[12]) == 5);

  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("bank loader rejects corrupt containers") {
  const std::string path = temp_path("avfm_bad_bank.bin");
  write_file(path, "NOTABANKxxxxxxxxxxxx");
  CHECK_THROWS_AS(load_bank(path), IoError);
  write_file(path, std::string("AVFMEMB1") + std::string(8, '\x01'));
  CHECK_THROWS_AS(load_bank(path), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("bank invariants: duplicate labels and non-finite entries") {
  EmbeddingBank bank = random_bank(2, 3, 9);
  bank.labels[1] = bank.labels[0];
  CHECK_THROWS_AS(bank.check(), ValidationError);

  EmbeddingBank nan_bank = random_bank(2, 3, 10);
  nan_bank.vectors(0, 0) = std::nanf("");
  CHECK_THROWS_AS(nan_bank.check(), ValidationError);
}

TEST_CASE("segmentation PGM round trip, both pixel widths") {
  for (const int classes : {4, 300}) {
    SegmentationMap map{3, 2, {0, 1, 2, 3, 0, 1}};
    std::vector<std::string> labels;
    for (int i = 0; i < classes; ++i) labels.push_back("c" + std::to_string(i));
    const std::string path = temp_path("avfm_map_" + std::to_string(classes) + ".pgm");
    save_segmentation(map, labels, path);
    const auto [loaded, loaded_labels] = load_segmentation(path);
    CHECK(loaded.width == 3);
    CHECK(loaded.height == 2);
    CHECK(loaded.class_indices == map.class_indices);
    CHECK(loaded_labels.size() == labels.size());
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".json");
  }
}
