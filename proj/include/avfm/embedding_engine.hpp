#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "avfm/errors.hpp"

namespace avfm {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Labeled matrix of embeddings, one row per label. On-disk format
// (bit-exact): magic "AVFMEMB1", LE u32 count, LE u32 dim, count*dim LE
// f32 row-major, then a UTF-8 JSON array of label strings to EOF.
struct EmbeddingBank {
  std::vector<std::string> labels;
  MatrixX<float> vectors;

  int count() const { return static_cast<int>(vectors.rows()); }
  int dim() const { return static_cast<int>(vectors.cols()); }

  // Label/row agreement, uniqueness, finiteness.
  void check() const;
};

EmbeddingBank load_bank(const std::string& path);
void save_bank(const EmbeddingBank& bank, const std::string& path);

// dot(u,v) / (|u||v|), clamped to [-1,1]. Throws on dimension mismatch or
// a zero-norm operand.
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  if (u.size() != v.size())
    throw ValidationError("cosine: dimension mismatch (" + std::to_string(u.size()) +
                          " vs " + std::to_string(v.size()) + ")");
  const double nu = u.template cast<double>().norm();
  const double nv = v.template cast<double>().norm();
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine: zero-norm vector");
  const double s = u.template cast<double>().dot(v.template cast<double>()) / (nu * nv);
  return std::clamp(s, -1.0, 1.0);
}

struct Ranking {
  std::string label;
  double similarity = 0.0;
};

// Labels sorted by cosine similarity descending, ties kept in bank order;
// at most top_k entries.
std::vector<Ranking> classify(const VectorX<float>& vision_vec, const EmbeddingBank& text_bank,
                              int top_k);

// H_p x W_p patch features, row-major patches, one row per patch.
struct PatchGrid {
  int rows = 0;
  int cols = 0;
  MatrixX<float> features;
};

struct SegmentationMap {
  int width = 0;
  int height = 0;
  std::vector<int> class_indices;  // row-major, size width*height

  int at(int x, int y) const { return class_indices[static_cast<size_t>(y) * width + x]; }
};

// Per-patch cosine argmax against the bank, then nearest-neighbor
// upsampling to out_width x out_height.
SegmentationMap segment(const PatchGrid& grid, const EmbeddingBank& text_bank,
                        int out_width, int out_height);

// Mean over classes of TP/(TP+FP+FN), skipping classes with zero union.
// gt pixels equal to num_classes are ignored entirely.
double miou(const SegmentationMap& pred, const SegmentationMap& gt, int num_classes);

double acc_at_1(const std::vector<int>& preds, const std::vector<int>& gts);

// PGM (P5) with maxval = class count; labels go to a ".json" sidecar next
// to the map.
void save_segmentation(const SegmentationMap& map, const std::vector<std::string>& labels,
                       const std::string& pgm_path);
std::pair<SegmentationMap, std::vector<std::string>> load_segmentation(const std::string& pgm_path);

}  // namespace avfm
