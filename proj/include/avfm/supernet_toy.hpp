#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "avfm/search_space.hpp"

namespace avfm {

// Desk-scale weight-sharing supernet: one linear+ReLU layer per stage at
// maximal width, plus a linear projector to a fixed output dimension. A
// subnet of width w addresses the first w output rows / input columns of
// each shared tensor; views alias the shared values.
//
// Double precision throughout so finite-difference checks are meaningful.
class SharedParameterStore {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // max_out x max_in
    Eigen::VectorXd bias;    // max_out
  };

  SharedParameterStore(const SearchSpace& space, int input_dim, int output_dim,
                       std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  const std::array<int, 4>& max_dims() const { return max_dims_; }

  std::vector<Layer> layers;  // 4 stage layers
  Layer projector;            // output_dim x max_dims[3]

  // Flat scalar view (layers then projector, column-major per tensor).
  std::int64_t scalar_count() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);

  // Byte-level fingerprint of all shared tensors (freezing checks).
  std::uint64_t digest() const;

 private:
  int input_dim_ = 0;
  int output_dim_ = 0;
  std::array<int, 4> max_dims_{};
};

// One training step's subnet draw: minimal and maximal configs exactly
// once, plus n_random uniform draws from the intermediate configs.
struct SampleBatchPlan {
  std::vector<SubnetConfig> configs;
};

SampleBatchPlan sandwich_sample(const SearchSpace& space, std::uint64_t seed, int n_random = 2);

// inputs: input_dim x n (columns are samples); returns output_dim x n.
Eigen::MatrixXd forward(const SharedParameterStore& store, const SubnetConfig& config,
                        const Eigen::MatrixXd& inputs);

using TeacherFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

// Mean squared distance between student and teacher outputs,
// (1/n) * sum_j |y_j - t_j|^2.
double distill_loss(const SharedParameterStore& store, const SubnetConfig& config,
                    const Eigen::MatrixXd& batch, const TeacherFn& teacher);

// Analytic gradient in flat layout; unsliced coordinates are zero.
Eigen::VectorXd distill_grad(const SharedParameterStore& store, const SubnetConfig& config,
                             const Eigen::MatrixXd& batch, const TeacherFn& teacher);

struct DistillStepResult {
  std::vector<double> losses;  // one per plan entry
};

// Evaluates every plan entry against the shared weights, applies the
// averaged gradient once (plain gradient descent).
DistillStepResult step_distill(SharedParameterStore& store, const TeacherFn& teacher,
                               const Eigen::MatrixXd& batch, const SampleBatchPlan& plan,
                               double learning_rate);

// Maps backbone features into the text embedding space.
struct AlignHead {
  Eigen::MatrixXd weight;  // text_dim x feature_dim
  Eigen::VectorXd bias;    // text_dim

  static AlignHead identity(int dim);
};

// Symmetric InfoNCE over cosine similarities / temperature; columns of
// vision_feats and text_embs are paired.
double infonce_loss(const Eigen::MatrixXd& vision_feats, const Eigen::MatrixXd& text_embs,
                    double temperature);

struct AlignGradient {
  double loss = 0.0;
  Eigen::MatrixXd d_weight;
  Eigen::VectorXd d_bias;
};

AlignGradient align_loss_and_grad(const SharedParameterStore& store, const SubnetConfig& config,
                                  const AlignHead& head, const Eigen::MatrixXd& vision_batch,
                                  const Eigen::MatrixXd& text_embs, double temperature);

// Head-only update; the backbone is frozen and must come out byte-equal.
double step_align(const SharedParameterStore& frozen_store, const SubnetConfig& config,
                  AlignHead& head, const Eigen::MatrixXd& vision_batch,
                  const Eigen::MatrixXd& text_embs, double temperature, double learning_rate);

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_analytic_abs = 0.0;
  double max_numeric_abs = 0.0;
};

// Central finite differences over every shared scalar vs the analytic
// gradient.
GradCheckResult grad_check_distill(const SharedParameterStore& store, const SubnetConfig& config,
                                   const Eigen::MatrixXd& batch, const TeacherFn& teacher,
                                   double epsilon);
GradCheckResult grad_check_align(const SharedParameterStore& store, const SubnetConfig& config,
                                 const AlignHead& head, const Eigen::MatrixXd& vision_batch,
                                 const Eigen::MatrixXd& text_embs, double temperature,
                                 double epsilon);

// Checkpointing through the EmbeddingBank container: one record per
// tensor, flattened row-major and zero-padded to the widest tensor; the
// label carries "<name>:<rows>x<cols>".
void save_store(const SharedParameterStore& store, const std::string& path);
void load_store(SharedParameterStore& store, const std::string& path);

// Bundled toy distillation task (fixed linear teacher, 64-sample batch).
struct ToyTask {
  SearchSpace space;
  Eigen::MatrixXd batch;     // input_dim x 64
  Eigen::MatrixXd teacher_w; // output_dim x input_dim
  TeacherFn teacher() const;
};

SearchSpace make_toy_space();
ToyTask make_toy_task(std::uint64_t seed);

struct ToyTrainConfig {
  int steps = 500;
  std::uint64_t seed = 7;
  int plan_random = 2;
  double learning_rate = 0.02;
};

struct ToyTraceRow {
  int step = 0;
  double loss_min = 0.0;
  double loss_max = 0.0;
  double loss_plan_mean = 0.0;
};

struct ToyTrainResult {
  std::vector<ToyTraceRow> trace;  // step 0 holds pre-training losses
  double initial_loss_min = 0.0;
  double initial_loss_max = 0.0;
  double final_loss_min = 0.0;
  double final_loss_max = 0.0;

  std::string trace_csv() const;
};

ToyTrainResult train_toy(const ToyTrainConfig& config);

}  // namespace avfm
