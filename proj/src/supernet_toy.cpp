#include "avfm/supernet_toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "avfm/embedding_engine.hpp"
#include "avfm/errors.hpp"
#include "avfm/io_util.hpp"
#include "avfm/rng.hpp"

namespace avfm {

namespace {

struct ViewDims {
  std::array<int, 5> width{};  // width[0] = input_dim, width[l] = dims[l-1]
};

ViewDims view_dims(const SharedParameterStore& store, const SubnetConfig& config) {
  ViewDims v;
  v.width[0] = store.input_dim();
  for (int s = 0; s < 4; ++s) {
    if (config.dims[s] <= 0 || config.dims[s] > store.max_dims()[s])
      throw ValidationError("config width " + std::to_string(config.dims[s]) +
                            " outside shared tensor for stage " + std::to_string(s + 1));
    v.width[static_cast<size_t>(s) + 1] = config.dims[s];
  }
  return v;
}

struct ForwardTrace {
  std::array<Eigen::MatrixXd, 5> h;  // h[0] = input, h[l] = relu(z[l])
  std::array<Eigen::MatrixXd, 4> z;
  Eigen::MatrixXd output;
};

ForwardTrace forward_trace(const SharedParameterStore& store, const SubnetConfig& config,
                           const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != store.input_dim())
    throw ValidationError("forward: input has " + std::to_string(inputs.rows()) +
                          " rows, store expects " + std::to_string(store.input_dim()));
  const ViewDims v = view_dims(store, config);
  ForwardTrace t;
  t.h[0] = inputs;
  for (int l = 0; l < 4; ++l) {
    const auto w = store.layers[static_cast<size_t>(l)].weight.topLeftCorner(v.width[l + 1],
                                                                             v.width[l]);
    const auto b = store.layers[static_cast<size_t>(l)].bias.head(v.width[l + 1]);
    t.z[static_cast<size_t>(l)] = (w * t.h[static_cast<size_t>(l)]).colwise() + b;
    t.h[static_cast<size_t>(l) + 1] = t.z[static_cast<size_t>(l)].cwiseMax(0.0);
  }
  const auto p = store.projector.weight.leftCols(v.width[4]);
  t.output = (p * t.h[4]).colwise() + store.projector.bias;
  return t;
}

// Flat layout: layer weights/biases in order, then the projector, each
// tensor in Eigen's native (column-major) order.
struct FlatSlot {
  std::int64_t offset = 0;
  std::int64_t size = 0;
};

std::vector<FlatSlot> flat_slots(const SharedParameterStore& store) {
  std::vector<FlatSlot> slots;
  std::int64_t offset = 0;
  auto add = [&](std::int64_t size) {
    slots.push_back({offset, size});
    offset += size;
  };
  for (const auto& layer : store.layers) {
    add(layer.weight.size());
    add(layer.bias.size());
  }
  add(store.projector.weight.size());
  add(store.projector.bias.size());
  return slots;
}

}  // namespace

SharedParameterStore::SharedParameterStore(const SearchSpace& space, int input_dim, int output_dim,
                                           std::uint64_t seed)
    : input_dim_(input_dim), output_dim_(output_dim) {
  if (input_dim <= 0 || output_dim <= 0)
    throw ValidationError("store dimensions must be positive");
  space.check();
  for (int s = 0; s < 4; ++s) max_dims_[static_cast<size_t>(s)] = space.stage(s).dim_max;

  Rng rng(seed);
  auto init = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    const double scale = std::sqrt(2.0 / static_cast<double>(cols));
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = scale * rng.normal();
    return m;
  };

  int fan_in = input_dim_;
  for (int s = 0; s < 4; ++s) {
    Layer layer;
    layer.weight = init(max_dims_[static_cast<size_t>(s)], fan_in);
    layer.bias = Eigen::VectorXd::Zero(max_dims_[static_cast<size_t>(s)]);
    layers.push_back(std::move(layer));
    fan_in = max_dims_[static_cast<size_t>(s)];
  }
  projector.weight = init(output_dim_, max_dims_[3]);
  projector.bias = Eigen::VectorXd::Zero(output_dim_);
}

std::int64_t SharedParameterStore::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n + projector.weight.size() + projector.bias.size();
}

Eigen::VectorXd SharedParameterStore::flatten() const {
  Eigen::VectorXd flat(scalar_count());
  std::int64_t offset = 0;
  auto put = [&](const Eigen::MatrixXd& m) {
    flat.segment(offset, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    offset += m.size();
  };
  for (const auto& layer : layers) {
    put(layer.weight);
    put(layer.bias);
  }
  put(projector.weight);
  put(projector.bias);
  return flat;
}

void SharedParameterStore::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != scalar_count())
    throw ValidationError("unflatten: size mismatch");
  std::int64_t offset = 0;
  auto take = [&](Eigen::MatrixXd& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = flat.segment(offset, m.size());
    offset += m.size();
  };
  auto take_vec = [&](Eigen::VectorXd& v) {
    v = flat.segment(offset, v.size());
    offset += v.size();
  };
  for (auto& layer : layers) {
    take(layer.weight);
    take_vec(layer.bias);
  }
  take(projector.weight);
  take_vec(projector.bias);
}

std::uint64_t SharedParameterStore::digest() const {
  std::uint64_t hash = 1469598103934665603ull;  // FNV-1a
  auto mix = [&](const double* data, std::int64_t count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::int64_t i = 0; i < count * static_cast<std::int64_t>(sizeof(double)); ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ull;
    }
  };
  for (const auto& layer : layers) {
    mix(layer.weight.data(), layer.weight.size());
    mix(layer.bias.data(), layer.bias.size());
  }
  mix(projector.weight.data(), projector.weight.size());
  mix(projector.bias.data(), projector.bias.size());
  return hash;
}

SampleBatchPlan sandwich_sample(const SearchSpace& space, std::uint64_t seed, int n_random) {
  if (n_random < 0) throw ValidationError("n_random must be nonnegative");
  const std::vector<SubnetConfig> all = enumerate_space(space);
  const SubnetConfig lo = min_config(space);
  const SubnetConfig hi = max_config(space);

  SampleBatchPlan plan;
  plan.configs.push_back(lo);
  plan.configs.push_back(hi);

  // Random entries come from the intermediate configs only, so minimal
  // and maximal stay unique in the plan.
  std::vector<SubnetConfig> intermediates;
  intermediates.reserve(all.size());
  for (const SubnetConfig& c : all) {
    if (!(c == lo) && !(c == hi)) intermediates.push_back(c);
  }
  Rng rng(seed);
  for (int i = 0; i < n_random; ++i) {
    if (intermediates.empty()) break;
    plan.configs.push_back(intermediates[rng.uniform_u64(intermediates.size())]);
  }
  return plan;
}

Eigen::MatrixXd forward(const SharedParameterStore& store, const SubnetConfig& config,
                        const Eigen::MatrixXd& inputs) {
  return forward_trace(store, config, inputs).output;
}

double distill_loss(const SharedParameterStore& store, const SubnetConfig& config,
                    const Eigen::MatrixXd& batch, const TeacherFn& teacher) {
  const Eigen::MatrixXd target = teacher(batch);
  const Eigen::MatrixXd output = forward(store, config, batch);
  if (target.rows() != output.rows() || target.cols() != output.cols())
    throw ValidationError("teacher output shape does not match the projected student output");
  return (output - target).squaredNorm() / static_cast<double>(batch.cols());
}

Eigen::VectorXd distill_grad(const SharedParameterStore& store, const SubnetConfig& config,
                             const Eigen::MatrixXd& batch, const TeacherFn& teacher) {
  const ViewDims v = view_dims(store, config);
  const ForwardTrace t = forward_trace(store, config, batch);
  const Eigen::MatrixXd target = teacher(batch);
  if (target.rows() != t.output.rows() || target.cols() != t.output.cols())
    throw ValidationError("teacher output shape does not match the projected student output");
  const double n = static_cast<double>(batch.cols());

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(store.scalar_count());
  const std::vector<FlatSlot> slots = flat_slots(store);
  auto weight_block = [&](size_t tensor, Eigen::Index rows_full, Eigen::Index rows,
                          Eigen::Index cols) {
    return Eigen::Map<Eigen::MatrixXd>(grad.data() + slots[tensor].offset, rows_full,
                                       slots[tensor].size / rows_full)
        .topLeftCorner(rows, cols);
  };

  const Eigen::MatrixXd d_out = (2.0 / n) * (t.output - target);

  // Projector (slot 8), then layers 3..0 (slots 2l / 2l+1).
  weight_block(8, store.output_dim(), store.output_dim(), v.width[4]) += d_out * t.h[4].transpose();
  Eigen::Map<Eigen::VectorXd>(grad.data() + slots[9].offset, slots[9].size) +=
      d_out.rowwise().sum();

  Eigen::MatrixXd delta =
      (store.projector.weight.leftCols(v.width[4]).transpose() * d_out).eval();
  for (int l = 3; l >= 0; --l) {
    delta = (delta.array() * (t.z[static_cast<size_t>(l)].array() > 0.0).cast<double>()).matrix();
    const Eigen::Index rows_full = store.layers[static_cast<size_t>(l)].weight.rows();
    weight_block(static_cast<size_t>(2 * l), rows_full, v.width[l + 1], v.width[l]) +=
        delta * t.h[static_cast<size_t>(l)].transpose();
    Eigen::Map<Eigen::VectorXd>(grad.data() + slots[static_cast<size_t>(2 * l + 1)].offset,
                                slots[static_cast<size_t>(2 * l + 1)].size)
        .head(v.width[l + 1]) += delta.rowwise().sum();
    if (l > 0) {
      delta = (store.layers[static_cast<size_t>(l)]
                   .weight.topLeftCorner(v.width[l + 1], v.width[l])
                   .transpose() *
               delta)
                  .eval();
    }
  }
  return grad;
}

DistillStepResult step_distill(SharedParameterStore& store, const TeacherFn& teacher,
                               const Eigen::MatrixXd& batch, const SampleBatchPlan& plan,
                               double learning_rate) {
  if (plan.configs.empty()) throw ValidationError("empty sample plan");
  DistillStepResult result;
  Eigen::VectorXd grad_sum = Eigen::VectorXd::Zero(store.scalar_count());
  for (const SubnetConfig& config : plan.configs) {
    result.losses.push_back(distill_loss(store, config, batch, teacher));
    grad_sum += distill_grad(store, config, batch, teacher);
  }
  grad_sum /= static_cast<double>(plan.configs.size());
  store.unflatten(store.flatten() - learning_rate * grad_sum);
  return result;
}

AlignHead AlignHead::identity(int dim) {
  return {Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)};
}

namespace {

struct InfoNceTrace {
  double loss = 0.0;
  Eigen::MatrixXd d_v;  // gradient w.r.t. the raw vision columns
};

InfoNceTrace infonce_trace(const Eigen::MatrixXd& v_raw, const Eigen::MatrixXd& t_raw,
                           double temperature, bool want_grad) {
  if (temperature <= 0.0) throw ValidationError("temperature must be positive");
  if (v_raw.rows() != t_raw.rows() || v_raw.cols() != t_raw.cols())
    throw ValidationError("InfoNCE: vision/text shape mismatch");
  const Eigen::Index n = v_raw.cols();
  if (n == 0) throw ValidationError("InfoNCE: empty batch");

  Eigen::MatrixXd v_hat(v_raw.rows(), n), t_hat(t_raw.rows(), n);
  Eigen::VectorXd v_norm(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    v_norm(j) = v_raw.col(j).norm();
    const double tn = t_raw.col(j).norm();
    if (v_norm(j) == 0.0 || tn == 0.0)
      throw ValidationError("InfoNCE: zero-norm embedding in column " + std::to_string(j));
    v_hat.col(j) = v_raw.col(j) / v_norm(j);
    t_hat.col(j) = t_raw.col(j) / tn;
  }

  const Eigen::MatrixXd sim = (v_hat.transpose() * t_hat) / temperature;  // rows: vision

  auto lse = [](const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
  };

  InfoNceTrace trace;
  for (Eigen::Index j = 0; j < n; ++j) {
    trace.loss += -sim(j, j) + lse(sim.row(j).transpose());
    trace.loss += -sim(j, j) + lse(sim.col(j));
  }
  trace.loss /= 2.0 * static_cast<double>(n);

  if (want_grad) {
    Eigen::MatrixXd row_soft(n, n), col_soft(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::VectorXd r = sim.row(j).transpose();
      row_soft.row(j) = ((r.array() - lse(r)).exp()).matrix().transpose();
      const Eigen::VectorXd c = sim.col(j);
      col_soft.col(j) = ((c.array() - lse(c)).exp()).matrix();
    }
    const Eigen::MatrixXd d_sim =
        (row_soft + col_soft - 2.0 * Eigen::MatrixXd::Identity(n, n)) /
        (2.0 * static_cast<double>(n));
    const Eigen::MatrixXd d_v_hat = (t_hat * d_sim.transpose()) / temperature;
    trace.d_v.resize(v_raw.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double inner = v_hat.col(j).dot(d_v_hat.col(j));
      trace.d_v.col(j) = (d_v_hat.col(j) - v_hat.col(j) * inner) / v_norm(j);
    }
  }
  return trace;
}

}  // namespace

double infonce_loss(const Eigen::MatrixXd& vision_feats, const Eigen::MatrixXd& text_embs,
                    double temperature) {
  return infonce_trace(vision_feats, text_embs, temperature, false).loss;
}

AlignGradient align_loss_and_grad(const SharedParameterStore& store, const SubnetConfig& config,
                                  const AlignHead& head, const Eigen::MatrixXd& vision_batch,
                                  const Eigen::MatrixXd& text_embs, double temperature) {
  const Eigen::MatrixXd features = forward(store, config, vision_batch);
  const Eigen::MatrixXd v = (head.weight * features).colwise() + head.bias;
  const InfoNceTrace trace = infonce_trace(v, text_embs, temperature, true);

  AlignGradient grad;
  grad.loss = trace.loss;
  grad.d_weight = trace.d_v * features.transpose();
  grad.d_bias = trace.d_v.rowwise().sum();
  return grad;
}

double step_align(const SharedParameterStore& frozen_store, const SubnetConfig& config,
                  AlignHead& head, const Eigen::MatrixXd& vision_batch,
                  const Eigen::MatrixXd& text_embs, double temperature, double learning_rate) {
  const AlignGradient grad =
      align_loss_and_grad(frozen_store, config, head, vision_batch, text_embs, temperature);
  head.weight -= learning_rate * grad.d_weight;
  head.bias -= learning_rate * grad.d_bias;
  return grad.loss;
}

namespace {

GradCheckResult compare_grads(const Eigen::VectorXd& analytic,
                              const std::function<double(std::int64_t, double)>& loss_at,
                              double epsilon) {
  GradCheckResult result;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double plus = loss_at(i, epsilon);
    const double minus = loss_at(i, -epsilon);
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double a = analytic(i);
    result.max_analytic_abs = std::max(result.max_analytic_abs, std::abs(a));
    result.max_numeric_abs = std::max(result.max_numeric_abs, std::abs(numeric));
    const double scale = std::max(std::abs(a), std::abs(numeric));
    if (scale >= 1e-10)
      result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / scale);
  }
  return result;
}

}  // namespace

GradCheckResult grad_check_distill(const SharedParameterStore& store, const SubnetConfig& config,
                                   const Eigen::MatrixXd& batch, const TeacherFn& teacher,
                                   double epsilon) {
  const Eigen::VectorXd analytic = distill_grad(store, config, batch, teacher);
  const Eigen::VectorXd theta = store.flatten();
  SharedParameterStore probe = store;
  return compare_grads(
      analytic,
      [&](std::int64_t i, double delta) {
        Eigen::VectorXd shifted = theta;
        shifted(i) += delta;
        probe.unflatten(shifted);
        return distill_loss(probe, config, batch, teacher);
      },
      epsilon);
}

GradCheckResult grad_check_align(const SharedParameterStore& store, const SubnetConfig& config,
                                 const AlignHead& head, const Eigen::MatrixXd& vision_batch,
                                 const Eigen::MatrixXd& text_embs, double temperature,
                                 double epsilon) {
  const AlignGradient grad =
      align_loss_and_grad(store, config, head, vision_batch, text_embs, temperature);
  Eigen::VectorXd analytic(grad.d_weight.size() + grad.d_bias.size());
  analytic << Eigen::Map<const Eigen::VectorXd>(grad.d_weight.data(), grad.d_weight.size()),
      grad.d_bias;

  const Eigen::MatrixXd features = forward(store, config, vision_batch);
  return compare_grads(
      analytic,
      [&](std::int64_t i, double delta) {
        AlignHead probe = head;
        if (i < probe.weight.size())
          probe.weight.data()[i] += delta;
        else
          probe.bias(i - probe.weight.size()) += delta;
        const Eigen::MatrixXd v = (probe.weight * features).colwise() + probe.bias;
        return infonce_loss(v, text_embs, temperature);
      },
      epsilon);
}

void save_store(const SharedParameterStore& store, const std::string& path) {
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> tensors;
  std::vector<Eigen::MatrixXd> bias_as_matrix;
  bias_as_matrix.reserve(store.layers.size() + 1);
  for (size_t l = 0; l < store.layers.size(); ++l) {
    tensors.emplace_back("layer" + std::to_string(l) + ".weight", &store.layers[l].weight);
    bias_as_matrix.push_back(store.layers[l].bias);
    tensors.emplace_back("layer" + std::to_string(l) + ".bias", &bias_as_matrix.back());
  }
  tensors.emplace_back("projector.weight", &store.projector.weight);
  bias_as_matrix.push_back(store.projector.bias);
  tensors.emplace_back("projector.bias", &bias_as_matrix.back());

  Eigen::Index max_len = 0;
  for (const auto& [_, m] : tensors) max_len = std::max(max_len, m->size());

  // One record per tensor, flattened row-major and zero-padded; the label
  // carries the shape for exact restoration.
  EmbeddingBank bank;
  bank.vectors = MatrixX<float>::Zero(static_cast<Eigen::Index>(tensors.size()), max_len);
  for (size_t i = 0; i < tensors.size(); ++i) {
    const Eigen::MatrixXd& m = *tensors[i].second;
    bank.labels.push_back(tensors[i].first + ":" + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        bank.vectors(static_cast<Eigen::Index>(i), k++) = static_cast<float>(m(r, c));
  }
  save_bank(bank, path);
}

void load_store(SharedParameterStore& store, const std::string& path) {
  const EmbeddingBank bank = load_bank(path);
  auto restore = [&](const std::string& name, Eigen::MatrixXd& target) {
    for (size_t i = 0; i < bank.labels.size(); ++i) {
      const std::string& label = bank.labels[i];
      if (label.rfind(name + ":", 0) != 0) continue;
      const std::string shape = label.substr(name.size() + 1);
      const size_t x = shape.find('x');
      const Eigen::Index rows = std::stoll(shape.substr(0, x));
      const Eigen::Index cols = std::stoll(shape.substr(x + 1));
      if (rows != target.rows() || cols != target.cols())
        throw ValidationError("checkpoint tensor " + name + " has shape " + shape +
                              ", store expects " + std::to_string(target.rows()) + "x" +
                              std::to_string(target.cols()));
      Eigen::Index k = 0;
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
          target(r, c) = static_cast<double>(bank.vectors(static_cast<Eigen::Index>(i), k++));
      return;
    }
    throw ValidationError("checkpoint is missing tensor " + name);
  };

  for (size_t l = 0; l < store.layers.size(); ++l) {
    restore("layer" + std::to_string(l) + ".weight", store.layers[l].weight);
    Eigen::MatrixXd bias = store.layers[l].bias;
    restore("layer" + std::to_string(l) + ".bias", bias);
    store.layers[l].bias = bias.col(0);
  }
  restore("projector.weight", store.projector.weight);
  Eigen::MatrixXd bias = store.projector.bias;
  restore("projector.bias", bias);
  store.projector.bias = bias.col(0);
}

SearchSpace make_toy_space() {
  SearchSpace space;
  space.input_resolution = 224;
  space.width_step = 4;
  space.depth_step = 1;
  auto ds = [](const char* name, int lo, int hi, int stride) {
    return BlockSpec{name, BlockKind::downsample, lo, hi, 1, 1, stride};
  };
  auto cn = [](const char* name, int lo, int hi) {
    return BlockSpec{name, BlockKind::convnext_stage, lo, hi, 3, 3, 1};
  };
  space.blocks = {
      ds("downsample-1", 4, 8, 4),   cn("convnext-block-1", 4, 8),
      ds("downsample-2", 8, 16, 2),  cn("convnext-block-2", 8, 16),
      ds("downsample-3", 12, 24, 2), cn("convnext-block-3", 12, 24),
      ds("downsample-4", 16, 32, 2), cn("convnext-block-4", 16, 32),
  };
  space.check();
  return space;
}

ToyTask make_toy_task(std::uint64_t seed) {
  ToyTask task;
  task.space = make_toy_space();
  constexpr int kInputDim = 6;
  constexpr int kOutputDim = 4;
  constexpr int kSamples = 64;
  Rng rng(seed);
  task.batch.resize(kInputDim, kSamples);
  for (Eigen::Index c = 0; c < task.batch.cols(); ++c)
    for (Eigen::Index r = 0; r < task.batch.rows(); ++r) task.batch(r, c) = rng.normal();
  task.teacher_w.resize(kOutputDim, kInputDim);
  for (Eigen::Index c = 0; c < task.teacher_w.cols(); ++c)
    for (Eigen::Index r = 0; r < task.teacher_w.rows(); ++r)
      task.teacher_w(r, c) = 0.5 * rng.normal();
  return task;
}

TeacherFn ToyTask::teacher() const {
  const Eigen::MatrixXd w = teacher_w;
  return [w](const Eigen::MatrixXd& x) { return w * x; };
}

ToyTrainResult train_toy(const ToyTrainConfig& config) {
  if (config.steps < 0) throw ValidationError("steps must be nonnegative");
  const ToyTask task = make_toy_task(config.seed);
  const TeacherFn teacher = task.teacher();
  SharedParameterStore store(task.space, static_cast<int>(task.batch.rows()),
                             static_cast<int>(task.teacher_w.rows()), config.seed + 1);
  const SubnetConfig lo = min_config(task.space);
  const SubnetConfig hi = max_config(task.space);

  ToyTrainResult result;
  result.initial_loss_min = distill_loss(store, lo, task.batch, teacher);
  result.initial_loss_max = distill_loss(store, hi, task.batch, teacher);
  result.trace.push_back({0, result.initial_loss_min, result.initial_loss_max,
                          0.5 * (result.initial_loss_min + result.initial_loss_max)});

  for (int step = 1; step <= config.steps; ++step) {
    const SampleBatchPlan plan = sandwich_sample(
        task.space, config.seed * 1000003ull + static_cast<std::uint64_t>(step),
        config.plan_random);
    const DistillStepResult stepped =
        step_distill(store, teacher, task.batch, plan, config.learning_rate);
    double mean = 0.0;
    for (double l : stepped.losses) mean += l;
    mean /= static_cast<double>(stepped.losses.size());
    result.trace.push_back({step, stepped.losses[0], stepped.losses[1], mean});
  }

  result.final_loss_min = distill_loss(store, lo, task.batch, teacher);
  result.final_loss_max = distill_loss(store, hi, task.batch, teacher);
  return result;
}

std::string ToyTrainResult::trace_csv() const {
  std::string out = "step,loss_min_subnet,loss_max_subnet,loss_plan_mean\n";
  for (const ToyTraceRow& row : trace) {
    out += std::to_string(row.step) + "," + format_double(row.loss_min) + "," +
           format_double(row.loss_max) + "," + format_double(row.loss_plan_mean) + "\n";
  }
  return out;
}

}  // namespace avfm
