#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "condlabel/dataset.hpp"
#include "condlabel/embeddings.hpp"
#include "condlabel/model.hpp"

namespace condlabel {

using VectorList = std::vector<std::span<const double>>;

struct LossConfig {
  double margin = 1.0;
  std::size_t negatives_per_instance = 40;
  double epsilon_norm = 1e-8;

  void validate() const;
};

/// Non-owning view of one training tuple: the input features plus the word
/// vectors of the positive and sampled negative labels.
struct TrainingTuple {
  std::span<const double> features;
  VectorList positives;
  VectorList negatives;
};

struct HingeLoss {
  double value = 0.0;
  std::vector<bool> active;  // one flag per negative, true iff its term is > 0
  std::size_t active_count() const;
};

/// sum_j max(0, m + mean_i ||A p_i|| - ||A n_j||).
HingeLoss hinge_rank_loss(const TransformMatrix& a, const VectorList& positives, const VectorList& negatives,
                          double margin);

/// Subgradient of hinge_rank_loss with respect to A, using
/// d||Av||/dA = (Av) v^T / max(||Av||, epsilon_norm).
Matrix loss_gradient_wrt_A(const TransformMatrix& a, const VectorList& positives, const VectorList& negatives,
                           double margin, double epsilon_norm);

struct BackpropResult {
  double loss = 0.0;
  std::size_t active_negatives = 0;
  LayerStack gradients;  // shaped like params.layers
};

BackpropResult backprop(const ModelParams& params, const TrainingTuple& tuple, const LossConfig& config);

/// Loss of a tuple at params, no gradient.
double tuple_loss(const ModelParams& params, const TrainingTuple& tuple, const LossConfig& config);

/// (loss(theta + h e_i) - loss(theta - h e_i)) / 2h for one scalar parameter.
double central_difference(const ModelParams& params, const TrainingTuple& tuple, const LossConfig& config,
                          std::size_t layer, bool bias, std::size_t index, double step);

struct FiniteDiffReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose +-step probe crosses a hinge or ReLU kink
};

/// Relative error |analytic - numeric| / max(|analytic|, |numeric|, kRelativeErrorFloor).
inline constexpr double kRelativeErrorFloor = 1e-6;

/// Compares backprop against central differences over every scalar
/// parameter. Coordinates where the probe changes the set of active hinge
/// terms or any ReLU on/off state are non-differentiable there and skipped.
FiniteDiffReport finite_diff_check(const ModelParams& params, const TrainingTuple& tuple, const LossConfig& config,
                                   double step);

/// Worst-case result of finite_diff_check over random small models.
struct GradCheckSummary {
  std::size_t trials = 0;
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Each trial draws a random config (1-4 rows, 2-5 dims, 0-2 hidden layers),
/// random parameters with non-zero biases, a random input, 1-3 positive and
/// 1-5 negative label vectors, and a margin that activates some hinge terms.
GradCheckSummary run_grad_check(std::size_t trials, double step, std::uint64_t seed);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double decay = 1.0;  // per-epoch multiplicative learning-rate factor; 1 = off

  void validate() const;
};

struct AdamState {
  AdamConfig config;
  LayerStack first_moment;
  LayerStack second_moment;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ModelParams& params, const AdamConfig& config);
};

/// Bias-corrected Adam update of one tensor; `step` is the 1-based step.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::uint64_t step, double learning_rate, const AdamConfig& config);

/// Increments state.step and updates every tensor at `learning_rate`.
void adam_step(AdamState& state, ModelParams& params, const LayerStack& gradients, double learning_rate);
inline void adam_step(AdamState& state, ModelParams& params, const LayerStack& gradients) {
  adam_step(state, params, gradients, state.config.learning_rate);
}

/// Everything that determines a training run.
struct TrainSettings {
  ModelConfig model;
  LossConfig loss;
  AdamConfig adam;
  std::size_t epochs = 50;
  std::uint64_t seed = 1;

  static TrainSettings full_scale();
};

/// Applies "key = value" lines (margin, negatives, lr, beta1, beta2, eps,
/// epochs, seed, k, hidden_dims, decay, init_scale). Returns the keys set.
std::vector<std::string> apply_train_config(std::string_view text, TrainSettings& settings,
                                            const std::string& source = "<memory>");

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double violation_rate = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t skipped_instances = 0;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// Per-instance Adam training in a seeded shuffled order, with fresh
/// negatives at every visit. settings.model.feature_dim and .d must match the
/// dataset and table.
TrainResult train(const Dataset& dataset, const LabelEmbeddingTable& table, const TrainSettings& settings);

/// CSV "epoch,mean_loss,violation_rate,seconds" preceded by '#' lines that
/// echo the settings.
void write_train_report_csv(const TrainReport& report, const TrainSettings& settings, std::ostream& out);

}  // namespace condlabel
