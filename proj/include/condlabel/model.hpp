#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "condlabel/matrix.hpp"

namespace condlabel {

/// Encoder shape. The final affine layer emits k*d values that are read as
/// the k x d transform (row-major).
struct ModelConfig {
  std::size_t feature_dim = 16;
  std::vector<std::size_t> hidden_dims{64, 64};
  std::size_t k = 8;
  std::size_t d = 20;
  double init_scale = 1.0;

  std::size_t output_size() const noexcept { return k * d; }
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// weight is out x in; bias has `out` entries.
struct DenseLayer {
  Matrix weight;
  Vector bias;

  bool operator==(const DenseLayer&) const = default;
};

/// Per-layer tensors, also used for gradients and optimizer moments.
using LayerStack = std::vector<DenseLayer>;

struct ModelParams {
  ModelConfig config;
  LayerStack layers;  // hidden layers first, transform head last

  bool operator==(const ModelParams&) const = default;
};

/// Zero tensors shaped like the layers of `config`.
LayerStack zero_layers(const ModelConfig& config);

/// Weights uniform in +-init_scale/sqrt(fan_in), zero biases. Deterministic
/// given seed.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// The per-input k x d matrix that maps d-dim label vectors to k dims.
class TransformMatrix {
 public:
  TransformMatrix() = default;
  TransformMatrix(std::size_t k, std::size_t d) : entries_(k, d) {}
  explicit TransformMatrix(Matrix entries) : entries_(std::move(entries)) {}

  std::size_t k() const noexcept { return entries_.rows; }
  std::size_t d() const noexcept { return entries_.cols; }
  std::span<const double> row(std::size_t r) const { return entries_.row(r); }
  const Matrix& entries() const noexcept { return entries_; }
  Matrix& entries() noexcept { return entries_; }

  bool operator==(const TransformMatrix&) const = default;

 private:
  Matrix entries_;
};

/// Hidden layers apply affine + ReLU; the head is affine only.
TransformMatrix forward_transform(const ModelParams& params, std::span<const double> features);

/// Intermediate values kept for backpropagation. inputs[l] is the input
/// of layer l; pre_activations[l] its affine output.
struct ForwardTrace {
  std::vector<Vector> inputs;
  std::vector<Vector> pre_activations;
  TransformMatrix transform;
};
ForwardTrace forward_with_trace(const ModelParams& params, std::span<const double> features);

/// w' = A w.
Vector transform_label(const TransformMatrix& a, std::span<const double> w);

/// ||A w||_2^2 accumulated as the sum over rows of (a_r . w)^2.
double squared_label_distance(const TransformMatrix& a, std::span<const double> w);

/// ||A w||_2, the distance of the transformed label from the origin.
double label_distance(const TransformMatrix& a, std::span<const double> w);

/// Binary checkpoint: magic, version, full config, then named tensors
/// (name, shape, little-endian float64 payload). Byte-exact round trip.
std::string serialize_checkpoint(const ModelParams& params);
ModelParams deserialize_checkpoint(std::string_view bytes, const std::string& source = "<memory>");
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace condlabel
