#include "condlabel/model.hpp"

#include <cmath>
#include <random>

#include "condlabel/error.hpp"
#include "condlabel/rng.hpp"

namespace condlabel {

void ModelConfig::validate() const {
  if (feature_dim < 1) throw InvalidArgument("model config: feature_dim must be positive");
  if (k < 1 || d < 1) throw InvalidArgument("model config: k and d must be positive");
  for (std::size_t h : hidden_dims) {
    if (h < 1) throw InvalidArgument("model config: hidden widths must be positive");
  }
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
    throw InvalidArgument("model config: init_scale must be finite and non-negative");
  }
}

LayerStack zero_layers(const ModelConfig& config) {
  LayerStack layers;
  std::size_t in = config.feature_dim;
  auto add = [&](std::size_t out) {
    layers.push_back({Matrix(out, in), Vector(out, 0.0)});
    in = out;
  };
  for (std::size_t h : config.hidden_dims) add(h);
  add(config.output_size());
  return layers;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams params{config, zero_layers(config)};
  Rng rng(seed);
  for (auto& layer : params.layers) {
    const double bound = config.init_scale / std::sqrt(static_cast<double>(layer.weight.cols));
    if (bound == 0.0) continue;
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : layer.weight.data) w = dist(rng);
  }
  return params;
}

namespace {

void affine(const DenseLayer& layer, std::span<const double> in, Vector& out) {
  out.resize(layer.weight.rows);
  for (std::size_t o = 0; o < layer.weight.rows; ++o) {
    auto w = layer.weight.row(o);
    double s = layer.bias[o];
    for (std::size_t i = 0; i < in.size(); ++i) s += w[i] * in[i];
    out[o] = s;
  }
}

void check_features(const ModelParams& params, std::span<const double> features) {
  if (features.size() != params.config.feature_dim) {
    throw DimensionMismatch("forward_transform: expected " + std::to_string(params.config.feature_dim) +
                            " features, got " + std::to_string(features.size()));
  }
}

}  // namespace

TransformMatrix forward_transform(const ModelParams& params, std::span<const double> features) {
  check_features(params, features);
  Vector current(features.begin(), features.end());
  Vector next;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    affine(params.layers[l], current, next);
    if (l != last) {
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    }
    std::swap(current, next);
  }
  Matrix a(params.config.k, params.config.d);
  a.data = std::move(current);
  return TransformMatrix(std::move(a));
}

ForwardTrace forward_with_trace(const ModelParams& params, std::span<const double> features) {
  check_features(params, features);
  ForwardTrace trace;
  const std::size_t n = params.layers.size();
  trace.inputs.resize(n);
  trace.pre_activations.resize(n);
  trace.inputs[0].assign(features.begin(), features.end());
  for (std::size_t l = 0; l < n; ++l) {
    affine(params.layers[l], trace.inputs[l], trace.pre_activations[l]);
    if (l + 1 < n) {
      Vector& act = trace.inputs[l + 1];
      act = trace.pre_activations[l];
      for (double& v : act) v = v > 0.0 ? v : 0.0;
    }
  }
  Matrix a(params.config.k, params.config.d);
  a.data = trace.pre_activations.back();
  trace.transform = TransformMatrix(std::move(a));
  return trace;
}

Vector transform_label(const TransformMatrix& a, std::span<const double> w) {
  if (w.size() != a.d()) {
    throw DimensionMismatch("transform_label: A has " + std::to_string(a.d()) + " columns, w has " +
                            std::to_string(w.size()) + " components");
  }
  Vector out(a.k());
  for (std::size_t r = 0; r < a.k(); ++r) out[r] = dot(a.row(r), w);
  return out;
}

double squared_label_distance(const TransformMatrix& a, std::span<const double> w) {
  if (w.size() != a.d()) {
    throw DimensionMismatch("label_distance: A has " + std::to_string(a.d()) + " columns, w has " +
                            std::to_string(w.size()) + " components");
  }
  double sq = 0.0;
  for (std::size_t r = 0; r < a.k(); ++r) {
    const double proj = dot(a.row(r), w);
    sq += proj * proj;
  }
  return sq;
}

double label_distance(const TransformMatrix& a, std::span<const double> w) {
  return std::sqrt(squared_label_distance(a, w));
}

}  // namespace condlabel
