#include "condlabel/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "condlabel/error.hpp"
#include "condlabel/rng.hpp"
#include "condlabel/text_util.hpp"

namespace condlabel {

void LossConfig::validate() const {
  if (!(margin > 0.0) || !std::isfinite(margin)) throw InvalidArgument("loss config: margin must be positive");
  if (negatives_per_instance < 1) throw InvalidArgument("loss config: negatives must be at least 1");
  if (!(epsilon_norm > 0.0 && epsilon_norm <= 1e-6)) {
    throw InvalidArgument("loss config: epsilon_norm must lie in (0, 1e-6]");
  }
}

std::size_t HingeLoss::active_count() const {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

namespace {

void check_lists(const TransformMatrix& a, const VectorList& positives, const VectorList& negatives) {
  if (positives.empty()) throw InvalidArgument("hinge_rank_loss: empty positive list");
  if (negatives.empty()) throw InvalidArgument("hinge_rank_loss: empty negative list");
  auto check = [&](const VectorList& list) {
    for (auto v : list) {
      if (v.size() != a.d()) throw DimensionMismatch("hinge_rank_loss: label vector does not match A's columns");
    }
  };
  check(positives);
  check(negatives);
}

double mean_positive_norm(const TransformMatrix& a, const VectorList& positives) {
  double sum = 0.0;
  for (auto p : positives) sum += label_distance(a, p);
  return sum / static_cast<double>(positives.size());
}

// G += scale * (A v) v^T / max(||A v||, eps)
void add_norm_gradient(const TransformMatrix& a, std::span<const double> v, double scale, double eps, Matrix& g) {
  Vector av = transform_label(a, v);
  const double denom = std::max(l2_norm(av), eps);
  for (std::size_t r = 0; r < a.k(); ++r) {
    const double coef = scale * av[r] / denom;
    auto grow = g.row(r);
    for (std::size_t c = 0; c < a.d(); ++c) grow[c] += coef * v[c];
  }
}

}  // namespace

HingeLoss hinge_rank_loss(const TransformMatrix& a, const VectorList& positives, const VectorList& negatives,
                          double margin) {
  check_lists(a, positives, negatives);
  const double pos = mean_positive_norm(a, positives);
  HingeLoss out;
  out.active.reserve(negatives.size());
  for (auto n : negatives) {
    const double term = margin + pos - label_distance(a, n);
    const bool on = term > 0.0;
    out.active.push_back(on);
    if (on) out.value += term;
  }
  return out;
}

Matrix loss_gradient_wrt_A(const TransformMatrix& a, const VectorList& positives, const VectorList& negatives,
                           double margin, double epsilon_norm) {
  HingeLoss loss = hinge_rank_loss(a, positives, negatives, margin);
  Matrix g(a.k(), a.d());
  const std::size_t n_active = loss.active_count();
  if (n_active == 0) return g;
  // Each active term contributes the mean-positive gradient once.
  const double pos_scale = static_cast<double>(n_active) / static_cast<double>(positives.size());
  for (auto p : positives) add_norm_gradient(a, p, pos_scale, epsilon_norm, g);
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    if (loss.active[j]) add_norm_gradient(a, negatives[j], -1.0, epsilon_norm, g);
  }
  return g;
}

BackpropResult backprop(const ModelParams& params, const TrainingTuple& tuple, const LossConfig& config) {
  ForwardTrace trace = forward_with_trace(params, tuple.features);
  HingeLoss loss = hinge_rank_loss(trace.transform, tuple.positives, tuple.negatives, config.margin);

  BackpropResult out;
  out.loss = loss.value;
  out.active_negatives = loss.active_count();
  out.gradients = zero_layers(params.config);
  if (out.active_negatives == 0) return out;

  Matrix grad_a = loss_gradient_wrt_A(trace.transform, tuple.positives, tuple.negatives, config.margin,
                                      config.epsilon_norm);
  // Row-major reshape makes dL/dA the gradient of the head output.
  Vector delta = std::move(grad_a.data);
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& layer = params.layers[l];
    auto& g = out.gradients[l];
    const Vector& input = trace.inputs[l];
    for (std::size_t o = 0; o < layer.weight.rows; ++o) {
      g.bias[o] = delta[o];
      auto grow = g.weight.row(o);
      for (std::size_t i = 0; i < input.size(); ++i) grow[i] = delta[o] * input[i];
    }
    if (l == 0) break;
    Vector prev(layer.weight.cols, 0.0);
    for (std::size_t o = 0; o < layer.weight.rows; ++o) {
      if (delta[o] == 0.0) continue;
      auto wrow = layer.weight.row(o);
      for (std::size_t i = 0; i < prev.size(); ++i) prev[i] += wrow[i] * delta[o];
    }
    const Vector& pre = trace.pre_activations[l - 1];
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (!(pre[i] > 0.0)) prev[i] = 0.0;
    }
    delta = std::move(prev);
  }
  return out;
}

double tuple_loss(const ModelParams& params, const TrainingTuple& tuple, const LossConfig& config) {
  return hinge_rank_loss(forward_transform(params, tuple.features), tuple.positives, tuple.negatives, config.margin)
      .value;
}

namespace {

// Active hinge flags followed by every hidden unit's ReLU state; the loss is
// smooth along a probe that keeps this signature fixed.
std::vector<bool> kink_signature(const ModelParams& params, const TrainingTuple& tuple, const LossConfig& config,
                                 double* loss_out) {
  ForwardTrace trace = forward_with_trace(params, tuple.features);
  HingeLoss loss = hinge_rank_loss(trace.transform, tuple.positives, tuple.negatives, config.margin);
  if (loss_out) *loss_out = loss.value;
  std::vector<bool> sig = std::move(loss.active);
  for (std::size_t l = 0; l + 1 < trace.pre_activations.size(); ++l) {
    for (double z : trace.pre_activations[l]) sig.push_back(z > 0.0);
  }
  return sig;
}

double& param_ref(ModelParams& params, std::size_t layer, bool bias, std::size_t index) {
  auto& l = params.layers.at(layer);
  return bias ? l.bias.at(index) : l.weight.data.at(index);
}

}  // namespace

double central_difference(const ModelParams& params, const TrainingTuple& tuple, const LossConfig& config,
                          std::size_t layer, bool bias, std::size_t index, double step) {
  ModelParams probe = params;
  double& x = param_ref(probe, layer, bias, index);
  const double orig = x;
  x = orig + step;
  const double up = tuple_loss(probe, tuple, config);
  x = orig - step;
  const double down = tuple_loss(probe, tuple, config);
  return (up - down) / (2.0 * step);
}

FiniteDiffReport finite_diff_check(const ModelParams& params, const TrainingTuple& tuple, const LossConfig& config,
                                   double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("finite_diff_check: step must be positive");
  BackpropResult analytic = backprop(params, tuple, config);
  const std::vector<bool> base = kink_signature(params, tuple, config, nullptr);

  FiniteDiffReport report;
  ModelParams probe = params;
  auto visit = [&](std::size_t layer, bool bias, std::size_t count, std::span<const double> grad) {
    for (std::size_t i = 0; i < count; ++i) {
      double& x = param_ref(probe, layer, bias, i);
      const double orig = x;
      double up = 0.0;
      double down = 0.0;
      x = orig + step;
      const bool smooth_up = kink_signature(probe, tuple, config, &up) == base;
      x = orig - step;
      const bool smooth_down = kink_signature(probe, tuple, config, &down) == base;
      x = orig;
      if (!smooth_up || !smooth_down) {
        ++report.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * step);
      const double a = grad[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), kRelativeErrorFloor});
      report.max_relative_error = std::max(report.max_relative_error, std::abs(a - numeric) / denom);
      ++report.checked;
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& g = analytic.gradients[l];
    visit(l, false, g.weight.data.size(), g.weight.data);
    visit(l, true, g.bias.size(), g.bias);
  }
  return report;
}

GradCheckSummary run_grad_check(std::size_t trials, double step, std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("run_grad_check: need at least one trial");
  GradCheckSummary summary;
  summary.trials = trials;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform_int = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  for (std::size_t t = 0; t < trials; ++t) {
    ModelConfig config;
    config.feature_dim = uniform_int(2, 6);
    config.hidden_dims.assign(uniform_int(0, 2), 0);
    for (auto& h : config.hidden_dims) h = uniform_int(2, 6);
    config.k = uniform_int(1, 4);
    config.d = uniform_int(2, 5);
    config.init_scale = 1.5;
    ModelParams params = init_params(config, rng());
    for (auto& layer : params.layers) {
      for (double& b : layer.bias) b = 0.3 * normal(rng);
    }

    Vector features(config.feature_dim);
    for (double& x : features) x = normal(rng);
    auto draw_labels = [&](std::size_t n) {
      std::vector<Vector> out(n, Vector(config.d));
      for (auto& v : out) {
        for (double& x : v) x = normal(rng);
      }
      return out;
    };
    const auto positives = draw_labels(uniform_int(1, 3));
    const auto negatives = draw_labels(uniform_int(1, 5));
    TrainingTuple tuple{features, {}, {}};
    for (const auto& p : positives) tuple.positives.emplace_back(p);
    for (const auto& n : negatives) tuple.negatives.emplace_back(n);

    // Margin placed among the negatives' slack so a mix of terms is active.
    const TransformMatrix a = forward_transform(params, features);
    double pos_mean = 0.0;
    for (auto p : tuple.positives) pos_mean += label_distance(a, p);
    pos_mean /= static_cast<double>(tuple.positives.size());
    double max_gap = 0.0;
    for (auto n : tuple.negatives) max_gap = std::max(max_gap, label_distance(a, n) - pos_mean);
    LossConfig loss;
    loss.margin = std::max(0.1, max_gap * std::uniform_real_distribution<double>(0.3, 1.2)(rng));

    FiniteDiffReport r = finite_diff_check(params, tuple, loss, step);
    summary.max_relative_error = std::max(summary.max_relative_error, r.max_relative_error);
    summary.checked += r.checked;
    summary.skipped += r.skipped;
  }
  return summary;
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("adam: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("adam: betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("adam: epsilon must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw InvalidArgument("adam: decay must lie in (0, 1]");
}

AdamState AdamState::zeros_like(const ModelParams& params, const AdamConfig& config) {
  return {config, zero_layers(params.config), zero_layers(params.config), 0};
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::uint64_t step, double learning_rate, const AdamConfig& config) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    throw DimensionMismatch("adam_update: tensor shapes disagree");
  }
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void adam_step(AdamState& state, ModelParams& params, const LayerStack& gradients, double learning_rate) {
  const std::size_t n = params.layers.size();
  if (gradients.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw DimensionMismatch("adam_step: layer count mismatch");
  }
  ++state.step;
  for (std::size_t l = 0; l < n; ++l) {
    auto& p = params.layers[l];
    const auto& g = gradients[l];
    auto& m = state.first_moment[l];
    auto& v = state.second_moment[l];
    adam_update(p.weight.data, g.weight.data, m.weight.data, v.weight.data, state.step, learning_rate, state.config);
    adam_update(p.bias, g.bias, m.bias, v.bias, state.step, learning_rate, state.config);
  }
}

TrainSettings TrainSettings::full_scale() {
  TrainSettings s;
  s.model.k = 100;
  s.model.d = 300;
  s.loss.negatives_per_instance = 40;
  s.adam.learning_rate = 1e-6;
  return s;
}

std::vector<std::string> apply_train_config(std::string_view text, TrainSettings& settings, const std::string& source) {
  std::vector<std::string> applied;
  std::size_t line_no = 0;
  for (auto raw : text::split_on(text, '\n')) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
    const std::string key(text::trim(line.substr(0, eq)));
    const auto value = text::trim(line.substr(eq + 1));

    auto real = [&]() {
      auto v = text::parse_double(value);
      if (!v || !std::isfinite(*v)) throw ParseError(source, line_no, "bad number for '" + key + "'");
      return *v;
    };
    auto count = [&]() {
      auto v = text::parse_int(value);
      if (!v || *v < 0) throw ParseError(source, line_no, "bad integer for '" + key + "'");
      return static_cast<std::size_t>(*v);
    };

    if (key == "margin") settings.loss.margin = real();
    else if (key == "negatives") settings.loss.negatives_per_instance = count();
    else if (key == "lr") settings.adam.learning_rate = real();
    else if (key == "beta1") settings.adam.beta1 = real();
    else if (key == "beta2") settings.adam.beta2 = real();
    else if (key == "eps") settings.adam.epsilon = real();
    else if (key == "decay") settings.adam.decay = real();
    else if (key == "epochs") settings.epochs = count();
    else if (key == "seed") settings.seed = count();
    else if (key == "k") settings.model.k = count();
    else if (key == "init_scale") settings.model.init_scale = real();
    else if (key == "hidden_dims") {
      std::vector<std::size_t> dims;
      std::string spaced(value);
      std::replace(spaced.begin(), spaced.end(), ',', ' ');
      for (auto tok : text::split_ws(spaced)) {
        auto v = text::parse_int(tok);
        if (!v || *v <= 0) throw ParseError(source, line_no, "bad hidden width '" + std::string(tok) + "'");
        dims.push_back(static_cast<std::size_t>(*v));
      }
      settings.model.hidden_dims = std::move(dims);
    } else {
      throw ParseError(source, line_no, "unknown key '" + key + "'");
    }
    applied.push_back(key);
  }
  return applied;
}

TrainResult train(const Dataset& dataset, const LabelEmbeddingTable& table, const TrainSettings& settings) {
  settings.model.validate();
  settings.loss.validate();
  settings.adam.validate();
  if (settings.model.feature_dim != dataset.feature_dim) {
    throw DimensionMismatch("train: model expects " + std::to_string(settings.model.feature_dim) +
                            " features, dataset has " + std::to_string(dataset.feature_dim));
  }
  if (settings.model.d != table.dim()) {
    throw DimensionMismatch("train: model expects d=" + std::to_string(settings.model.d) + ", embeddings have d=" +
                            std::to_string(table.dim()));
  }
  if (dataset.vocab_size != table.size()) throw DimensionMismatch("train: dataset and embeddings vocabularies differ");
  dataset.validate();

  TrainResult result{init_params(settings.model, derive_seed(settings.seed, streams::kInit)), {}};
  AdamState adam = AdamState::zeros_like(result.params, settings.adam);
  Rng shuffle_rng = make_stream(settings.seed, streams::kShuffle);
  Rng negative_rng = make_stream(settings.seed, streams::kNegatives);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& vectors = table.vectors();
  double learning_rate = settings.adam.learning_rate;

  for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t visited = 0;
    std::size_t active = 0;
    std::size_t sampled = 0;

    for (std::size_t idx : order) {
      const Instance& inst = dataset.instances[idx];
      if (inst.positives.size() >= table.size()) {
        if (epoch == 0) ++result.report.skipped_instances;
        continue;
      }
      auto negatives = sample_negatives(inst, table.size(), settings.loss.negatives_per_instance, negative_rng);
      TrainingTuple tuple{inst.features, {}, {}};
      tuple.positives.reserve(inst.positives.size());
      for (std::size_t p : inst.positives) tuple.positives.push_back(vectors.row(p));
      tuple.negatives.reserve(negatives.size());
      for (std::size_t n : negatives) tuple.negatives.push_back(vectors.row(n));

      BackpropResult bp = backprop(result.params, tuple, settings.loss);
      adam_step(adam, result.params, bp.gradients, learning_rate);
      loss_sum += bp.loss;
      active += bp.active_negatives;
      sampled += negatives.size();
      ++visited;
    }

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.mean_loss = visited ? loss_sum / static_cast<double>(visited) : 0.0;
    stats.violation_rate = sampled ? static_cast<double>(active) / static_cast<double>(sampled) : 0.0;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.report.epochs.push_back(stats);
    learning_rate *= settings.adam.decay;
  }
  return result;
}

void write_train_report_csv(const TrainReport& report, const TrainSettings& settings, std::ostream& out) {
  std::string hidden;
  for (std::size_t i = 0; i < settings.model.hidden_dims.size(); ++i) {
    if (i) hidden += ',';
    hidden += std::to_string(settings.model.hidden_dims[i]);
  }
  out << "# k=" << settings.model.k << " d=" << settings.model.d << " hidden_dims=" << hidden
      << " negatives=" << settings.loss.negatives_per_instance
      << " margin=" << text::format_double(settings.loss.margin) << "\n";
  out << "# optimizer=adam lr=" << text::format_double(settings.adam.learning_rate)
      << " beta1=" << text::format_double(settings.adam.beta1) << " beta2=" << text::format_double(settings.adam.beta2)
      << " eps=" << text::format_double(settings.adam.epsilon) << " decay=" << text::format_double(settings.adam.decay)
      << " epochs=" << settings.epochs << " seed=" << settings.seed << "\n";
  out << "# skipped_instances=" << report.skipped_instances << "\n";
  out << "epoch,mean_loss,violation_rate,seconds\n";
  for (const auto& e : report.epochs) {
    out << e.epoch << ',' << text::format_double(e.mean_loss) << ',' << text::format_double(e.violation_rate) << ','
        << text::format_double(e.seconds) << '\n';
  }
}

}  // namespace condlabel
