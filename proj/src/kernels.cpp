#include "condlabel/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "condlabel/error.hpp"

namespace condlabel {

PredictionRanking rank_by_scores(std::span<const double> scores) {
  PredictionRanking ranking(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) ranking[i] = {i, scores[i]};
  std::sort(ranking.begin(), ranking.end(), [](const RankedLabel& x, const RankedLabel& y) {
    return x.distance < y.distance || (x.distance == y.distance && x.label < y.label);
  });
  return ranking;
}

PredictionRanking rank_by_squared_scores(std::span<const double> squared) {
  PredictionRanking ranking = rank_by_scores(squared);
  for (auto& r : ranking) r.distance = std::sqrt(r.distance);
  return ranking;
}

std::vector<std::size_t> predict_topk(const PredictionRanking& ranking, std::size_t k_pred) {
  if (k_pred < 1 || k_pred > ranking.size()) {
    throw InvalidArgument("predict_topk: k_pred=" + std::to_string(k_pred) + " outside [1, " +
                          std::to_string(ranking.size()) + "]");
  }
  std::vector<std::size_t> out(k_pred);
  for (std::size_t i = 0; i < k_pred; ++i) out[i] = ranking[i].label;
  return out;
}

void set_num_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace kernels {

namespace {

void check_shapes(const TransformMatrix& a, const Matrix& vectors, std::span<double> out) {
  if (vectors.cols != a.d()) throw DimensionMismatch("squared_distances: label dimension does not match A");
  if (out.size() != vectors.rows) throw DimensionMismatch("squared_distances: output size does not match vocabulary");
}

}  // namespace

void squared_distances_serial(const TransformMatrix& a, const Matrix& vectors, std::span<double> out) {
  check_shapes(a, vectors, out);
  for (std::size_t i = 0; i < vectors.rows; ++i) out[i] = squared_label_distance(a, vectors.row(i));
}

void squared_distances_parallel(const TransformMatrix& a, const Matrix& vectors, std::span<double> out) {
  check_shapes(a, vectors, out);
  const auto n = static_cast<std::ptrdiff_t>(vectors.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = squared_label_distance(a, vectors.row(static_cast<std::size_t>(i)));
  }
}

std::vector<TransformMatrix> transform_batch_serial(const ModelParams& params, const FeatureList& features) {
  std::vector<TransformMatrix> out;
  out.reserve(features.size());
  for (auto f : features) out.push_back(forward_transform(params, f));
  return out;
}

std::vector<TransformMatrix> transform_batch_parallel(const ModelParams& params, const FeatureList& features) {
  for (auto f : features) {
    if (f.size() != params.config.feature_dim) throw DimensionMismatch("transform_batch: feature dimension mismatch");
  }
  std::vector<TransformMatrix> out(features.size());
  const auto n = static_cast<std::ptrdiff_t>(features.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    out[s] = forward_transform(params, features[s]);
  }
  return out;
}

std::vector<PredictionRanking> rank_batch_serial(const ModelParams& params, const FeatureList& features,
                                                 const Matrix& vectors) {
  std::vector<PredictionRanking> out;
  out.reserve(features.size());
  Vector sq(vectors.rows);
  for (auto f : features) {
    squared_distances_serial(forward_transform(params, f), vectors, sq);
    out.push_back(rank_by_squared_scores(sq));
  }
  return out;
}

std::vector<PredictionRanking> rank_batch_parallel(const ModelParams& params, const FeatureList& features,
                                                   const Matrix& vectors) {
  for (auto f : features) {
    if (f.size() != params.config.feature_dim) throw DimensionMismatch("rank_batch: feature dimension mismatch");
  }
  if (vectors.cols != params.config.d) throw DimensionMismatch("rank_batch: label dimension does not match model");
  std::vector<PredictionRanking> out(features.size());
  const auto n = static_cast<std::ptrdiff_t>(features.size());
#pragma omp parallel
  {
    Vector sq(vectors.rows);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(i);
      squared_distances_serial(forward_transform(params, features[s]), vectors, sq);
      out[s] = rank_by_squared_scores(sq);
    }
  }
  return out;
}

}  // namespace kernels
}  // namespace condlabel
