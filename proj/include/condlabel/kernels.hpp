#pragma once

// Data-parallel kernels. Every kernel has a serial reference and an OpenMP
// version; both write into pre-sized slots so their results are identical
// bit for bit regardless of thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "condlabel/matrix.hpp"
#include "condlabel/model.hpp"
#include "condlabel/ranking.hpp"

namespace condlabel {

enum class Execution { kSerial, kParallel };

namespace kernels {

using FeatureList = std::vector<std::span<const double>>;

/// out[i] = ||A w_i||^2 for every row w_i of `vectors`.
void squared_distances_serial(const TransformMatrix& a, const Matrix& vectors, std::span<double> out);
void squared_distances_parallel(const TransformMatrix& a, const Matrix& vectors, std::span<double> out);

std::vector<TransformMatrix> transform_batch_serial(const ModelParams& params, const FeatureList& features);
std::vector<TransformMatrix> transform_batch_parallel(const ModelParams& params, const FeatureList& features);

/// Full label ranking for each input.
std::vector<PredictionRanking> rank_batch_serial(const ModelParams& params, const FeatureList& features,
                                                 const Matrix& vectors);
std::vector<PredictionRanking> rank_batch_parallel(const ModelParams& params, const FeatureList& features,
                                                   const Matrix& vectors);

inline std::vector<TransformMatrix> transform_batch(const ModelParams& params, const FeatureList& features,
                                                    Execution exec) {
  return exec == Execution::kParallel ? transform_batch_parallel(params, features)
                                      : transform_batch_serial(params, features);
}

inline std::vector<PredictionRanking> rank_batch(const ModelParams& params, const FeatureList& features,
                                                 const Matrix& vectors, Execution exec) {
  return exec == Execution::kParallel ? rank_batch_parallel(params, features, vectors)
                                      : rank_batch_serial(params, features, vectors);
}

}  // namespace kernels

/// Sets the OpenMP thread count (no-op without OpenMP). 0 keeps the default.
void set_num_threads(int threads);
int max_threads();

}  // namespace condlabel
