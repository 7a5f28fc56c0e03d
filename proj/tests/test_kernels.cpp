#include <doctest.h>

#include <random>

#include "condlabel/embeddings.hpp"
#include "condlabel/kernels.hpp"
#include "test_util.hpp"

using namespace condlabel;

namespace {

struct Batch {
  ModelParams params;
  std::vector<Vector> storage;
  kernels::FeatureList features;
  Matrix vectors;
};

Batch make_batch(std::size_t n) {
  ModelConfig c;
  c.feature_dim = 6;
  c.hidden_dims = {10};
  c.k = 3;
  c.d = 5;
  Batch b;
  b.params = init_params(c, 11);
  std::mt19937_64 rng(12);
  for (std::size_t i = 0; i < n; ++i) b.storage.push_back(oracle::random_vec(6, rng));
  for (const auto& v : b.storage) b.features.emplace_back(v);
  b.vectors = random_embeddings(30, 5, 13).vectors();
  return b;
}

}  // namespace

TEST_CASE("serial and parallel kernels agree bit for bit") {
  set_num_threads(4);
  auto b = make_batch(64);
  CHECK(kernels::transform_batch_serial(b.params, b.features) ==
        kernels::transform_batch_parallel(b.params, b.features));
  CHECK(kernels::rank_batch_serial(b.params, b.features, b.vectors) ==
        kernels::rank_batch_parallel(b.params, b.features, b.vectors));

  auto a = forward_transform(b.params, b.features[0]);
  std::vector<double> s(30), p(30);
  kernels::squared_distances_serial(a, b.vectors, s);
  kernels::squared_distances_parallel(a, b.vectors, p);
  CHECK(s == p);
  for (std::size_t i = 0; i < 30; ++i) CHECK(s[i] == squared_label_distance(a, b.vectors.row(i)));
  set_num_threads(0);
}

TEST_CASE("kernels on an empty batch") {
  auto b = make_batch(0);
  CHECK(kernels::rank_batch(b.params, b.features, b.vectors, Execution::kParallel).empty());
}

TEST_CASE("squared_distances checks the output size") {
  auto b = make_batch(1);
  auto a = forward_transform(b.params, b.features[0]);
  std::vector<double> out(3);
  CHECK_THROWS(kernels::squared_distances_serial(a, b.vectors, out));
  CHECK_THROWS(kernels::squared_distances_parallel(a, b.vectors, out));
}
