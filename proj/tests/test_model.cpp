#include <doctest.h>

#include "condlabel/error.hpp"
#include "condlabel/model.hpp"
#include "test_util.hpp"

using namespace condlabel;

TEST_CASE("init_params is deterministic and shaped by the config") {
  ModelConfig c;
  c.feature_dim = 16;
  c.hidden_dims = {32};
  c.k = 4;
  c.d = 20;
  auto a = init_params(c, 42);
  CHECK(a == init_params(c, 42));
  CHECK_FALSE(a == init_params(c, 43));
  REQUIRE(a.layers.size() == 2);
  CHECK(a.layers[0].weight.rows == 32);
  CHECK(a.layers[0].weight.cols == 16);
  CHECK(a.layers[1].weight.rows == 80);
  CHECK(a.layers[1].bias.size() == 80);
  for (double b : a.layers[1].bias) CHECK(b == 0.0);
  const double bound = 1.0 / std::sqrt(32.0);
  for (double w : a.layers[1].weight.data) CHECK(std::abs(w) <= bound);
}

TEST_CASE("zero init gives the zero transform") {
  ModelConfig c;
  c.init_scale = 0.0;
  auto p = init_params(c, 1);
  auto a = forward_transform(p, Vector(c.feature_dim, 0.7));
  CHECK(a.k() == c.k);
  CHECK(a.d() == c.d);
  for (double x : a.entries().data) CHECK(x == 0.0);
}

TEST_CASE("hand-set single affine layer") {
  ModelConfig c;
  c.feature_dim = 2;
  c.hidden_dims = {};
  c.k = 2;
  c.d = 2;
  auto p = init_params(c, 0);
  p.layers[0].weight.data = {1, 0, 0, 1, 2, 0, 0, -1};
  p.layers[0].bias = {0, 1, 0.5, 0};
  auto a = forward_transform(p, Vector{3, 4});
  // Row-major reshape: outputs (3, 5, 6.5, -4).
  CHECK(a.entries()(0, 0) == 3.0);
  CHECK(a.entries()(0, 1) == 5.0);
  CHECK(a.entries()(1, 0) == 6.5);
  CHECK(a.entries()(1, 1) == -4.0);
}

TEST_CASE("hidden rectifier, affine head, k = 1") {
  ModelConfig c;
  c.feature_dim = 2;
  c.hidden_dims = {2};
  c.k = 1;
  c.d = 2;
  auto p = init_params(c, 0);
  p.layers[0].weight.data = {1, -1, 1, 1};
  p.layers[1].weight.data = {2, 1, 1, 0};
  p.layers[1].bias = {0, -5};
  auto a = forward_transform(p, Vector{1, 2});
  // hidden = relu(-1, 3) = (0, 3); head = (3, -5): negative output kept.
  REQUIRE(a.k() == 1);
  CHECK(a.entries()(0, 0) == 3.0);
  CHECK(a.entries()(0, 1) == -5.0);
  CHECK(forward_with_trace(p, Vector{1, 2}).transform == a);
}

TEST_CASE("forward rejects wrong feature dimension") {
  auto p = init_params(ModelConfig{}, 1);
  CHECK_THROWS_AS(forward_transform(p, Vector(3)), DimensionMismatch);
}

TEST_CASE("transform_label") {
  TransformMatrix eye(TransformMatrix(Matrix(2, 3)));
  eye.entries()(0, 0) = 1;
  eye.entries()(1, 1) = 1;
  CHECK(transform_label(eye, Vector{7, -2, 9}) == Vector{7, -2});
  CHECK(transform_label(TransformMatrix(3, 2), Vector{1, 2}) == Vector{0, 0, 0});
  CHECK_THROWS_AS(transform_label(eye, Vector{1, 2}), DimensionMismatch);

  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    auto a = oracle::random_mat(3, 2, rng);
    auto w = oracle::random_vec(2, rng);
    auto expect = oracle::matvec(a, w);
    auto got = transform_label(testutil::to_transform(a), w);
    for (std::size_t r = 0; r < 3; ++r) CHECK(got[r] == doctest::Approx(expect[r]).epsilon(1e-14));
  }
}

TEST_CASE("label_distance") {
  CHECK(label_distance(TransformMatrix(2, 2), Vector{3, 4}) == 0.0);
  TransformMatrix eye(2, 2);
  eye.entries()(0, 0) = 1;
  eye.entries()(1, 1) = 1;
  CHECK(label_distance(eye, Vector{3, 4}) == 5.0);
  CHECK_THROWS_AS(label_distance(eye, Vector{3}), DimensionMismatch);
}

TEST_CASE("distance properties over random draws") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 1 + rng() % 6, d = 1 + rng() % 8;
    auto a = oracle::random_mat(k, d, rng);
    auto w = oracle::random_vec(d, rng);
    const auto ta = testutil::to_transform(a);
    const double dist = label_distance(ta, w);

    double rows = 0;
    for (std::size_t r = 0; r < k; ++r) {
      double p = 0;
      for (std::size_t c = 0; c < d; ++c) p += a[r][c] * w[c];
      rows += p * p;
    }
    CHECK(std::abs(dist * dist - rows) <= 1e-12 * rows);

    const double c = std::normal_distribution<double>(0, 3)(rng);
    auto cw = w;
    for (double& x : cw) x *= c;
    CHECK(std::abs(label_distance(ta, cw) - std::abs(c) * dist) <= 1e-9 * std::max(1.0, std::abs(c) * dist));

    auto qa = oracle::matmul(oracle::random_orthogonal(k, rng), a);
    CHECK(std::abs(label_distance(testutil::to_transform(qa), w) - dist) <= 1e-9);

    auto q = oracle::random_orthogonal(d, rng);
    auto aqt = oracle::matmul(a, oracle::transpose(q));
    auto qw = oracle::matvec(q, w);
    CHECK(std::abs(label_distance(testutil::to_transform(aqt), qw) - dist) <= 1e-9);
  }
}

TEST_CASE("checkpoint round trip is byte exact") {
  ModelConfig c;
  c.hidden_dims = {5, 3};
  c.k = 3;
  c.d = 4;
  c.feature_dim = 6;
  c.init_scale = 0.7;
  auto p = init_params(c, 9);
  p.layers[1].bias[2] = -1.0 / 3.0;
  const std::string bytes = serialize_checkpoint(p);
  auto back = deserialize_checkpoint(bytes);
  CHECK(back == p);
  CHECK(serialize_checkpoint(back) == bytes);

  testutil::TempDir dir("ckpt");
  save_checkpoint(p, dir / "m.bin");
  CHECK(load_checkpoint(dir / "m.bin") == p);
  CHECK(testutil::read_text(dir / "m.bin") == bytes);
}

TEST_CASE("corrupt checkpoints are rejected") {
  auto p = init_params(ModelConfig{}, 1);
  std::string bytes = serialize_checkpoint(p);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 1)), ParseError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), ParseError);
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(bad), ParseError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.bin"), IoError);
}
