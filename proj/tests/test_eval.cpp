#include <doctest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "condlabel/error.hpp"
#include "condlabel/eval.hpp"
#include "test_util.hpp"

using namespace condlabel;

namespace {

LabelEmbeddingTable three_labels() {
  Matrix m(3, 2);
  m(0, 0) = 2.0;  // ||A w|| = 2
  m(1, 1) = 0.5;  //          0.5
  m(2, 0) = 1.0;  //          1
  return LabelEmbeddingTable({"far", "near", "mid"}, m);
}

}  // namespace

TEST_CASE("zero transform ranks by index") {
  auto table = random_embeddings(6, 3, 1);
  auto r = rank_by_transform(TransformMatrix(2, 3), table);
  REQUIRE(r.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(r[i].label == i);
    CHECK(r[i].distance == 0.0);
  }
}

TEST_CASE("hand distances") {
  TransformMatrix id(2, 2);
  id.entries()(0, 0) = 1;
  id.entries()(1, 1) = 1;
  auto r = rank_by_transform(id, three_labels());
  REQUIRE(r.size() == 3);
  CHECK(r[0].label == 1);
  CHECK(r[1].label == 2);
  CHECK(r[2].label == 0);
  CHECK(r[0].distance == doctest::Approx(0.5));
  CHECK(r[2].distance == doctest::Approx(2.0));
  CHECK(predict_topk(r, 2) == std::vector<std::size_t>{1, 2});
  CHECK_THROWS_AS(predict_topk(r, 0), InvalidArgument);
  CHECK_THROWS_AS(predict_topk(r, 4), InvalidArgument);
}

TEST_CASE("ranking agrees with a brute-force sort") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 1 + rng() % 5, d = 2 + rng() % 6, v = 5 + rng() % 20;
    auto table = random_embeddings(v, d, rng());
    auto a = oracle::random_mat(k, d, rng);
    auto ranking = rank_by_transform(testutil::to_transform(a), table);
    std::vector<std::pair<double, std::size_t>> ref;
    for (std::size_t i = 0; i < v; ++i) {
      auto w = table.lookup(i);
      ref.emplace_back(oracle::norm(oracle::matvec(a, oracle::Vec(w.begin(), w.end()))), i);
    }
    std::sort(ref.begin(), ref.end());
    for (std::size_t i = 0; i < v; ++i) {
      CHECK(ranking[i].label == ref[i].second);
      CHECK(ranking[i].distance == doctest::Approx(ref[i].first).epsilon(1e-12));
    }
  }
}

TEST_CASE("rank_labels goes through the encoder") {
  ModelConfig c;
  c.feature_dim = 2;
  c.hidden_dims = {};
  c.k = 2;
  c.d = 2;
  c.init_scale = 0.0;
  auto p = init_params(c, 1);
  p.layers[0].bias = {1, 0, 0, 1};
  Vector x{0.3, 0.4};
  CHECK(rank_labels(p, x, three_labels()) == rank_by_transform(forward_transform(p, x), three_labels()));
}

TEST_CASE("perfect predictor") {
  std::vector<std::vector<std::size_t>> truth{{0, 1}, {2}, {1, 3}};
  auto r = compute_metrics(truth, truth, 5);
  CHECK(r.class_precision == 1.0);
  CHECK(r.class_recall == 1.0);
  CHECK(r.class_f1 == 1.0);
  CHECK(r.overall_precision == 1.0);
  CHECK(r.overall_recall == 1.0);
  CHECK(r.overall_f1 == 1.0);
  CHECK(r.classes_with_precision == 4);
  CHECK_FALSE(r.per_class[4].precision.has_value());
  CHECK_FALSE(r.per_class[4].recall.has_value());
}

TEST_CASE("overall counts on a hand example") {
  // Predicted {a,b,c} against truth {a,d}: one hit of three predicted, two true.
  auto r = compute_metrics({{0, 1, 2}}, {{0, 3}}, 4);
  CHECK(r.overall_precision == doctest::Approx(1.0 / 3.0));
  CHECK(r.overall_recall == doctest::Approx(0.5));
  CHECK(r.total_correct == 1);
  CHECK(r.classes_with_precision == 3);
  CHECK(r.classes_with_recall == 2);
  CHECK(r.class_precision == doctest::Approx(1.0 / 3.0));
  CHECK(r.class_recall == doctest::Approx(0.5));
}

TEST_CASE("F1 is the harmonic mean") {
  CHECK(f1_score(0.518, 0.638) == doctest::Approx(0.5718).epsilon(1e-3));
  CHECK(f1_score(0, 0) == 0.0);
  CHECK(f1_score(1, 0) == 0.0);
  CHECK(f1_score(0.5, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("duplicate labels inside a set are ignored") {
  auto a = compute_metrics({{0, 0, 1}}, {{0, 0}}, 2);
  auto b = compute_metrics({{0, 1}}, {{0}}, 2);
  CHECK(a.overall_precision == b.overall_precision);
  CHECK(a.overall_recall == b.overall_recall);
}

TEST_CASE("metrics agree with the set-based oracle") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    const std::size_t vocab = 2 + rng() % 15, images = 1 + rng() % 20;
    std::vector<std::vector<std::size_t>> pred(images), truth(images);
    for (std::size_t i = 0; i < images; ++i) {
      const std::size_t np = 1 + rng() % std::min<std::size_t>(vocab, 4);
      const std::size_t nt = 1 + rng() % std::min<std::size_t>(vocab, 4);
      std::vector<std::size_t> perm(vocab);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      pred[i].assign(perm.begin(), perm.begin() + static_cast<long>(np));
      std::shuffle(perm.begin(), perm.end(), rng);
      truth[i].assign(perm.begin(), perm.begin() + static_cast<long>(nt));
    }
    auto got = compute_metrics(pred, truth, vocab);
    auto want = oracle::metrics(pred, truth, vocab);
    CHECK(got.class_precision == doctest::Approx(want.cp).epsilon(1e-12));
    CHECK(got.class_recall == doctest::Approx(want.cr).epsilon(1e-12));
    CHECK(got.class_f1 == doctest::Approx(want.cf1).epsilon(1e-12));
    CHECK(got.overall_precision == doctest::Approx(want.op).epsilon(1e-12));
    CHECK(got.overall_recall == doctest::Approx(want.orr).epsilon(1e-12));
    CHECK(got.overall_f1 == doctest::Approx(want.of1).epsilon(1e-12));
  }
}

TEST_CASE("metrics input errors") {
  CHECK_THROWS_AS(compute_metrics({}, {}, 3), InvalidArgument);
  CHECK_THROWS_AS(compute_metrics({{0}}, {{0}, {1}}, 3), DimensionMismatch);
  CHECK_THROWS_AS(compute_metrics({{5}}, {{0}}, 3), InvalidArgument);
}

TEST_CASE("evaluate on an empty test set") {
  ModelConfig c;
  c.feature_dim = 2;
  c.hidden_dims = {};
  c.k = 1;
  c.d = 2;
  auto p = init_params(c, 1);
  Dataset empty;
  empty.feature_dim = 2;
  empty.vocab_size = 3;
  CHECK_THROWS_AS(evaluate(p, empty, three_labels(), 1), InvalidArgument);
}

TEST_CASE("evaluate matches compute_metrics on rankings") {
  SyntheticSpec spec;
  spec.num_labels = 12;
  spec.d = 4;
  spec.f = 3;
  spec.num_instances = 40;
  auto data = generate_synthetic(spec);
  ModelConfig c;
  c.feature_dim = 3;
  c.hidden_dims = {5};
  c.k = 2;
  c.d = 4;
  auto p = init_params(c, 9);
  auto report = evaluate(p, data.dataset, data.table, 3);
  std::vector<std::vector<std::size_t>> pred, truth;
  for (const auto& inst : data.dataset.instances) {
    pred.push_back(predict_topk(rank_labels(p, inst.features, data.table), 3));
    truth.push_back(inst.positives);
  }
  auto direct = compute_metrics(pred, truth, 12);
  CHECK(report.overall_f1 == direct.overall_f1);
  CHECK(report.class_f1 == direct.class_f1);
  CHECK(evaluate(p, data.dataset, data.table, 3, Execution::kSerial).overall_f1 == report.overall_f1);
}

TEST_CASE("metrics csv layout") {
  auto table = three_labels();
  auto r = compute_metrics({{0, 1}}, {{0}}, 3);
  std::ostringstream os;
  write_metrics_csv(r, table, os);
  const std::string s = os.str();
  CHECK(s.rfind("scope,label,num_predicted,num_true,num_correct,precision,recall,f1\n", 0) == 0);
  CHECK(s.find("class,mid,0,0,0,,,") != std::string::npos);
  CHECK(s.find("\nper-class,C,") != std::string::npos);
  CHECK(s.find("\noverall,O,2,1,1,") != std::string::npos);
}

TEST_CASE("prediction line") {
  TransformMatrix id(2, 2);
  id.entries()(0, 0) = 1;
  id.entries()(1, 1) = 1;
  auto table = three_labels();
  std::ostringstream os;
  write_prediction_line(os, "img7", rank_by_transform(id, table), 2, table);
  CHECK(os.str() == "img7 | near mid | 0.5 1\n");
}
