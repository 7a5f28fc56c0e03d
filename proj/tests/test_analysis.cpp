#include <doctest.h>

#include <random>
#include <sstream>

#include "condlabel/analysis.hpp"
#include "condlabel/error.hpp"
#include "test_util.hpp"

using namespace condlabel;

TEST_CASE("row scores add up to the squared distance") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 1 + rng() % 6, d = 2 + rng() % 6;
    auto table = random_embeddings(8, d, rng());
    auto a = testutil::to_transform(oracle::random_mat(k, d, rng));
    for (std::size_t w = 0; w < table.size(); ++w) {
      double sum = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        auto rr = row_classifier_ranking(a, table, r);
        auto it = std::find_if(rr.begin(), rr.end(), [&](const RankedLabel& x) { return x.label == w; });
        sum += it->distance * it->distance;
      }
      const double full = squared_label_distance(a, table.lookup(w));
      CHECK(std::abs(sum - full) <= 1e-12 * std::max(1.0, full));
    }
  }
}

TEST_CASE("a single row committee equals the full ranking") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 2 + rng() % 5;
    auto table = random_embeddings(15, d, rng());
    auto a = testutil::to_transform(oracle::random_mat(1, d, rng));
    for (std::size_t n : {1, 3, 5}) {
      auto vote = committee_vote(a, table, n, n);
      CHECK(vote.prediction == predict_topk(rank_by_transform(a, table), n));
    }
  }
}

TEST_CASE("zero row gives no preference") {
  auto table = random_embeddings(5, 3, 2);
  TransformMatrix a(2, 3);
  auto r = row_classifier_ranking(a, table, 1);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(r[i].label == i);
    CHECK(r[i].distance == 0.0);
  }
}

TEST_CASE("identical rows vote unanimously") {
  std::mt19937_64 rng(8);
  auto table = random_embeddings(10, 4, 3);
  auto row = oracle::random_vec(4, rng);
  auto a = testutil::to_transform({row, row, row});
  auto vote = committee_vote(a, table, 3, 3);
  for (const auto& top : vote.row_top) CHECK(top == vote.row_top[0]);
  for (std::size_t l : vote.row_top[0]) CHECK(vote.votes[l] == 3);
  CHECK(committee_jaccard(a, table, 3).average == 1.0);
}

TEST_CASE("majority wins with two of three rows") {
  // Label vectors on the axes; a row is near-blind to the axis it zeroes.
  Matrix m(3, 3);
  m(0, 0) = 1;
  m(1, 1) = 1;
  m(2, 2) = 1;
  LabelEmbeddingTable table({"a", "b", "c"}, m);
  // Rows 0 and 1 rank "a" first, row 2 ranks "b" first.
  auto a = testutil::to_transform({{0.0, 1.0, 2.0}, {0.1, 1.0, 2.0}, {1.0, 0.0, 2.0}});
  auto vote = committee_vote(a, table, 1, 1);
  CHECK(vote.row_top[0] == std::vector<std::size_t>{0});
  CHECK(vote.row_top[2] == std::vector<std::size_t>{1});
  CHECK(vote.votes == std::vector<std::size_t>{2, 1, 0});
  CHECK(vote.prediction == std::vector<std::size_t>{0});
}

TEST_CASE("vote ties broken by mean rank") {
  Matrix m(3, 2);
  m(0, 0) = 1;
  m(1, 1) = 1;
  m(2, 0) = 1;
  m(2, 1) = 1;
  LabelEmbeddingTable table({"x", "y", "xy"}, m);
  // Row 0 ranks x, y, xy; row 1 ranks y, xy, x. One vote each, y has the lower mean rank.
  auto a = testutil::to_transform({{0.0, 0.5}, {3.0, -1.0}});
  auto vote = committee_vote(a, table, 1, 2);
  CHECK(vote.votes[0] == 1);
  CHECK(vote.votes[1] == 1);
  CHECK(vote.mean_rank[1] < vote.mean_rank[0]);
  CHECK(vote.prediction == std::vector<std::size_t>{1, 0});
}

TEST_CASE("jaccard values") {
  CHECK(jaccard({1, 2, 3}, {3, 2, 1}) == 1.0);
  CHECK(jaccard({1, 2}, {3, 4}) == 0.0);
  CHECK(jaccard({1, 2, 3}, {2, 3, 4}) == doctest::Approx(0.5));
  auto table = random_embeddings(6, 2, 1);
  CHECK_THROWS_AS(committee_jaccard(TransformMatrix(1, 2), table, 2), InvalidArgument);
  auto pairs = committee_jaccard(testutil::to_transform({{1, 0}, {0, 1}, {1, 1}}), table, 2).pairs;
  CHECK(pairs.size() == 3);
}

TEST_CASE("histogram binning") {
  auto h = unit_histogram({0.0, 0.04, 0.05, 0.5, 0.99, 1.0});
  REQUIRE(h.counts.size() == 20);
  CHECK(h.centers[0] == doctest::Approx(0.025));
  CHECK(h.counts[0] == 2);
  CHECK(h.counts[1] == 1);
  CHECK(h.counts[10] == 1);
  CHECK(h.counts[19] == 2);
  std::ostringstream os;
  write_histogram(h, os);
  CHECK(os.str().rfind("0.025 2\n", 0) == 0);
}

namespace {

SyntheticData small_data() {
  SyntheticSpec spec;
  spec.num_labels = 12;
  spec.d = 5;
  spec.f = 4;
  spec.num_instances = 120;
  spec.seed = 3;
  return generate_synthetic(spec);
}

TrainSettings small_settings() {
  TrainSettings s;
  s.model.feature_dim = 4;
  s.model.d = 5;
  s.model.hidden_dims = {8};
  s.loss.negatives_per_instance = 5;
  s.epochs = 2;
  s.seed = 4;
  return s;
}

}  // namespace

TEST_CASE("study_committee is consistent with evaluate") {
  auto data = small_data();
  auto s = small_settings();
  s.model.k = 3;
  auto params = train(data.dataset, data.table, s).params;
  auto study = study_committee(params, data.dataset, data.table, {1, 3}, 3, 3);
  auto direct = evaluate(params, data.dataset, data.table, 3);
  CHECK(study.full.overall_f1 == direct.overall_f1);
  REQUIRE(study.voting.size() == 2);
  CHECK(study.image_jaccard.size() == data.dataset.size());
  CHECK(study.jaccard_mean >= 0.0);
  CHECK(study.jaccard_mean <= 1.0);
  auto serial = study_committee(params, data.dataset, data.table, {1, 3}, 3, 3, Execution::kSerial);
  CHECK(serial.image_jaccard == study.image_jaccard);
  std::ostringstream os;
  write_committee_csv(study, os);
  CHECK(os.str().rfind("method,N,C-P,C-R,C-F1,O-P,O-R,O-F1\n", 0) == 0);
}

TEST_CASE("a one-element sweep equals a plain train and evaluate") {
  auto data = small_data();
  auto [tr, te] = split(data.dataset, 0.75, 1);
  auto s = small_settings();
  auto rows = sweep_k(tr, te, data.table, {2}, s, 3);
  REQUIRE(rows.size() == 1);
  s.model.k = 2;
  auto result = train(tr, data.table, s);
  auto direct = evaluate(result.params, te, data.table, 3);
  CHECK(rows[0].metrics.overall_f1 == direct.overall_f1);
  CHECK(rows[0].final_loss == result.report.epochs.back().mean_loss);
  auto par = sweep_k(tr, te, data.table, {2, 3}, small_settings(), 3, true);
  auto ser = sweep_k(tr, te, data.table, {2, 3}, small_settings(), 3, false);
  CHECK(par[1].metrics.overall_f1 == ser[1].metrics.overall_f1);
}
