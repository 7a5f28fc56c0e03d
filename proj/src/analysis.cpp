#include "condlabel/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>

#include "condlabel/error.hpp"
#include "condlabel/text_util.hpp"

namespace condlabel {

namespace {

Vector row_scores(const TransformMatrix& a, const LabelEmbeddingTable& table, std::size_t row) {
  const auto arow = a.row(row);
  Vector scores(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double proj = dot(arow, table.vectors().row(i));
    scores[i] = proj * proj;
  }
  return scores;
}

void check_row_input(const TransformMatrix& a, const LabelEmbeddingTable& table) {
  if (a.d() != table.dim()) throw DimensionMismatch("committee: A columns do not match embedding dimension");
}

}  // namespace

PredictionRanking row_classifier_ranking(const TransformMatrix& a, const LabelEmbeddingTable& table,
                                         std::size_t row) {
  check_row_input(a, table);
  if (row >= a.k()) {
    throw InvalidArgument("row_classifier_ranking: row " + std::to_string(row) + " outside [0, " +
                          std::to_string(a.k()) + ")");
  }
  return rank_by_squared_scores(row_scores(a, table, row));
}

CommitteeResult committee_vote(const TransformMatrix& a, const LabelEmbeddingTable& table, std::size_t top_n,
                               std::size_t k_pred) {
  check_row_input(a, table);
  const std::size_t v = table.size();
  if (top_n < 1 || top_n > v) throw InvalidArgument("committee_vote: N outside [1, |V|]");
  if (k_pred < 1 || k_pred > v) throw InvalidArgument("committee_vote: k_pred outside [1, |V|]");

  CommitteeResult out;
  out.votes.assign(v, 0);
  std::vector<std::size_t> rank_sum(v, 0);
  out.row_top.reserve(a.k());
  for (std::size_t r = 0; r < a.k(); ++r) {
    PredictionRanking ranking = rank_by_scores(row_scores(a, table, r));
    std::vector<std::size_t> top(top_n);
    for (std::size_t pos = 0; pos < v; ++pos) {
      const std::size_t label = ranking[pos].label;
      rank_sum[label] += pos;
      if (pos < top_n) {
        top[pos] = label;
        ++out.votes[label];
      }
    }
    out.row_top.push_back(std::move(top));
  }

  out.mean_rank.resize(v);
  for (std::size_t i = 0; i < v; ++i) {
    out.mean_rank[i] = static_cast<double>(rank_sum[i]) / static_cast<double>(a.k());
  }
  // Equal row counts make the rank sum an exact stand-in for the mean rank.
  std::vector<std::size_t> order(v);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (out.votes[x] != out.votes[y]) return out.votes[x] > out.votes[y];
    if (rank_sum[x] != rank_sum[y]) return rank_sum[x] < rank_sum[y];
    return x < y;
  });
  out.prediction.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_pred));
  return out;
}

double jaccard(std::vector<std::size_t> a, std::vector<std::size_t> b) {
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::size_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  const std::size_t uni = a.size() + b.size() - common.size();
  return static_cast<double>(common.size()) / static_cast<double>(uni);
}

JaccardResult committee_jaccard(const TransformMatrix& a, const LabelEmbeddingTable& table, std::size_t top_n) {
  check_row_input(a, table);
  if (a.k() < 2) throw InvalidArgument("committee_jaccard: needs at least 2 rows");
  if (top_n < 1 || top_n > table.size()) throw InvalidArgument("committee_jaccard: topN outside [1, |V|]");
  std::vector<std::vector<std::size_t>> tops;
  tops.reserve(a.k());
  for (std::size_t r = 0; r < a.k(); ++r) tops.push_back(predict_topk(rank_by_scores(row_scores(a, table, r)), top_n));

  JaccardResult out;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.k(); ++i) {
    for (std::size_t j = i + 1; j < a.k(); ++j) {
      out.pairs.push_back(jaccard(tops[i], tops[j]));
      sum += out.pairs.back();
    }
  }
  out.average = sum / static_cast<double>(out.pairs.size());
  return out;
}

Histogram unit_histogram(const std::vector<double>& values, std::size_t bins) {
  if (bins < 1) throw InvalidArgument("unit_histogram: need at least one bin");
  Histogram h;
  h.counts.assign(bins, 0);
  h.centers.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) h.centers[b] = (static_cast<double>(b) + 0.5) / static_cast<double>(bins);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("unit_histogram: value outside [0, 1]");
    auto b = static_cast<std::size_t>(v * static_cast<double>(bins));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

void write_histogram(const Histogram& hist, std::ostream& out) {
  for (std::size_t b = 0; b < hist.counts.size(); ++b) {
    out << text::format_double(hist.centers[b]) << ' ' << hist.counts[b] << '\n';
  }
}

CommitteeStudy study_committee(const ModelParams& params, const Dataset& test, const LabelEmbeddingTable& table,
                               const std::vector<std::size_t>& vote_ns, std::size_t k_pred, std::size_t jaccard_n,
                               Execution exec) {
  if (test.empty()) throw InvalidArgument("study_committee: empty test set");
  if (params.config.d != table.dim()) throw DimensionMismatch("study_committee: model d does not match embeddings");
  if (k_pred < 1 || k_pred > table.size()) throw InvalidArgument("study_committee: k_pred out of range");
  for (std::size_t n : vote_ns) {
    if (n < 1 || n > table.size()) throw InvalidArgument("study_committee: vote N out of range");
  }
  const bool do_jaccard = params.config.k >= 2;
  if (do_jaccard && (jaccard_n < 1 || jaccard_n > table.size())) {
    throw InvalidArgument("study_committee: jaccard N out of range");
  }

  kernels::FeatureList features;
  for (const auto& inst : test.instances) features.emplace_back(inst.features);
  const auto transforms = kernels::transform_batch(params, features, exec);

  const std::size_t n_img = test.size();
  std::vector<std::vector<std::vector<std::size_t>>> voted(vote_ns.size(),
                                                           std::vector<std::vector<std::size_t>>(n_img));
  std::vector<std::vector<std::size_t>> full(n_img);
  std::vector<double> jac(do_jaccard ? n_img : 0);

  auto per_image = [&](std::size_t i) {
    const auto& a = transforms[i];
    for (std::size_t v = 0; v < vote_ns.size(); ++v) voted[v][i] = committee_vote(a, table, vote_ns[v], k_pred).prediction;
    full[i] = predict_topk(rank_by_transform(a, table), k_pred);
    if (do_jaccard) jac[i] = committee_jaccard(a, table, jaccard_n).average;
  };
  if (exec == Execution::kParallel) {
    const auto n = static_cast<std::ptrdiff_t>(n_img);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) per_image(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n_img; ++i) per_image(i);
  }

  std::vector<std::vector<std::size_t>> truth;
  truth.reserve(n_img);
  for (const auto& inst : test.instances) truth.push_back(inst.positives);

  CommitteeStudy study;
  for (std::size_t v = 0; v < vote_ns.size(); ++v) {
    study.voting.push_back({vote_ns[v], compute_metrics(voted[v], truth, table.size())});
  }
  study.full = compute_metrics(full, truth, table.size());
  if (do_jaccard) {
    const double n = static_cast<double>(n_img);
    const double mean = std::accumulate(jac.begin(), jac.end(), 0.0) / n;
    double var = 0.0;
    for (double x : jac) var += (x - mean) * (x - mean);
    study.jaccard_mean = mean;
    study.jaccard_std = std::sqrt(var / n);
    study.jaccard_histogram = unit_histogram(jac, 20);
    study.image_jaccard = std::move(jac);
  }
  return study;
}

namespace {

void metric_cells(std::ostream& out, const MetricsReport& m) {
  out << text::format_double(m.class_precision) << ',' << text::format_double(m.class_recall) << ','
      << text::format_double(m.class_f1) << ',' << text::format_double(m.overall_precision) << ','
      << text::format_double(m.overall_recall) << ',' << text::format_double(m.overall_f1);
}

}  // namespace

void write_committee_csv(const CommitteeStudy& study, std::ostream& out) {
  out << "method,N,C-P,C-R,C-F1,O-P,O-R,O-F1\n";
  for (const auto& v : study.voting) {
    out << "voting," << v.top_n << ',';
    metric_cells(out, v.metrics);
    out << '\n';
  }
  out << "full,,";
  metric_cells(out, study.full);
  out << '\n';
}

void write_jaccard_csv(const CommitteeStudy& study, const Dataset& test, std::ostream& out) {
  out << "id,mean_jaccard\n";
  for (std::size_t i = 0; i < study.image_jaccard.size(); ++i) {
    out << test.instances[i].id << ',' << text::format_double(study.image_jaccard[i]) << '\n';
  }
}

std::vector<SweepRow> sweep_k(const Dataset& train_set, const Dataset& test_set, const LabelEmbeddingTable& table,
                              const std::vector<std::size_t>& k_values, const TrainSettings& base,
                              std::size_t k_pred, bool parallel) {
  if (k_values.empty()) throw InvalidArgument("sweep_k: no k values");
  for (std::size_t k : k_values) {
    if (k < 1) throw InvalidArgument("sweep_k: k must be positive");
  }
  std::vector<SweepRow> rows(k_values.size());
  std::vector<std::exception_ptr> errors(k_values.size());

  auto run = [&](std::size_t i) {
    try {
      TrainSettings s = base;
      s.model.k = k_values[i];
      TrainResult trained = train(train_set, table, s);
      rows[i].k = k_values[i];
      rows[i].metrics = evaluate(trained.params, test_set, table, k_pred, Execution::kSerial);
      rows[i].final_loss = trained.report.epochs.empty() ? 0.0 : trained.report.epochs.back().mean_loss;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (parallel) {
    const auto n = static_cast<std::ptrdiff_t>(k_values.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) run(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < k_values.size(); ++i) run(i);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "k,C-P,C-R,C-F1,O-P,O-R,O-F1,final_loss\n";
  for (const auto& r : rows) {
    out << r.k << ',';
    metric_cells(out, r.metrics);
    out << ',' << text::format_double(r.final_loss) << '\n';
  }
}

}  // namespace condlabel
