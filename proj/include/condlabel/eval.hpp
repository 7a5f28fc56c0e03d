#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "condlabel/dataset.hpp"
#include "condlabel/embeddings.hpp"
#include "condlabel/kernels.hpp"
#include "condlabel/model.hpp"
#include "condlabel/ranking.hpp"

namespace condlabel {

/// Ranks every vocabulary label by ||A w||_2 with A = forward_transform(features).
PredictionRanking rank_labels(const ModelParams& params, std::span<const double> features,
                              const LabelEmbeddingTable& table);
PredictionRanking rank_by_transform(const TransformMatrix& a, const LabelEmbeddingTable& table);

struct ClassMetrics {
  std::size_t predicted = 0;  // images where the class was predicted
  std::size_t truth = 0;      // images where the class is a ground-truth label
  std::size_t correct = 0;    // both
  std::optional<double> precision;  // empty when never predicted
  std::optional<double> recall;     // empty when never true
};

/// Per-class (C-*) and overall (O-*) precision/recall with their F1s.
/// C-P and C-R average only over classes where they are defined.
struct MetricsReport {
  double class_precision = 0.0;
  double class_recall = 0.0;
  double class_f1 = 0.0;
  double overall_precision = 0.0;
  double overall_recall = 0.0;
  double overall_f1 = 0.0;

  std::size_t total_predicted = 0;
  std::size_t total_truth = 0;
  std::size_t total_correct = 0;
  std::size_t classes_with_precision = 0;
  std::size_t classes_with_recall = 0;
  std::vector<ClassMetrics> per_class;
};

/// Harmonic mean 2PR/(P+R), 0 when P+R == 0.
double f1_score(double precision, double recall);

/// Metrics for explicit prediction/truth label sets, one entry per image.
/// Duplicates inside a set are ignored.
MetricsReport compute_metrics(const std::vector<std::vector<std::size_t>>& predicted,
                              const std::vector<std::vector<std::size_t>>& truth, std::size_t vocab_size);

/// Top-k_pred predictions for every test instance scored against its
/// positives. Throws InvalidArgument on an empty test set.
MetricsReport evaluate(const ModelParams& params, const Dataset& test, const LabelEmbeddingTable& table,
                       std::size_t k_pred, Execution exec = Execution::kParallel);

/// Rankings for all instances of a dataset (ordered as the dataset).
std::vector<PredictionRanking> rank_dataset(const ModelParams& params, const Dataset& data,
                                            const LabelEmbeddingTable& table, Execution exec = Execution::kParallel);

/// CSV: scope,label,num_predicted,num_true,num_correct,precision,recall,f1
/// with one "class" row per label, then "per-class" and "overall" summary rows.
/// Undefined per-class values are left empty.
void write_metrics_csv(const MetricsReport& report, const LabelEmbeddingTable& table, std::ostream& out);
void print_metrics_table(const MetricsReport& report, std::ostream& out);

/// "id | label1 ... labelk | dist1 ... distk" per row.
void write_prediction_line(std::ostream& out, const std::string& id, const PredictionRanking& ranking,
                           std::size_t k_pred, const LabelEmbeddingTable& table);

}  // namespace condlabel
