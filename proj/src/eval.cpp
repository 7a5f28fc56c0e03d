#include "condlabel/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "condlabel/error.hpp"
#include "condlabel/text_util.hpp"

namespace condlabel {

PredictionRanking rank_by_transform(const TransformMatrix& a, const LabelEmbeddingTable& table) {
  Vector sq(table.size());
  kernels::squared_distances_serial(a, table.vectors(), sq);
  return rank_by_squared_scores(sq);
}

PredictionRanking rank_labels(const ModelParams& params, std::span<const double> features,
                              const LabelEmbeddingTable& table) {
  if (params.config.d != table.dim()) throw DimensionMismatch("rank_labels: model d does not match embeddings");
  return rank_by_transform(forward_transform(params, features), table);
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

MetricsReport compute_metrics(const std::vector<std::vector<std::size_t>>& predicted,
                              const std::vector<std::vector<std::size_t>>& truth, std::size_t vocab_size) {
  if (predicted.size() != truth.size()) throw DimensionMismatch("compute_metrics: prediction/truth counts differ");
  if (predicted.empty()) throw InvalidArgument("compute_metrics: no images");

  MetricsReport r;
  r.per_class.resize(vocab_size);
  std::vector<char> in_truth(vocab_size);
  std::vector<char> in_pred(vocab_size);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    std::fill(in_truth.begin(), in_truth.end(), 0);
    std::fill(in_pred.begin(), in_pred.end(), 0);
    for (std::size_t t : truth[i]) {
      if (t >= vocab_size) throw InvalidArgument("compute_metrics: truth label out of range");
      in_truth[t] = 1;
    }
    for (std::size_t p : predicted[i]) {
      if (p >= vocab_size) throw InvalidArgument("compute_metrics: predicted label out of range");
      in_pred[p] = 1;
    }
    for (std::size_t c = 0; c < vocab_size; ++c) {
      auto& cm = r.per_class[c];
      cm.predicted += in_pred[c];
      cm.truth += in_truth[c];
      cm.correct += in_pred[c] & in_truth[c];
    }
  }

  double p_sum = 0.0;
  double r_sum = 0.0;
  for (auto& cm : r.per_class) {
    r.total_predicted += cm.predicted;
    r.total_truth += cm.truth;
    r.total_correct += cm.correct;
    if (cm.predicted > 0) {
      cm.precision = static_cast<double>(cm.correct) / static_cast<double>(cm.predicted);
      p_sum += *cm.precision;
      ++r.classes_with_precision;
    }
    if (cm.truth > 0) {
      cm.recall = static_cast<double>(cm.correct) / static_cast<double>(cm.truth);
      r_sum += *cm.recall;
      ++r.classes_with_recall;
    }
  }
  r.class_precision = r.classes_with_precision ? p_sum / static_cast<double>(r.classes_with_precision) : 0.0;
  r.class_recall = r.classes_with_recall ? r_sum / static_cast<double>(r.classes_with_recall) : 0.0;
  r.overall_precision =
      r.total_predicted ? static_cast<double>(r.total_correct) / static_cast<double>(r.total_predicted) : 0.0;
  r.overall_recall = r.total_truth ? static_cast<double>(r.total_correct) / static_cast<double>(r.total_truth) : 0.0;
  r.class_f1 = f1_score(r.class_precision, r.class_recall);
  r.overall_f1 = f1_score(r.overall_precision, r.overall_recall);
  return r;
}

std::vector<PredictionRanking> rank_dataset(const ModelParams& params, const Dataset& data,
                                            const LabelEmbeddingTable& table, Execution exec) {
  if (params.config.d != table.dim()) throw DimensionMismatch("rank_dataset: model d does not match embeddings");
  if (params.config.feature_dim != data.feature_dim) {
    throw DimensionMismatch("rank_dataset: model feature_dim does not match dataset");
  }
  kernels::FeatureList features;
  features.reserve(data.size());
  for (const auto& inst : data.instances) features.emplace_back(inst.features);
  return kernels::rank_batch(params, features, table.vectors(), exec);
}

MetricsReport evaluate(const ModelParams& params, const Dataset& test, const LabelEmbeddingTable& table,
                       std::size_t k_pred, Execution exec) {
  if (test.empty()) throw InvalidArgument("evaluate: empty test set");
  if (k_pred < 1 || k_pred > table.size()) throw InvalidArgument("evaluate: k_pred out of range");
  auto rankings = rank_dataset(params, test, table, exec);
  std::vector<std::vector<std::size_t>> predicted;
  std::vector<std::vector<std::size_t>> truth;
  predicted.reserve(test.size());
  truth.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    predicted.push_back(predict_topk(rankings[i], k_pred));
    truth.push_back(test.instances[i].positives);
  }
  return compute_metrics(predicted, truth, table.size());
}

void write_metrics_csv(const MetricsReport& report, const LabelEmbeddingTable& table, std::ostream& out) {
  auto opt = [](const std::optional<double>& v) { return v ? text::format_double(*v) : std::string(); };
  out << "scope,label,num_predicted,num_true,num_correct,precision,recall,f1\n";
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& cm = report.per_class[c];
    std::string f1;
    if (cm.precision && cm.recall) f1 = text::format_double(f1_score(*cm.precision, *cm.recall));
    out << "class," << table.name(c) << ',' << cm.predicted << ',' << cm.truth << ',' << cm.correct << ','
        << opt(cm.precision) << ',' << opt(cm.recall) << ',' << f1 << '\n';
  }
  out << "per-class,C," << report.classes_with_precision << ',' << report.classes_with_recall << ','
      << report.total_correct << ',' << text::format_double(report.class_precision) << ','
      << text::format_double(report.class_recall) << ',' << text::format_double(report.class_f1) << '\n';
  out << "overall,O," << report.total_predicted << ',' << report.total_truth << ',' << report.total_correct << ','
      << text::format_double(report.overall_precision) << ',' << text::format_double(report.overall_recall) << ','
      << text::format_double(report.overall_f1) << '\n';
}

void print_metrics_table(const MetricsReport& report, std::ostream& out) {
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %8s %8s %8s %8s %8s %8s\n", "", "C-P", "C-R", "C-F1", "O-P", "O-R", "O-F1");
  out << line;
  std::snprintf(line, sizeof(line), "%-8s %7.2f%% %7.2f%% %7.2f%% %7.2f%% %7.2f%% %7.2f%%\n", "metrics",
                100.0 * report.class_precision, 100.0 * report.class_recall, 100.0 * report.class_f1,
                100.0 * report.overall_precision, 100.0 * report.overall_recall, 100.0 * report.overall_f1);
  out << line;
  out << "classes with defined precision: " << report.classes_with_precision << " / " << report.per_class.size()
      << ", recall: " << report.classes_with_recall << " / " << report.per_class.size() << "\n";
  out << "correct " << report.total_correct << " of " << report.total_predicted << " predicted, "
      << report.total_truth << " true\n";
}

void write_prediction_line(std::ostream& out, const std::string& id, const PredictionRanking& ranking,
                           std::size_t k_pred, const LabelEmbeddingTable& table) {
  (void)predict_topk(ranking, k_pred);  // range check
  out << id << " |";
  for (std::size_t i = 0; i < k_pred; ++i) out << ' ' << table.name(ranking[i].label);
  out << " |";
  for (std::size_t i = 0; i < k_pred; ++i) out << ' ' << text::format_double(ranking[i].distance);
  out << '\n';
}

}  // namespace condlabel
