#pragma once

// Committee reading of the transform: row r of A is a classifier that scores
// label w by (a_r . w)^2, its additive share of ||A w||^2.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "condlabel/dataset.hpp"
#include "condlabel/embeddings.hpp"
#include "condlabel/eval.hpp"
#include "condlabel/model.hpp"
#include "condlabel/training.hpp"

namespace condlabel {

/// Labels ascending by (a_row . w)^2, index tie-break. The reported distance
/// is |a_row . w|.
PredictionRanking row_classifier_ranking(const TransformMatrix& a, const LabelEmbeddingTable& table, std::size_t row);

struct CommitteeResult {
  std::vector<std::vector<std::size_t>> row_top;  // top-N labels of each row
  std::vector<std::size_t> votes;                 // per label, <= k
  std::vector<double> mean_rank;                  // per label, 0-based position averaged over rows
  std::vector<std::size_t> prediction;            // top k_pred after aggregation
};

/// Each row votes for its top-N labels; labels are ordered by descending
/// votes, then lower mean rank across rows, then index.
CommitteeResult committee_vote(const TransformMatrix& a, const LabelEmbeddingTable& table, std::size_t top_n,
                               std::size_t k_pred);

struct JaccardResult {
  double average = 0.0;
  std::vector<double> pairs;  // (0,1), (0,2), ..., (k-2,k-1)
};

/// Jaccard coefficient of the rows' top-N sets over all k-choose-2 pairs.
/// Requires k >= 2.
JaccardResult committee_jaccard(const TransformMatrix& a, const LabelEmbeddingTable& table, std::size_t top_n);

double jaccard(std::vector<std::size_t> a, std::vector<std::size_t> b);

struct Histogram {
  std::vector<double> centers;
  std::vector<std::size_t> counts;
};

/// Uniform bins over [0, 1]; 1.0 falls into the last bin.
Histogram unit_histogram(const std::vector<double>& values, std::size_t bins = 20);
void write_histogram(const Histogram& hist, std::ostream& out);

struct VotingMetrics {
  std::size_t top_n = 0;
  MetricsReport metrics;
};

/// Test-set committee analysis: voting metrics for each N, the full-distance
/// metrics, and the per-image average pairwise Jaccard of the rows.
struct CommitteeStudy {
  std::vector<VotingMetrics> voting;
  MetricsReport full;
  std::vector<double> image_jaccard;  // empty when k < 2
  double jaccard_mean = 0.0;
  double jaccard_std = 0.0;  // population standard deviation
  Histogram jaccard_histogram;
};

CommitteeStudy study_committee(const ModelParams& params, const Dataset& test, const LabelEmbeddingTable& table,
                               const std::vector<std::size_t>& vote_ns, std::size_t k_pred, std::size_t jaccard_n,
                               Execution exec = Execution::kParallel);

/// CSV: method,N,C-P,C-R,C-F1,O-P,O-R,O-F1 (voting rows, then "full").
void write_committee_csv(const CommitteeStudy& study, std::ostream& out);
/// CSV: id,mean_jaccard.
void write_jaccard_csv(const CommitteeStudy& study, const Dataset& test, std::ostream& out);

struct SweepRow {
  std::size_t k = 0;
  MetricsReport metrics;
  double final_loss = 0.0;
};

/// Trains one model per k with otherwise identical settings (same seed and
/// epoch budget) and evaluates each at k_pred. With `parallel`, runs train
/// concurrently; results do not depend on it.
std::vector<SweepRow> sweep_k(const Dataset& train_set, const Dataset& test_set, const LabelEmbeddingTable& table,
                              const std::vector<std::size_t>& k_values, const TrainSettings& base,
                              std::size_t k_pred, bool parallel = false);

/// CSV: k,C-P,C-R,C-F1,O-P,O-R,O-F1,final_loss.
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace condlabel
