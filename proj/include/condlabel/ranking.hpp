#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace condlabel {

struct RankedLabel {
  std::size_t label = 0;
  double distance = 0.0;

  bool operator==(const RankedLabel&) const = default;
};

/// Every vocabulary label once, ascending by distance, ties by label index.
using PredictionRanking = std::vector<RankedLabel>;

/// Orders labels by the given scores (ascending, index tie-break) and reports
/// sqrt(score) as the distance. Sorting on the squared value keeps the order
/// identical to any other ranking built from the same squared scores.
PredictionRanking rank_by_squared_scores(std::span<const double> squared);

/// Orders labels by raw scores, reported as-is.
PredictionRanking rank_by_scores(std::span<const double> scores);

/// Label indices of the first k_pred entries. Throws InvalidArgument unless
/// 1 <= k_pred <= ranking.size().
std::vector<std::size_t> predict_topk(const PredictionRanking& ranking, std::size_t k_pred);

}  // namespace condlabel
