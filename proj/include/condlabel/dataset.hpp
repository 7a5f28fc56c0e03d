#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "condlabel/embeddings.hpp"
#include "condlabel/matrix.hpp"
#include "condlabel/rng.hpp"

namespace condlabel {

/// One multilabel example: an input feature vector and its relevant labels.
/// `positives` is kept sorted and duplicate-free.
struct Instance {
  std::string id;
  Vector features;
  std::vector<std::size_t> positives;

  bool operator==(const Instance&) const = default;
};

struct Dataset {
  std::vector<Instance> instances;
  std::size_t feature_dim = 0;
  std::size_t vocab_size = 0;

  std::size_t size() const noexcept { return instances.size(); }
  bool empty() const noexcept { return instances.empty(); }

  /// Throws InvalidArgument on the first violated invariant: shared feature
  /// dimension, finite features, non-empty in-range positives.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

/// Parses "id | f1 ... ff | label1 label2 ..." lines. '#' starts a comment
/// line; "#dims f" declares the feature dimension (otherwise inferred from
/// the first instance). Errors carry the line number.
Dataset load_dataset(const std::filesystem::path& path, const LabelEmbeddingTable& table);
Dataset parse_dataset(std::string_view text, const LabelEmbeddingTable& table,
                      const std::string& source = "<memory>");

void save_dataset(const Dataset& dataset, const LabelEmbeddingTable& table, const std::filesystem::path& path);
std::string format_dataset(const Dataset& dataset, const LabelEmbeddingTable& table);

/// Feature rows for inference: same line format, the label section is
/// optional and ignored.
struct FeatureRow {
  std::string id;
  Vector features;
};
std::vector<FeatureRow> load_features(const std::filesystem::path& path);
std::vector<FeatureRow> parse_features(std::string_view text, const std::string& source = "<memory>");

/// Uniform sample without replacement from the complement of the instance's
/// positives. Returns min(count, |V| - |positives|) sorted indices. Throws
/// InvalidArgument when the positives cover the whole vocabulary or count == 0.
std::vector<std::size_t> sample_negatives(const Instance& instance, std::size_t vocab_size, std::size_t count,
                                          Rng& rng);

struct SyntheticSpec {
  std::size_t num_labels = 50;
  std::size_t d = 20;
  std::size_t f = 16;
  std::size_t k_star = 2;
  std::size_t num_instances = 2000;
  std::size_t positives_per_instance = 2;
  double noise_std = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Hidden structure behind a synthetic dataset. Instance i's planted
/// transform is reshape(generator * features_i + noise_i) into k_star x d.
struct PlantedTruth {
  std::size_t k_star = 0;
  std::size_t d = 0;
  Matrix generator;                  // (k_star*d) x f
  std::vector<Matrix> transforms;    // one k_star x d matrix per instance

  bool operator==(const PlantedTruth&) const = default;
};

struct SyntheticData {
  Dataset dataset;
  LabelEmbeddingTable table;
  PlantedTruth truth;
};

/// Random unit label vectors, standard-normal features, and for each instance
/// the positives_per_instance labels with the smallest ||A* w||_2 under its
/// planted transform (ties by lower index). Deterministic given spec.seed.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

void save_planted_truth(const PlantedTruth& truth, const Dataset& dataset, const std::filesystem::path& path);

/// Seeded shuffle, then the first round(fraction * n) instances form the
/// training side. Throws InvalidArgument if either side would be empty.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

}  // namespace condlabel
