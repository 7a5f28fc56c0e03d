#include "condlabel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "condlabel/error.hpp"
#include "condlabel/text_util.hpp"

namespace condlabel {

namespace {

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string("cannot open ") + what + " '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content, const char* what) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(std::string("cannot write ") + what + " '" + path.string() + "'");
  out << content;
}

// Calls fn(line_no, line) for every line; handles a final line without '\n'.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    fn(++line_no, text.substr(pos, end - pos));
    pos = end + 1;
  }
}

// Returns the declared dimension for a "#dims f" comment, if it is one.
std::optional<std::size_t> dims_directive(std::string_view line, const std::string& source, std::size_t line_no) {
  auto tokens = text::split_ws(line);
  if (tokens.empty() || tokens[0] != "#dims") return std::nullopt;
  std::optional<long long> v;
  if (tokens.size() == 2) v = text::parse_int(tokens[1]);
  if (!v || *v <= 0) throw ParseError(source, line_no, "malformed '#dims f' header");
  return static_cast<std::size_t>(*v);
}

Vector parse_feature_section(std::string_view section, const std::string& source, std::size_t line_no) {
  Vector features;
  for (auto tok : text::split_ws(section)) {
    auto v = text::parse_double(tok);
    if (!v) throw ParseError(source, line_no, "bad feature value '" + std::string(tok) + "'");
    if (!std::isfinite(*v)) throw ParseError(source, line_no, "non-finite feature value");
    features.push_back(*v);
  }
  return features;
}

}  // namespace

void Dataset::validate() const {
  for (const auto& inst : instances) {
    if (inst.features.size() != feature_dim) {
      throw InvalidArgument("instance '" + inst.id + "' has " + std::to_string(inst.features.size()) +
                            " features, dataset declares " + std::to_string(feature_dim));
    }
    if (!all_finite(inst.features)) throw InvalidArgument("instance '" + inst.id + "' has non-finite features");
    if (inst.positives.empty()) throw InvalidArgument("instance '" + inst.id + "' has no positive labels");
    for (std::size_t p : inst.positives) {
      if (p >= vocab_size) throw InvalidArgument("instance '" + inst.id + "' has out-of-range label index");
    }
  }
}

Dataset parse_dataset(std::string_view text, const LabelEmbeddingTable& table, const std::string& source) {
  Dataset ds;
  ds.vocab_size = table.size();
  std::optional<std::size_t> dim;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto body = text::trim(line);
    if (body.empty()) return;
    if (body.front() == '#') {
      if (auto d = dims_directive(body, source, line_no)) {
        if (!ds.instances.empty() && *d != *dim) {
          throw ParseError(source, line_no, "'#dims' conflicts with earlier instances");
        }
        dim = *d;
      }
      return;
    }
    auto sections = text::split_on(body, '|');
    if (sections.size() != 3) throw ParseError(source, line_no, "expected 'id | features | labels'");
    auto id = text::trim(sections[0]);
    if (id.empty() || text::split_ws(id).size() != 1) throw ParseError(source, line_no, "missing or invalid id");

    Instance inst;
    inst.id = std::string(id);
    inst.features = parse_feature_section(sections[1], source, line_no);
    if (!dim) dim = inst.features.size();
    if (inst.features.size() != *dim) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(*dim) + " features, found " + std::to_string(inst.features.size()));
    }
    for (auto name : text::split_ws(sections[2])) {
      auto idx = table.index_of(name);
      if (!idx) throw ParseError(source, line_no, "unknown label '" + std::string(name) + "'");
      inst.positives.push_back(*idx);
    }
    if (inst.positives.empty()) throw ParseError(source, line_no, "empty positive label set");
    std::sort(inst.positives.begin(), inst.positives.end());
    inst.positives.erase(std::unique(inst.positives.begin(), inst.positives.end()), inst.positives.end());
    ds.instances.push_back(std::move(inst));
  });

  if (!dim || *dim == 0) throw ParseError(source, 0, "no feature dimension declared and no instances found");
  ds.feature_dim = *dim;
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const LabelEmbeddingTable& table) {
  return parse_dataset(read_file(path, "dataset file"), table, path.string());
}

std::string format_dataset(const Dataset& dataset, const LabelEmbeddingTable& table) {
  std::string out = "#dims " + std::to_string(dataset.feature_dim) + "\n";
  for (const auto& inst : dataset.instances) {
    out += inst.id;
    out += " |";
    for (double v : inst.features) {
      out += ' ';
      out += text::format_double(v);
    }
    out += " |";
    for (std::size_t p : inst.positives) {
      out += ' ';
      out += table.name(p);
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& dataset, const LabelEmbeddingTable& table, const std::filesystem::path& path) {
  write_file(path, format_dataset(dataset, table), "dataset file");
}

std::vector<FeatureRow> parse_features(std::string_view text, const std::string& source) {
  std::vector<FeatureRow> rows;
  std::optional<std::size_t> dim;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto body = text::trim(line);
    if (body.empty()) return;
    if (body.front() == '#') {
      if (auto d = dims_directive(body, source, line_no)) dim = *d;
      return;
    }
    auto sections = text::split_on(body, '|');
    if (sections.size() != 2 && sections.size() != 3) {
      throw ParseError(source, line_no, "expected 'id | features' or 'id | features | labels'");
    }
    auto id = text::trim(sections[0]);
    if (id.empty() || text::split_ws(id).size() != 1) throw ParseError(source, line_no, "missing or invalid id");
    FeatureRow row{std::string(id), parse_feature_section(sections[1], source, line_no)};
    if (!dim) dim = row.features.size();
    if (row.features.size() != *dim) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(*dim) + " features, found " + std::to_string(row.features.size()));
    }
    rows.push_back(std::move(row));
  });
  return rows;
}

std::vector<FeatureRow> load_features(const std::filesystem::path& path) {
  return parse_features(read_file(path, "features file"), path.string());
}

std::vector<std::size_t> sample_negatives(const Instance& instance, std::size_t vocab_size, std::size_t count,
                                          Rng& rng) {
  if (count == 0) throw InvalidArgument("sample_negatives: count must be at least 1");
  std::vector<std::size_t> pool;
  pool.reserve(vocab_size);
  std::size_t next_pos = 0;
  for (std::size_t label = 0; label < vocab_size; ++label) {
    while (next_pos < instance.positives.size() && instance.positives[next_pos] < label) ++next_pos;
    if (next_pos < instance.positives.size() && instance.positives[next_pos] == label) continue;
    pool.push_back(label);
  }
  if (pool.empty()) {
    throw InvalidArgument("sample_negatives: positives of '" + instance.id + "' cover the whole vocabulary");
  }
  const std::size_t take = std::min(count, pool.size());
  // Partial Fisher-Yates: the first `take` slots become a uniform sample.
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  return pool;
}

void SyntheticSpec::validate() const {
  if (num_labels < 2) throw InvalidArgument("SyntheticSpec: num_labels must be at least 2");
  if (d < 1 || f < 1 || k_star < 1) throw InvalidArgument("SyntheticSpec: d, f and k_star must be positive");
  if (num_instances < 1) throw InvalidArgument("SyntheticSpec: num_instances must be positive");
  if (positives_per_instance < 1 || positives_per_instance >= num_labels) {
    throw InvalidArgument("SyntheticSpec: positives_per_instance must be in [1, num_labels)");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw InvalidArgument("SyntheticSpec: noise_std must be >= 0");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  LabelEmbeddingTable table = random_embeddings(spec.num_labels, spec.d, derive_seed(spec.seed, "synthesis.labels"));

  Rng rng = make_stream(spec.seed, streams::kSynthesis);
  std::normal_distribution<double> normal(0.0, 1.0);

  PlantedTruth truth;
  truth.k_star = spec.k_star;
  truth.d = spec.d;
  truth.generator = Matrix(spec.k_star * spec.d, spec.f);
  const double gen_scale = 1.0 / std::sqrt(static_cast<double>(spec.f));
  for (double& g : truth.generator.data) g = normal(rng) * gen_scale;

  Dataset ds;
  ds.feature_dim = spec.f;
  ds.vocab_size = spec.num_labels;
  ds.instances.reserve(spec.num_instances);
  truth.transforms.reserve(spec.num_instances);

  std::vector<std::pair<double, std::size_t>> scored(spec.num_labels);
  for (std::size_t n = 0; n < spec.num_instances; ++n) {
    Instance inst;
    inst.id = "img" + std::to_string(n);
    inst.features.resize(spec.f);
    for (double& x : inst.features) x = normal(rng);

    Matrix planted(spec.k_star, spec.d);
    for (std::size_t o = 0; o < planted.data.size(); ++o) {
      planted.data[o] = dot(truth.generator.row(o), inst.features);
    }
    if (spec.noise_std > 0.0) {
      for (double& a : planted.data) a += spec.noise_std * normal(rng);
    }

    for (std::size_t label = 0; label < spec.num_labels; ++label) {
      auto w = table.vectors().row(label);
      double sq = 0.0;
      for (std::size_t r = 0; r < spec.k_star; ++r) {
        double proj = dot(planted.row(r), w);
        sq += proj * proj;
      }
      scored[label] = {sq, label};
    }
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(spec.positives_per_instance),
                      scored.end());
    for (std::size_t i = 0; i < spec.positives_per_instance; ++i) inst.positives.push_back(scored[i].second);
    std::sort(inst.positives.begin(), inst.positives.end());

    ds.instances.push_back(std::move(inst));
    truth.transforms.push_back(std::move(planted));
  }
  return {std::move(ds), std::move(table), std::move(truth)};
}

void save_planted_truth(const PlantedTruth& truth, const Dataset& dataset, const std::filesystem::path& path) {
  std::string out = "#planted " + std::to_string(truth.k_star) + " " + std::to_string(truth.d) + "\n";
  out += "#generator " + std::to_string(truth.generator.rows) + " " + std::to_string(truth.generator.cols) + " |";
  for (double g : truth.generator.data) {
    out += ' ';
    out += text::format_double(g);
  }
  out += '\n';
  for (std::size_t i = 0; i < truth.transforms.size(); ++i) {
    out += dataset.instances.at(i).id;
    out += " |";
    for (double a : truth.transforms[i].data) {
      out += ' ';
      out += text::format_double(a);
    }
    out += '\n';
  }
  write_file(path, out, "planted truth file");
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("split: train_fraction must lie in (0, 1)");
  }
  const std::size_t n = dataset.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) {
    throw InvalidArgument("split: fraction " + std::to_string(train_fraction) + " of " + std::to_string(n) +
                          " instances leaves one side empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Dataset train{{}, dataset.feature_dim, dataset.vocab_size};
  Dataset test{{}, dataset.feature_dim, dataset.vocab_size};
  train.instances.reserve(n_train);
  test.instances.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? train : test).instances.push_back(dataset.instances[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace condlabel
