#include "condlabel/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "condlabel/analysis.hpp"
#include "condlabel/dataset.hpp"
#include "condlabel/embeddings.hpp"
#include "condlabel/error.hpp"
#include "condlabel/eval.hpp"
#include "condlabel/kernels.hpp"
#include "condlabel/manifest.hpp"
#include "condlabel/model.hpp"
#include "condlabel/text_util.hpp"
#include "condlabel/training.hpp"

namespace condlabel::cli {

namespace fs = std::filesystem;

namespace {

// Raised for semantically invalid flag values that CLI11 cannot catch.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a numeric verification does not meet its tolerance.
class ToleranceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) { return text::format_double(v); }

std::string join(const std::vector<std::size_t>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(xs[i]);
  }
  return s;
}

std::vector<std::size_t> parse_list(const std::string& value, const char* flag) {
  std::string spaced = value;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  std::vector<std::size_t> out;
  for (auto tok : text::split_ws(spaced)) {
    auto v = text::parse_int(tok);
    if (!v || *v <= 0) throw UsageError(std::string(flag) + ": '" + std::string(tok) + "' is not a positive integer");
    out.push_back(static_cast<std::size_t>(*v));
  }
  if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
  return out;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path sibling(const fs::path& path, const std::string& suffix) { return fs::path(path.string() + suffix); }

// Shared training flags; resolution order is built-in defaults (or the
// full-scale preset), then the config file, then explicit flags.
struct TrainFlags {
  std::string config_file;
  bool full_scale = false;
  double margin = 0;
  std::size_t negatives = 0;
  double lr = 0;
  double beta1 = 0;
  double beta2 = 0;
  double eps = 0;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  std::string hidden_dims;
  double decay = 0;
  double init_scale = 0;
  std::vector<std::pair<std::string, CLI::Option*>> opts;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_file, "Training config file (key = value lines)")->check(CLI::ExistingFile);
    app->add_flag("--full-scale", full_scale, "Start from the full-scale preset (k=100, lr=1e-6, 40 negatives)");
    opts = {
        {"margin", app->add_option("--margin", margin, "Hinge margin m (default 1)")},
        {"negatives", app->add_option("--negatives", negatives, "Negatives sampled per instance (default 40)")},
        {"lr", app->add_option("--lr", lr, "Adam learning rate (default 1e-3)")},
        {"beta1", app->add_option("--beta1", beta1, "Adam first-moment decay (default 0.9)")},
        {"beta2", app->add_option("--beta2", beta2, "Adam second-moment decay (default 0.999)")},
        {"eps", app->add_option("--eps", eps, "Adam epsilon (default 1e-8)")},
        {"epochs", app->add_option("--epochs", epochs, "Training epochs (default 50)")},
        {"seed", app->add_option("--seed", seed, "Master seed (default 1)")},
        {"k", app->add_option("--k", k, "Rows of the transform matrix (default 8)")},
        {"hidden_dims", app->add_option("--hidden-dims", hidden_dims, "Encoder widths, comma separated (default 64,64)")},
        {"decay", app->add_option("--decay", decay, "Per-epoch learning-rate factor (default 1 = off)")},
        {"init_scale", app->add_option("--init-scale", init_scale, "Weight init scale (default 1)")},
    };
  }

  TrainSettings resolve() const {
    TrainSettings s = full_scale ? TrainSettings::full_scale() : TrainSettings{};
    if (!config_file.empty()) apply_train_config(read_text(config_file), s, config_file);
    for (const auto& [key, opt] : opts) {
      if (opt->count() == 0) continue;
      if (key == "margin") s.loss.margin = margin;
      else if (key == "negatives") s.loss.negatives_per_instance = negatives;
      else if (key == "lr") s.adam.learning_rate = lr;
      else if (key == "beta1") s.adam.beta1 = beta1;
      else if (key == "beta2") s.adam.beta2 = beta2;
      else if (key == "eps") s.adam.epsilon = eps;
      else if (key == "epochs") s.epochs = epochs;
      else if (key == "seed") s.seed = seed;
      else if (key == "k") s.model.k = k;
      else if (key == "hidden_dims") s.model.hidden_dims = parse_list(hidden_dims, "--hidden-dims");
      else if (key == "decay") s.adam.decay = decay;
      else if (key == "init_scale") s.model.init_scale = init_scale;
    }
    try {
      s.loss.validate();
      s.adam.validate();
      if (s.model.k < 1) throw InvalidArgument("k must be positive");
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return s;
  }
};

void record_settings(RunManifest& m, const TrainSettings& s) {
  m.config["margin"] = fmt(s.loss.margin);
  m.config["negatives"] = std::to_string(s.loss.negatives_per_instance);
  m.config["epsilon_norm"] = fmt(s.loss.epsilon_norm);
  m.config["lr"] = fmt(s.adam.learning_rate);
  m.config["beta1"] = fmt(s.adam.beta1);
  m.config["beta2"] = fmt(s.adam.beta2);
  m.config["eps"] = fmt(s.adam.epsilon);
  m.config["decay"] = fmt(s.adam.decay);
  m.config["epochs"] = std::to_string(s.epochs);
  m.config["k"] = std::to_string(s.model.k);
  m.config["d"] = std::to_string(s.model.d);
  m.config["feature_dim"] = std::to_string(s.model.feature_dim);
  m.config["hidden_dims"] = join(s.model.hidden_dims);
  m.config["init_scale"] = fmt(s.model.init_scale);
  m.seed = s.seed;
}

void check_model_matches(const ModelParams& params, const LabelEmbeddingTable& table) {
  if (params.config.d != table.dim()) {
    throw DimensionMismatch("checkpoint expects d=" + std::to_string(params.config.d) + " but embeddings have d=" +
                            std::to_string(table.dim()));
  }
}

void check_topk(std::size_t topk, const LabelEmbeddingTable& table) {
  if (topk < 1 || topk > table.size()) {
    throw UsageError("--topk " + std::to_string(topk) + " outside [1, " + std::to_string(table.size()) + "]");
  }
}

// ---------------------------------------------------------------- commands

struct GenSyntheticCmd {
  SyntheticSpec spec{50, 20, 16, 2, 2600, 2, 0.0, 11};
  std::string out_dir;
  double train_fraction = 0.0;
  CLI::Option* fraction_opt = nullptr;

  void add_to(CLI::App& root) {
    auto* app = root.add_subcommand("gen-synthetic", "Generate a planted-structure synthetic dataset");
    app->footer(
        "Writes <out-dir>/embeddings.txt ('count dim' header, one 'label v1 .. vd' row per label),\n"
        "dataset.txt ('#dims f' then 'id | f1 .. ff | label ..' lines), truth.txt (planted\n"
        "transforms) and, with --train-fraction, train.txt and test.txt.");
    app->add_option("--labels", spec.num_labels, "Vocabulary size (>= 2)")->capture_default_str();
    app->add_option("--dim", spec.d, "Word-vector dimension d")->capture_default_str();
    app->add_option("--features", spec.f, "Feature dimension f")->capture_default_str();
    app->add_option("--k-star", spec.k_star, "Rows of the planted transform")->capture_default_str();
    app->add_option("--instances", spec.num_instances, "Number of instances")->capture_default_str();
    app->add_option("--positives", spec.positives_per_instance, "Positive labels per instance")->capture_default_str();
    app->add_option("--noise", spec.noise_std, "Std of noise added to planted transforms")->capture_default_str();
    app->add_option("--seed", spec.seed, "Seed")->capture_default_str();
    fraction_opt = app->add_option("--train-fraction", train_fraction, "Also write a train/test split");
    app->add_option("--out-dir", out_dir, "Output directory")->required();
  }

  int run(std::ostream& out) {
    try {
      spec.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    const bool do_split = fraction_opt->count() > 0;
    if (do_split && !(train_fraction > 0.0 && train_fraction < 1.0)) {
      throw UsageError("--train-fraction must lie in (0, 1)");
    }
    SyntheticData data = generate_synthetic(spec);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    save_embeddings(data.table, dir / "embeddings.txt");
    save_dataset(data.dataset, data.table, dir / "dataset.txt");
    save_planted_truth(data.truth, data.dataset, dir / "truth.txt");

    RunManifest m;
    m.command = "gen-synthetic";
    m.seed = spec.seed;
    m.config = {{"labels", std::to_string(spec.num_labels)},   {"dim", std::to_string(spec.d)},
                {"features", std::to_string(spec.f)},          {"k_star", std::to_string(spec.k_star)},
                {"instances", std::to_string(spec.num_instances)},
                {"positives", std::to_string(spec.positives_per_instance)},
                {"noise", fmt(spec.noise_std)}};
    m.outputs = {{"embeddings", (dir / "embeddings.txt").string()},
                 {"dataset", (dir / "dataset.txt").string()},
                 {"truth", (dir / "truth.txt").string()}};
    if (do_split) {
      auto [train_set, test_set] = split(data.dataset, train_fraction, derive_seed(spec.seed, streams::kSplit));
      save_dataset(train_set, data.table, dir / "train.txt");
      save_dataset(test_set, data.table, dir / "test.txt");
      m.config["train_fraction"] = fmt(train_fraction);
      m.outputs["train"] = (dir / "train.txt").string();
      m.outputs["test"] = (dir / "test.txt").string();
      out << "split: " << train_set.size() << " train / " << test_set.size() << " test\n";
    }
    write_manifest(m, dir / "gen-synthetic.manifest.json");
    out << "wrote " << data.dataset.size() << " instances over " << data.table.size() << " labels to " << dir.string()
        << "\n";
    return kSuccess;
  }
};

struct TrainCmd {
  std::string dataset;
  std::string embeddings;
  std::string checkpoint;
  std::string report;
  bool normalize = false;
  TrainFlags flags;

  void add_to(CLI::App& root) {
    auto* app = root.add_subcommand("train", "Train a model with the hinge rank loss");
    app->footer(
        "Config file keys: margin, negatives, lr, beta1, beta2, eps, epochs, seed, k, hidden_dims,\n"
        "decay, init_scale. Flags override the file. Writes the binary checkpoint, a report CSV\n"
        "(epoch,mean_loss,violation_rate,seconds) and <checkpoint>.manifest.json.");
    app->add_option("--dataset", dataset, "Training dataset file")->required()->check(CLI::ExistingFile);
    app->add_option("--embeddings", embeddings, "Label embedding file")->required()->check(CLI::ExistingFile);
    app->add_option("--out", checkpoint, "Checkpoint output path")->required();
    app->add_option("--report", report, "Report CSV path (default <out>.report.csv)");
    app->add_flag("--normalize-embeddings", normalize, "L2-normalize label vectors on load");
    flags.add_to(app);
  }

  int run(std::ostream& out) {
    TrainSettings settings = flags.resolve();
    const auto table = load_embeddings(embeddings, normalize);
    const auto data = load_dataset(dataset, table);
    settings.model.feature_dim = data.feature_dim;
    settings.model.d = table.dim();

    TrainResult result = train(data, table, settings);
    const fs::path ckpt(checkpoint);
    if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
    save_checkpoint(result.params, ckpt);
    const fs::path report_path = report.empty() ? sibling(ckpt, ".report.csv") : fs::path(report);
    {
      auto os = open_output(report_path);
      write_train_report_csv(result.report, settings, os);
    }

    RunManifest m;
    m.command = "train";
    record_settings(m, settings);
    m.config["normalize_embeddings"] = normalize ? "true" : "false";
    m.inputs = {{"dataset", sha256_file(dataset)}, {"embeddings", sha256_file(embeddings)}};
    if (!flags.config_file.empty()) m.inputs["config"] = sha256_file(flags.config_file);
    m.outputs = {{"checkpoint", ckpt.string()}, {"report", report_path.string()}};
    write_manifest(m, sibling(ckpt, ".manifest.json"));

    if (!result.report.epochs.empty()) {
      const auto& first = result.report.epochs.front();
      const auto& last = result.report.epochs.back();
      out << "epochs " << result.report.epochs.size() << ": loss " << fmt(first.mean_loss) << " -> "
          << fmt(last.mean_loss) << ", violation rate " << fmt(last.violation_rate) << "\n";
    }
    if (result.report.skipped_instances) {
      out << "warning: skipped " << result.report.skipped_instances << " instances whose positives cover the vocabulary\n";
    }
    out << "checkpoint written to " << ckpt.string() << "\n";
    return kSuccess;
  }
};

struct PredictCmd {
  std::string checkpoint;
  std::string embeddings;
  std::string features;
  std::string output;
  std::size_t topk = 3;
  bool normalize = false;

  void add_to(CLI::App& root) {
    auto* app = root.add_subcommand("predict", "Rank labels for feature rows");
    app->footer("Input rows: 'id | f1 .. ff' (a trailing label section is ignored).\n"
                "Output rows: 'id | label1 .. labelk | dist1 .. distk', distances ascending.");
    app->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
    app->add_option("--embeddings", embeddings, "Label embedding file")->required()->check(CLI::ExistingFile);
    app->add_option("--features", features, "Feature rows file")->required()->check(CLI::ExistingFile);
    app->add_option("--topk", topk, "Labels to report per row")->capture_default_str();
    app->add_option("--out", output, "Prediction dump path")->required();
    app->add_flag("--normalize-embeddings", normalize, "L2-normalize label vectors on load");
  }

  int run(std::ostream& out) {
    const auto table = load_embeddings(embeddings, normalize);
    check_topk(topk, table);
    const auto params = load_checkpoint(checkpoint);
    check_model_matches(params, table);
    const auto rows = load_features(features);
    kernels::FeatureList list;
    for (const auto& r : rows) {
      if (r.features.size() != params.config.feature_dim) {
        throw DimensionMismatch("row '" + r.id + "' has " + std::to_string(r.features.size()) +
                                " features, model expects " + std::to_string(params.config.feature_dim));
      }
      list.emplace_back(r.features);
    }
    const auto rankings = kernels::rank_batch(params, list, table.vectors(), Execution::kParallel);
    {
      auto os = open_output(output);
      for (std::size_t i = 0; i < rows.size(); ++i) write_prediction_line(os, rows[i].id, rankings[i], topk, table);
    }
    RunManifest m;
    m.command = "predict";
    m.config = {{"topk", std::to_string(topk)}, {"normalize_embeddings", normalize ? "true" : "false"}};
    m.inputs = {{"checkpoint", sha256_file(checkpoint)},
                {"embeddings", sha256_file(embeddings)},
                {"features", sha256_file(features)}};
    m.outputs = {{"predictions", output}};
    write_manifest(m, sibling(output, ".manifest.json"));
    out << "wrote " << rows.size() << " predictions to " << output << "\n";
    return kSuccess;
  }
};

struct EvaluateCmd {
  std::string checkpoint;
  std::string dataset;
  std::string embeddings;
  std::string output;
  std::string predictions;
  std::size_t topk = 3;
  bool normalize = false;

  void add_to(CLI::App& root) {
    auto* app = root.add_subcommand("evaluate", "Compute C-P/C-R/O-P/O-R and F1 on a labelled dataset");
    app->footer("CSV columns: scope,label,num_predicted,num_true,num_correct,precision,recall,f1.\n"
                "One 'class' row per label, then 'per-class' (C-*) and 'overall' (O-*) summary rows.");
    app->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
    app->add_option("--dataset", dataset, "Test dataset file")->required()->check(CLI::ExistingFile);
    app->add_option("--embeddings", embeddings, "Label embedding file")->required()->check(CLI::ExistingFile);
    app->add_option("--topk", topk, "Predicted labels per image")->capture_default_str();
    app->add_option("--out", output, "Metrics CSV path")->required();
    app->add_option("--predictions", predictions, "Also write a prediction dump");
    app->add_flag("--normalize-embeddings", normalize, "L2-normalize label vectors on load");
  }

  int run(std::ostream& out) {
    const auto table = load_embeddings(embeddings, normalize);
    check_topk(topk, table);
    const auto params = load_checkpoint(checkpoint);
    check_model_matches(params, table);
    const auto test = load_dataset(dataset, table);
    if (test.feature_dim != params.config.feature_dim) {
      throw DimensionMismatch("dataset has " + std::to_string(test.feature_dim) + " features, model expects " +
                              std::to_string(params.config.feature_dim));
    }
    if (test.empty()) throw DimensionMismatch("test dataset is empty");

    const auto rankings = rank_dataset(params, test, table);
    std::vector<std::vector<std::size_t>> predicted;
    std::vector<std::vector<std::size_t>> truth;
    for (std::size_t i = 0; i < test.size(); ++i) {
      predicted.push_back(predict_topk(rankings[i], topk));
      truth.push_back(test.instances[i].positives);
    }
    const MetricsReport report = compute_metrics(predicted, truth, table.size());
    {
      auto os = open_output(output);
      write_metrics_csv(report, table, os);
    }
    RunManifest m;
    m.command = "evaluate";
    m.config = {{"topk", std::to_string(topk)}, {"normalize_embeddings", normalize ? "true" : "false"}};
    m.inputs = {{"checkpoint", sha256_file(checkpoint)},
                {"dataset", sha256_file(dataset)},
                {"embeddings", sha256_file(embeddings)}};
    m.outputs = {{"metrics", output}};
    if (!predictions.empty()) {
      auto os = open_output(predictions);
      for (std::size_t i = 0; i < test.size(); ++i) {
        write_prediction_line(os, test.instances[i].id, rankings[i], topk, table);
      }
      m.outputs["predictions"] = predictions;
    }
    write_manifest(m, sibling(output, ".manifest.json"));
    print_metrics_table(report, out);
    return kSuccess;
  }
};

struct AnalyzeCmd {
  std::string checkpoint;
  std::string embeddings;
  std::string dataset;
  std::string out_dir;
  std::string vote_n = "1,3,5";
  std::size_t jaccard_n = 5;
  std::size_t topk = 3;
  bool normalize = false;

  void add_to(CLI::App& root) {
    auto* app = root.add_subcommand("analyze", "Committee analysis of the transform rows");
    app->footer("Writes committee.csv (voting vs full metrics), jaccard.csv (per-image mean pairwise\n"
                "Jaccard of row top-N sets) and jaccard_hist.txt ('bin_center count', 20 bins on [0,1]).");
    app->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
    app->add_option("--embeddings", embeddings, "Label embedding file")->required()->check(CLI::ExistingFile);
    app->add_option("--dataset", dataset, "Test dataset file")->required()->check(CLI::ExistingFile);
    app->add_option("--vote-n", vote_n, "Per-row top-N values for voting, comma separated")->capture_default_str();
    app->add_option("--jaccard-n", jaccard_n, "Per-row top-N for Jaccard statistics")->capture_default_str();
    app->add_option("--topk", topk, "Predicted labels per image")->capture_default_str();
    app->add_option("--out-dir", out_dir, "Output directory")->required();
    app->add_flag("--normalize-embeddings", normalize, "L2-normalize label vectors on load");
  }

  int run(std::ostream& out) {
    const auto ns = parse_list(vote_n, "--vote-n");
    const auto table = load_embeddings(embeddings, normalize);
    check_topk(topk, table);
    for (std::size_t n : ns) {
      if (n > table.size()) throw UsageError("--vote-n value exceeds vocabulary size");
    }
    if (jaccard_n < 1 || jaccard_n > table.size()) throw UsageError("--jaccard-n outside [1, |V|]");
    const auto params = load_checkpoint(checkpoint);
    check_model_matches(params, table);
    const auto test = load_dataset(dataset, table);
    if (test.feature_dim != params.config.feature_dim) throw DimensionMismatch("dataset feature dimension mismatch");
    if (test.empty()) throw DimensionMismatch("test dataset is empty");

    const CommitteeStudy study = study_committee(params, test, table, ns, topk, jaccard_n);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    {
      auto os = open_output(dir / "committee.csv");
      write_committee_csv(study, os);
    }
    RunManifest m;
    m.command = "analyze";
    m.config = {{"vote_n", join(ns)},
                {"jaccard_n", std::to_string(jaccard_n)},
                {"topk", std::to_string(topk)},
                {"normalize_embeddings", normalize ? "true" : "false"}};
    m.inputs = {{"checkpoint", sha256_file(checkpoint)},
                {"dataset", sha256_file(dataset)},
                {"embeddings", sha256_file(embeddings)}};
    m.outputs = {{"committee", (dir / "committee.csv").string()}};
    if (params.config.k >= 2) {
      auto js = open_output(dir / "jaccard.csv");
      write_jaccard_csv(study, test, js);
      auto hs = open_output(dir / "jaccard_hist.txt");
      write_histogram(study.jaccard_histogram, hs);
      m.outputs["jaccard"] = (dir / "jaccard.csv").string();
      m.outputs["histogram"] = (dir / "jaccard_hist.txt").string();
    }
    write_manifest(m, dir / "analyze.manifest.json");

    char line[128];
    out << "method      O-P      O-R      C-P      C-R\n";
    for (const auto& v : study.voting) {
      std::snprintf(line, sizeof(line), "vote N=%-3zu %7.2f%% %7.2f%% %7.2f%% %7.2f%%\n", v.top_n,
                    100 * v.metrics.overall_precision, 100 * v.metrics.overall_recall,
                    100 * v.metrics.class_precision, 100 * v.metrics.class_recall);
      out << line;
    }
    std::snprintf(line, sizeof(line), "full       %7.2f%% %7.2f%% %7.2f%% %7.2f%%\n", 100 * study.full.overall_precision,
                  100 * study.full.overall_recall, 100 * study.full.class_precision, 100 * study.full.class_recall);
    out << line;
    if (params.config.k >= 2) {
      out << "row top-" << jaccard_n << " Jaccard: mean " << fmt(study.jaccard_mean) << ", std "
          << fmt(study.jaccard_std) << "\n";
    } else {
      out << "k = 1: Jaccard statistics need at least two rows, skipped\n";
    }
    return kSuccess;
  }
};

struct SweepCmd {
  std::string dataset;
  std::string test;
  std::string embeddings;
  std::string output;
  std::string k_list = "2,4,8,16";
  double train_fraction = 0.8;
  std::size_t topk = 3;
  bool parallel = false;
  bool normalize = false;
  TrainFlags flags;

  void add_to(CLI::App& root) {
    auto* app = root.add_subcommand("sweep-k", "Train and evaluate one model per transform size k");
    app->footer("CSV columns: k,C-P,C-R,C-F1,O-P,O-R,O-F1,final_loss. Every run shares the seed\n"
                "and budget; only k changes.");
    app->add_option("--dataset", dataset, "Training dataset (split if --test is absent)")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--test", test, "Test dataset")->check(CLI::ExistingFile);
    app->add_option("--train-fraction", train_fraction, "Split fraction when --test is absent")->capture_default_str();
    app->add_option("--embeddings", embeddings, "Label embedding file")->required()->check(CLI::ExistingFile);
    app->add_option("--k-list", k_list, "Comma-separated k values")->capture_default_str();
    app->add_option("--topk", topk, "Predicted labels per image")->capture_default_str();
    app->add_option("--out", output, "Sweep CSV path")->required();
    app->add_flag("--parallel", parallel, "Train the k values concurrently (same results)");
    app->add_flag("--normalize-embeddings", normalize, "L2-normalize label vectors on load");
    flags.add_to(app);
  }

  int run(std::ostream& out) {
    const auto ks = parse_list(k_list, "--k-list");
    TrainSettings settings = flags.resolve();
    const auto table = load_embeddings(embeddings, normalize);
    check_topk(topk, table);
    auto data = load_dataset(dataset, table);
    Dataset train_set;
    Dataset test_set;
    if (!test.empty()) {
      train_set = std::move(data);
      test_set = load_dataset(test, table);
    } else {
      try {
        std::tie(train_set, test_set) = split(data, train_fraction, derive_seed(settings.seed, streams::kSplit));
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
    }
    if (test_set.feature_dim != train_set.feature_dim) throw DimensionMismatch("train/test feature dimensions differ");
    settings.model.feature_dim = train_set.feature_dim;
    settings.model.d = table.dim();

    const auto rows = sweep_k(train_set, test_set, table, ks, settings, topk, parallel);
    {
      auto os = open_output(output);
      write_sweep_csv(rows, os);
    }
    RunManifest m;
    m.command = "sweep-k";
    record_settings(m, settings);
    m.config["k_list"] = join(ks);
    m.config["topk"] = std::to_string(topk);
    m.config["normalize_embeddings"] = normalize ? "true" : "false";
    m.inputs = {{"dataset", sha256_file(dataset)}, {"embeddings", sha256_file(embeddings)}};
    if (!test.empty()) m.inputs["test"] = sha256_file(test);
    else m.config["train_fraction"] = fmt(train_fraction);
    if (!flags.config_file.empty()) m.inputs["config"] = sha256_file(flags.config_file);
    m.outputs = {{"sweep", output}};
    write_manifest(m, sibling(output, ".manifest.json"));

    double lo = 1.0;
    double hi = 0.0;
    for (const auto& r : rows) {
      out << "k=" << r.k << " O-F1=" << fmt(r.metrics.overall_f1) << " C-F1=" << fmt(r.metrics.class_f1) << "\n";
      lo = std::min(lo, r.metrics.overall_f1);
      hi = std::max(hi, r.metrics.overall_f1);
    }
    out << "O-F1 spread: " << fmt(100.0 * (hi - lo)) << " points\n";
    return kSuccess;
  }
};

struct GradCheckCmd {
  std::size_t trials = 100;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 1;
  std::string manifest;

  void add_to(CLI::App& root) {
    auto* app = root.add_subcommand("grad-check", "Compare analytic gradients with central finite differences");
    app->footer("Exit status 0 when the worst relative error is within --tolerance, 4 otherwise.\n"
                "The run manifest goes to --manifest, or to standard output.");
    app->add_option("--trials", trials, "Random (config, instance) draws")->capture_default_str();
    app->add_option("--step", step, "Finite-difference step h")->capture_default_str();
    app->add_option("--tolerance", tolerance, "Maximum allowed relative error")->capture_default_str();
    app->add_option("--seed", seed, "Seed")->capture_default_str();
    app->add_option("--manifest", manifest, "Manifest output path");
  }

  int run(std::ostream& out) {
    if (trials < 1) throw UsageError("--trials must be at least 1");
    if (!(step > 0.0) || step > 0.1) throw UsageError("--step must lie in (0, 0.1]");
    if (!(tolerance > 0.0)) throw UsageError("--tolerance must be positive");

    const GradCheckSummary summary = run_grad_check(trials, step, seed);
    RunManifest m;
    m.command = "grad-check";
    m.seed = seed;
    m.config = {{"trials", std::to_string(trials)}, {"step", fmt(step)}, {"tolerance", fmt(tolerance)}};
    if (!manifest.empty()) {
      m.outputs = {{"manifest", manifest}};
      write_manifest(m, manifest);
    }
    out << "trials " << summary.trials << ", coordinates checked " << summary.checked << ", skipped at kinks "
        << summary.skipped << "\n";
    out << "max relative error " << fmt(summary.max_relative_error) << " (tolerance " << fmt(tolerance) << ")\n";
    if (manifest.empty()) out << format_manifest(m);
    if (!(summary.max_relative_error <= tolerance)) {
      throw ToleranceFailure("max relative error " + fmt(summary.max_relative_error) + " exceeds tolerance " +
                             fmt(tolerance));
    }
    return kSuccess;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image-conditioned label-space transformation for multilabel classification", "condlabel"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads for batch kernels (outputs do not depend on it)");
  app.set_version_flag("--version", kToolVersion);

  GenSyntheticCmd gen;
  TrainCmd train_cmd;
  PredictCmd predict;
  EvaluateCmd evaluate_cmd;
  AnalyzeCmd analyze;
  SweepCmd sweep;
  GradCheckCmd grad;
  gen.add_to(app);
  train_cmd.add_to(app);
  predict.add_to(app);
  evaluate_cmd.add_to(app);
  analyze.add_to(app);
  sweep.add_to(app);
  grad.add_to(app);

  std::vector<std::string> reversed(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  set_num_threads(threads);
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "gen-synthetic") return gen.run(out);
    if (name == "train") return train_cmd.run(out);
    if (name == "predict") return predict.run(out);
    if (name == "evaluate") return evaluate_cmd.run(out);
    if (name == "analyze") return analyze.run(out);
    if (name == "sweep-k") return sweep.run(out);
    if (name == "grad-check") return grad.run(out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ToleranceFailure& e) {
    err << "tolerance failure: " << e.what() << "\n";
    return kToleranceFailure;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const NotFound& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const DimensionMismatch& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const IoError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const InvalidArgument& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  err << "unknown command '" << name << "'\n";
  return kUsageError;
}

}  // namespace condlabel::cli
