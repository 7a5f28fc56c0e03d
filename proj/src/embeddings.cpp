#include "condlabel/embeddings.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "condlabel/error.hpp"
#include "condlabel/rng.hpp"
#include "condlabel/text_util.hpp"

namespace condlabel {

namespace {

bool has_whitespace(std::string_view s) {
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return true;
  }
  return false;
}

}  // namespace

LabelEmbeddingTable::LabelEmbeddingTable(std::vector<std::string> labels, Matrix vectors)
    : labels_(std::move(labels)), vectors_(std::move(vectors)) {
  if (labels_.size() < 2) throw InvalidArgument("embedding table needs at least 2 labels");
  if (vectors_.rows != labels_.size()) {
    throw InvalidArgument("embedding table has " + std::to_string(labels_.size()) + " labels but " +
                          std::to_string(vectors_.rows) + " vectors");
  }
  if (vectors_.cols == 0) throw InvalidArgument("embedding dimension must be positive");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto& name = labels_[i];
    if (name.empty() || has_whitespace(name)) {
      throw InvalidArgument("invalid label name '" + name + "'");
    }
    if (!index_.emplace(name, i).second) throw InvalidArgument("duplicate label '" + name + "'");
    if (!all_finite(vectors_.row(i))) {
      throw InvalidArgument("non-finite component in vector of '" + name + "'");
    }
  }
}

const std::string& LabelEmbeddingTable::name(std::size_t index) const {
  if (index >= labels_.size()) throw NotFound("label index " + std::to_string(index) + " out of range");
  return labels_[index];
}

std::optional<std::size_t> LabelEmbeddingTable::index_of(std::string_view label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> LabelEmbeddingTable::lookup(std::string_view label) const {
  auto idx = index_of(label);
  if (!idx) throw NotFound("unknown label '" + std::string(label) + "'");
  return vectors_.row(*idx);
}

std::span<const double> LabelEmbeddingTable::lookup(std::size_t index) const {
  if (index >= labels_.size()) throw NotFound("label index " + std::to_string(index) + " out of range");
  return vectors_.row(index);
}

LabelEmbeddingTable LabelEmbeddingTable::normalized() const {
  Matrix out = vectors_;
  for (std::size_t i = 0; i < out.rows; ++i) {
    auto row = out.row(i);
    double n = l2_norm(row);
    if (n > 0.0) {
      for (double& x : row) x /= n;
    }
  }
  return LabelEmbeddingTable(labels_, std::move(out));
}

LabelEmbeddingTable parse_embeddings(std::string_view text, const std::string& source, bool normalize) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    return true;
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError(source, 0, "empty file, expected '<vocab_size> <dim>' header");
  auto header = text::split_ws(line);
  if (header.size() != 2) throw ParseError(source, line_no, "malformed header, expected '<vocab_size> <dim>'");
  auto count = text::parse_int(header[0]);
  auto dim = text::parse_int(header[1]);
  if (!count || !dim || *count < 0 || *dim <= 0) {
    throw ParseError(source, line_no, "malformed header, expected '<vocab_size> <dim>'");
  }

  const auto n = static_cast<std::size_t>(*count);
  const auto d = static_cast<std::size_t>(*dim);
  std::vector<std::string> labels;
  labels.reserve(n);
  Matrix vectors(n, d);
  std::map<std::string, std::size_t, std::less<>> seen;

  for (std::size_t i = 0; i < n; ++i) {
    if (!next_line(line)) {
      throw ParseError(source, line_no, "expected " + std::to_string(n) + " vectors, found " + std::to_string(i));
    }
    auto tokens = text::split_ws(line);
    if (tokens.empty()) throw ParseError(source, line_no, "blank line inside vector block");
    if (tokens.size() - 1 != d) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(d) + " components, found " + std::to_string(tokens.size() - 1));
    }
    std::string name(tokens[0]);
    if (!seen.emplace(name, line_no).second) throw ParseError(source, line_no, "duplicate label '" + name + "'");
    auto row = vectors.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      auto v = text::parse_double(tokens[j + 1]);
      if (!v) throw ParseError(source, line_no, "bad number '" + std::string(tokens[j + 1]) + "'");
      if (!std::isfinite(*v)) throw ParseError(source, line_no, "non-finite component for '" + name + "'");
      row[j] = *v;
    }
    labels.push_back(std::move(name));
  }
  while (next_line(line)) {
    if (!text::trim(line).empty()) throw ParseError(source, line_no, "unexpected content after declared vectors");
  }

  try {
    LabelEmbeddingTable table(std::move(labels), std::move(vectors));
    return normalize ? table.normalized() : table;
  } catch (const InvalidArgument& e) {
    throw ParseError(source, 1, e.what());
  }
}

LabelEmbeddingTable load_embeddings(const std::filesystem::path& path, bool normalize) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embeddings file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_embeddings(buf.str(), path.string(), normalize);
}

std::string format_embeddings(const LabelEmbeddingTable& table) {
  std::string out = std::to_string(table.size()) + " " + std::to_string(table.dim()) + "\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.labels()[i];
    for (double v : table.vectors().row(i)) {
      out += ' ';
      out += text::format_double(v);
    }
    out += '\n';
  }
  return out;
}

void save_embeddings(const LabelEmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embeddings file '" + path.string() + "'");
  out << format_embeddings(table);
}

LabelEmbeddingTable random_embeddings(std::size_t num_labels, std::size_t d, std::uint64_t seed) {
  if (num_labels < 2) throw InvalidArgument("random_embeddings: need at least 2 labels");
  if (d < 1) throw InvalidArgument("random_embeddings: dimension must be positive");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix vectors(num_labels, d);
  std::vector<std::string> labels;
  labels.reserve(num_labels);
  for (std::size_t i = 0; i < num_labels; ++i) {
    labels.push_back("L" + std::to_string(i));
    auto row = vectors.row(i);
    double n = 0.0;
    // A zero draw has probability zero; redraw anyway so the row is normalizable.
    while (n == 0.0) {
      for (double& x : row) x = normal(rng);
      n = l2_norm(row);
    }
    for (double& x : row) x /= n;
  }
  return LabelEmbeddingTable(std::move(labels), std::move(vectors));
}

}  // namespace condlabel
