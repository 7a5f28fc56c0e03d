#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "condlabel/error.hpp"
#include "condlabel/model.hpp"

namespace condlabel {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'L', 'S', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void put_bytes(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view in, const std::string& source) : in_(in), source_(source) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    auto n = get<std::uint32_t>();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto v = in_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  bool at_end() const { return pos_ == in_.size(); }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, 0, "checkpoint: " + what); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) fail("truncated file");
  }
  std::string_view in_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

void put_tensor(Writer& w, const std::string& name, const std::vector<std::uint64_t>& shape,
                const std::vector<double>& values) {
  w.put_string(name);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
  for (auto s : shape) w.put<std::uint64_t>(s);
  w.put_bytes(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double));
}

std::vector<double> get_tensor(Reader& r, const std::string& expected_name,
                               const std::vector<std::uint64_t>& expected_shape) {
  auto name = r.get_string();
  if (name != expected_name) r.fail("expected tensor '" + expected_name + "', found '" + name + "'");
  auto rank = r.get<std::uint32_t>();
  if (rank != expected_shape.size()) r.fail("tensor '" + name + "' has wrong rank");
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    auto s = r.get<std::uint64_t>();
    if (s != expected_shape[i]) r.fail("tensor '" + name + "' shape does not match config");
    count *= s;
  }
  auto bytes = r.get_bytes(count * sizeof(double));
  std::vector<double> values(count);
  std::memcpy(values.data(), bytes.data(), bytes.size());
  for (double v : values) {
    if (!std::isfinite(v)) r.fail("tensor '" + name + "' has non-finite values");
  }
  return values;
}

}  // namespace

std::string serialize_checkpoint(const ModelParams& params) {
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kVersion);
  const auto& c = params.config;
  w.put<std::uint64_t>(c.feature_dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.hidden_dims.size()));
  for (auto h : c.hidden_dims) w.put<std::uint64_t>(h);
  w.put<std::uint64_t>(c.k);
  w.put<std::uint64_t>(c.d);
  w.put<double>(c.init_scale);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.layers.size() * 2));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const std::string prefix = "layer" + std::to_string(l);
    put_tensor(w, prefix + ".weight", {layer.weight.rows, layer.weight.cols}, layer.weight.data);
    put_tensor(w, prefix + ".bias", {layer.bias.size()}, layer.bias);
  }
  return w.take();
}

ModelParams deserialize_checkpoint(std::string_view bytes, const std::string& source) {
  Reader r(bytes, source);
  auto magic = r.get_bytes(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) r.fail("bad magic, not a checkpoint file");
  auto version = r.get<std::uint32_t>();
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version));

  ModelConfig c;
  c.feature_dim = r.get<std::uint64_t>();
  auto n_hidden = r.get<std::uint32_t>();
  c.hidden_dims.clear();
  for (std::uint32_t i = 0; i < n_hidden; ++i) c.hidden_dims.push_back(r.get<std::uint64_t>());
  c.k = r.get<std::uint64_t>();
  c.d = r.get<std::uint64_t>();
  c.init_scale = r.get<double>();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    r.fail(e.what());
  }

  ModelParams params{c, zero_layers(c)};
  auto n_tensors = r.get<std::uint32_t>();
  if (n_tensors != params.layers.size() * 2) r.fail("tensor count does not match config");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    const std::string prefix = "layer" + std::to_string(l);
    layer.weight.data = get_tensor(r, prefix + ".weight", {layer.weight.rows, layer.weight.cols});
    layer.bias = get_tensor(r, prefix + ".bias", {layer.bias.size()});
  }
  if (!r.at_end()) r.fail("trailing bytes after last tensor");
  return params;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out << serialize_checkpoint(params);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str(), path.string());
}

}  // namespace condlabel
