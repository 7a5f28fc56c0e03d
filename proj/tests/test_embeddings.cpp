#include <doctest.h>

#include "condlabel/embeddings.hpp"
#include "condlabel/error.hpp"
#include "test_util.hpp"

using namespace condlabel;

namespace {
const char* kSmall = "3 2\nsky 0.1 0.2\nsun 0.3 0.4\ndog 0.5 0.6\n";
}

TEST_CASE("parse a small embedding file") {
  auto t = parse_embeddings(kSmall);
  CHECK(t.size() == 3);
  CHECK(t.dim() == 2);
  CHECK(t.labels() == std::vector<std::string>{"sky", "sun", "dog"});
  CHECK(t.lookup("sky")[0] == 0.1);
  CHECK(t.lookup("sky")[1] == 0.2);
  CHECK(t.lookup(std::size_t{2})[0] == 0.5);
  CHECK(t.lookup(std::size_t{2})[1] == 0.6);
}

TEST_CASE("lookup of an unknown label fails") {
  auto t = parse_embeddings(kSmall);
  CHECK_THROWS_AS(t.lookup("unicorn"), NotFound);
  CHECK_THROWS_AS(t.lookup(std::size_t{3}), NotFound);
  CHECK_FALSE(t.index_of("Sky").has_value());  // case-sensitive
}

TEST_CASE("trailing whitespace and CRLF are tolerated") {
  auto t = parse_embeddings("2 2  \r\na 1 2 \t\r\nb 3 4\r\n\n");
  CHECK(t.size() == 2);
  CHECK(t.lookup("b")[1] == 4.0);
}

TEST_CASE("malformed files report the offending line") {
  auto line_of = [](const std::string& text) {
    try {
      parse_embeddings(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{9999};
  };
  CHECK(line_of("2 3\na 1 2 3\nb 1 2\n") == 3);           // wrong component count
  CHECK(line_of("3\na 1\n") == 1);                         // malformed header
  CHECK(line_of("x 2\n") == 1);
  CHECK(line_of("2 1\na 1\na 2\n") == 3);                  // duplicate label
  CHECK(line_of("2 2\na 1 nan\nb 1 2\n") == 2);            // non-finite component
  CHECK(line_of("2 2\na 1 inf\nb 1 2\n") == 2);
  CHECK(line_of("2 2\na 1 2\nb 1 zz\n") == 3);
  CHECK(line_of("3 1\na 1\nb 2\n") == 3);                  // truncated
  CHECK(line_of("2 1\na 1\nb 2\nc 3\n") == 4);             // extra rows
  CHECK_THROWS_AS(parse_embeddings("1 1\na 1\n"), ParseError);  // fewer than 2 labels
}

TEST_CASE("missing file is an I/O error") {
  CHECK_THROWS_AS(load_embeddings("/nonexistent/embeddings.txt"), IoError);
}

TEST_CASE("table constructor enforces invariants") {
  Matrix m(2, 2, 1.0);
  CHECK_THROWS_AS(LabelEmbeddingTable({"a", "a"}, m), InvalidArgument);
  CHECK_THROWS_AS(LabelEmbeddingTable({"a b", "c"}, m), InvalidArgument);
  CHECK_THROWS_AS(LabelEmbeddingTable({"a"}, Matrix(1, 2)), InvalidArgument);
  CHECK_THROWS_AS(LabelEmbeddingTable({"a", "b", "c"}, m), InvalidArgument);
}

TEST_CASE("vectors are used raw unless normalization is requested") {
  auto raw = parse_embeddings("2 2\na 3 4\nb 0 2\n");
  CHECK(raw.lookup("a")[0] == 3.0);
  auto unit = parse_embeddings("2 2\na 3 4\nb 0 2\n", "<m>", true);
  CHECK(unit.lookup("a")[0] == doctest::Approx(0.6));
  CHECK(unit.lookup("a")[1] == doctest::Approx(0.8));
  CHECK(unit.lookup("b")[1] == doctest::Approx(1.0));
}

TEST_CASE("random_embeddings is deterministic and unit-norm") {
  auto a = random_embeddings(5, 3, 7);
  auto b = random_embeddings(5, 3, 7);
  CHECK(format_embeddings(a) == format_embeddings(b));
  CHECK(a == b);
  CHECK_FALSE(a == random_embeddings(5, 3, 8));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(l2_norm(a.lookup(i)) - 1.0) <= 1e-9);

  auto full_shape = random_embeddings(81, 300, 1);
  CHECK(full_shape.size() == 81);
  CHECK(full_shape.dim() == 300);
  CHECK_THROWS_AS(random_embeddings(1, 3, 1), InvalidArgument);
  CHECK_THROWS_AS(random_embeddings(3, 0, 1), InvalidArgument);
}

TEST_CASE("save/load round trip is exact and lookup matches rows") {
  testutil::TempDir dir("emb");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto t = random_embeddings(2 + seed % 7, 1 + seed % 5, seed);
    save_embeddings(t, dir / "e.txt");
    auto back = load_embeddings(dir / "e.txt");
    CHECK(back == t);
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto row = t.vectors().row(i);
      auto got = back.lookup(t.labels()[i]);
      CHECK(std::equal(row.begin(), row.end(), got.begin(), got.end()));
    }
  }
}

TEST_CASE("81-concept 300-dim file loads with the declared shape") {
  testutil::TempDir dir("emb81");
  auto t = random_embeddings(81, 300, 3);
  save_embeddings(t, dir / "nus81.txt");
  auto back = load_embeddings(dir / "nus81.txt");
  CHECK(back.size() == 81);
  CHECK(back.dim() == 300);
}
