#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "sprobe/embstore.hpp"
#include "sprobe/errors.hpp"
#include "sprobe/synth.hpp"

using namespace sprobe;

namespace {

// Random finite binary32 bit patterns, widened to binary64.
std::vector<SentenceEmbedding> random_set(std::mt19937_64& rng) {
  const std::size_t d = 1 + rng() % 12;
  const std::size_t count = rng() % 6;
  std::vector<SentenceEmbedding> out;
  for (std::size_t s = 0; s < count; ++s) {
    std::string id;
    const std::size_t len = rng() % 10;
    for (std::size_t k = 0; k < len; ++k) id += static_cast<char>('a' + rng() % 26);
    id += "#" + std::to_string(s);
    Matrix m(1 + rng() % 7, d);
    for (double& v : m.data()) {
      float f;
      do {
        f = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
      } while (!std::isfinite(f));
      v = f;
    }
    out.push_back({id, std::move(m)});
  }
  return out;
}

std::string bytes_of(std::span<const SentenceEmbedding> s) {
  std::ostringstream out;
  write_embeddings(s, out);
  return out.str();
}

std::vector<SentenceEmbedding> read_bytes(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_embeddings(in);
}

}  // namespace

TEST_CASE("byte counts follow the layout") {
  std::vector<SentenceEmbedding> one{{"abc", Matrix(2, 3, 1.5)}};
  std::ostringstream out;
  CHECK(write_embeddings(one, out) == 13 + (2 + 3 + 4 + 24));
  CHECK(out.str().size() == 13 + 33);
  CHECK(out.str().substr(0, 4) == "EMB1");

  std::ostringstream empty;
  CHECK(write_embeddings({}, empty) == 13);
  CHECK(read_bytes(empty.str()).empty());
}

TEST_CASE("header is little-endian") {
  std::vector<SentenceEmbedding> one{{"x", Matrix(1, 258, 0.0)}};
  const std::string b = bytes_of(one);
  CHECK(static_cast<unsigned char>(b[4]) == 1);
  CHECK(static_cast<unsigned char>(b[5]) == 2);  // 258 = 0x0102
  CHECK(static_cast<unsigned char>(b[6]) == 1);
  CHECK(b[7] == 0);
  CHECK(b[8] == 0);
}

TEST_CASE("100 random sets round-trip bit-exactly") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const auto set = random_set(rng);
    const auto back = read_bytes(bytes_of(set));
    REQUIRE(back.size() == set.size());
    for (std::size_t s = 0; s < set.size(); ++s) {
      CHECK(back[s].id == set[s].id);
      REQUIRE(back[s].tokens() == set[s].tokens());
      REQUIRE(back[s].dim() == set[s].dim());
      for (std::size_t k = 0; k < set[s].vectors.data().size(); ++k) {
        CHECK(std::bit_cast<std::uint64_t>(back[s].vectors.data()[k]) ==
              std::bit_cast<std::uint64_t>(set[s].vectors.data()[k]));
      }
    }
  }
}

TEST_CASE("dimension mismatch fails before writing") {
  std::vector<SentenceEmbedding> bad{{"a", Matrix(2, 3)}, {"b", Matrix(2, 4)}};
  std::ostringstream out;
  CHECK_THROWS_AS(write_embeddings(bad, out), DimensionError);
  CHECK(out.str().empty());
}

TEST_CASE("reader rejects bad magic and version") {
  std::string b = bytes_of(std::vector<SentenceEmbedding>{{"a", Matrix(1, 2, 0.5)}});
  std::string magic = b;
  magic[0] = 'X';
  CHECK_THROWS_AS(read_bytes(magic), FormatError);
  std::string version = b;
  version[4] = 2;
  CHECK_THROWS_AS(read_bytes(version), FormatError);
  std::string reserved = b;
  reserved[9] = 1;
  CHECK_THROWS_AS(read_bytes(reserved), FormatError);
  CHECK_THROWS_AS(read_bytes("EM"), FormatError);
}

TEST_CASE("every truncation is a corruption error with an offset") {
  const std::string b = bytes_of(std::vector<SentenceEmbedding>{{"ab", Matrix(2, 2, 0.25)}, {"c", Matrix(1, 2, 1.0)}});
  for (std::size_t cut = 4; cut < b.size(); ++cut) {
    if (cut == 13 || cut == 13 + 2 + 2 + 4 + 16) continue;  // clean record boundaries
    try {
      read_bytes(b.substr(0, cut));
      FAIL("truncation at " << cut << " accepted");
    } catch (const CorruptionError& e) {
      CHECK(e.offset() <= cut);
    } catch (const FormatError&) {
      CHECK(cut < 13);
    }
  }
  // A clean cut at a record boundary is a shorter valid file.
  CHECK(read_bytes(b.substr(0, 13 + 2 + 2 + 4 + 16)).size() == 1);
}

TEST_CASE("declared n larger than payload is corruption, not allocation") {
  std::string b = bytes_of(std::vector<SentenceEmbedding>{{"a", Matrix(1, 2, 0.5)}});
  // n field sits after header (13) + id_len (2) + id (1).
  b[16] = '\xff';
  b[17] = '\xff';
  b[18] = '\xff';
  CHECK_THROWS_AS(read_bytes(b), CorruptionError);
}

TEST_CASE("non-finite values are data errors naming the sentence") {
  std::string b = bytes_of(std::vector<SentenceEmbedding>{{"nan-here", Matrix(1, 2, 0.5)}});
  const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  std::memcpy(&b[b.size() - 4], &nan_bits, 4);  // little-endian host
  try {
    read_bytes(b);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.sentence_id() == "nan-here");
  }
  const auto inf_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::infinity());
  std::memcpy(&b[b.size() - 4], &inf_bits, 4);
  CHECK_THROWS_AS(read_bytes(b), DataError);
}

TEST_CASE("manifest JSON round-trips and rejects duplicates") {
  CheckpointManifest m;
  m.entries.push_back({"pos", 1, 0, 0.0, 7, "a.emb", std::nullopt});
  m.entries.push_back({"pos", 1, 1, 0.1, 7, "b.emb", 0.95});
  const auto back = parse_manifest(manifest_to_json(m), "/data");
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[1].task_metric.value() == doctest::Approx(0.95));
  CHECK_FALSE(back.entries[0].task_metric.has_value());
  CHECK(back.resolve(back.entries[1]) == std::filesystem::path("/data/b.emb"));

  m.entries.push_back({"pos", 1, 1, 0.1, 7, "c.emb", std::nullopt});
  CHECK_THROWS_AS(parse_manifest(manifest_to_json(m)), ConfigError);
  CHECK_THROWS_AS(parse_manifest("{}"), ConfigError);
  CHECK_THROWS_AS(parse_manifest("[{\"task\": \"x\"}]"), ConfigError);
}

TEST_CASE("align pairs by id and reports leftovers") {
  const auto t1 = random_tree(5, 1, "s1");
  const auto t2 = random_tree(3, 2, "s2");
  std::vector<SentenceTree> trees{t1, t2};
  std::vector<SentenceEmbedding> embs{{"s2", Matrix(3, 4)}, {"s1", Matrix(5, 4)}};

  auto full = align(embs, trees);
  REQUIRE(full.examples.size() == 2);
  CHECK(full.examples[0].tree.id == "s1");
  CHECK(full.examples[0].embedding.tokens() == 5);
  CHECK(full.unmatched_embedding_ids.empty());
  CHECK(full.unmatched_tree_ids.empty());

  embs.push_back({"extra", Matrix(2, 4)});
  auto extra = align(embs, trees);
  CHECK(extra.examples.size() == 2);
  CHECK(extra.unmatched_embedding_ids == std::vector<std::string>{"extra"});

  auto missing = align(std::span(embs).subspan(1), trees);
  CHECK(missing.unmatched_tree_ids == std::vector<std::string>{"s2"});

  std::vector<SentenceEmbedding> short_one{{"s1", Matrix(4, 4)}};
  try {
    align(short_one, trees);
    FAIL("expected AlignmentError");
  } catch (const AlignmentError& e) {
    CHECK(e.sentence_id() == "s1");
  }
}
