#pragma once

// EMB1 embedding files, checkpoint manifests, and tree/embedding alignment.
//
// EMB1 layout (little-endian):
//   header : "EMB1" | version u8 = 1 | d u32 | reserved u32 = 0      (13 bytes)
//   record : id_len u16 | id bytes | n u32 | n*d binary32, row-major  (until EOF)

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sprobe/matrix.hpp"
#include "sprobe/treebank.hpp"

namespace sprobe {

inline constexpr std::size_t kEmbHeaderBytes = 13;
inline constexpr std::uint8_t kEmbVersion = 1;

// Token vectors of one sentence; row i belongs to token i (0-based).
// Held in binary64 for probe math; stored on disk as binary32.
struct SentenceEmbedding {
  std::string id;
  Matrix vectors;

  std::size_t tokens() const { return vectors.rows(); }
  std::size_t dim() const { return vectors.cols(); }
};

// Values are narrowed to binary32 on write, so round trips are bit-exact for
// inputs that are already binary32-representable. Throws DimensionError
// before writing anything if dimensions disagree or a sentence is empty.
std::size_t write_embeddings(std::span<const SentenceEmbedding> sentences, std::ostream& sink);
void write_embeddings_file(std::span<const SentenceEmbedding> sentences,
                           const std::filesystem::path& path);

// Throws FormatError (header), CorruptionError (length mismatch, with byte
// offset), or DataError (non-finite value, with sentence id).
std::vector<SentenceEmbedding> read_embeddings(std::istream& source);
std::vector<SentenceEmbedding> read_embeddings_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string task;
  std::int64_t seed = 0;
  int checkpoint_index = 0;  // 0 = pretrained model
  double epoch_fraction = 0.0;
  int layer = 0;
  std::string path;  // relative to the manifest file
  std::optional<double> task_metric;
};

struct CheckpointManifest {
  std::vector<ManifestEntry> entries;
  // Directory the manifest was loaded from; entry paths resolve against it.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& entry) const;
};

// Throws ConfigError on duplicate (task, seed, checkpoint_index) or bad fields.
void validate_manifest(const CheckpointManifest& manifest);
CheckpointManifest parse_manifest(const std::string& json_text,
                                  const std::filesystem::path& base_dir = {});
CheckpointManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const CheckpointManifest& manifest);
void save_manifest(const CheckpointManifest& manifest, const std::filesystem::path& path);

// One sentence with its embedding and precomputed gold geometry.
struct Example {
  SentenceTree tree;
  SentenceEmbedding embedding;
  DistanceMatrix distances;
  DepthVector depths;
  EdgeSet edges;
  std::vector<bool> punct;
};

Example make_example(SentenceTree tree, SentenceEmbedding embedding);

struct AlignedDataset {
  std::vector<Example> examples;  // in tree order
  std::vector<std::string> unmatched_embedding_ids;
  std::vector<std::string> unmatched_tree_ids;
};

// Pairs by id. Throws AlignmentError when an id on both sides disagrees on
// token count.
AlignedDataset align(std::span<const SentenceEmbedding> embeddings,
                     std::span<const SentenceTree> trees);

}  // namespace sprobe
