#include "sprobe/embstore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <ostream>
#include <set>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "sprobe/errors.hpp"

namespace sprobe {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t count, const char* what) const {
    if (remaining() < count) {
      throw CorruptionError(pos_, std::string("truncated ") + what + ": need " +
                                      std::to_string(count) + " bytes, " +
                                      std::to_string(remaining()) + " remain");
    }
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes_[pos_++]); }

  std::uint16_t u16() {
    std::uint16_t v = u8();
    v |= static_cast<std::uint16_t>(u8()) << 8;
    return v;
  }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int s = 0; s < 32; s += 8) v |= static_cast<std::uint32_t>(u8()) << s;
    return v;
  }

  std::string take(std::size_t count) {
    std::string s = bytes_.substr(pos_, count);
    pos_ += count;
    return s;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t write_embeddings(std::span<const SentenceEmbedding> sentences, std::ostream& sink) {
  const std::size_t d = sentences.empty() ? 0 : sentences.front().dim();
  for (const auto& s : sentences) {
    if (s.dim() != d) {
      throw DimensionError("sentence '" + s.id + "' has dimension " + std::to_string(s.dim()) +
                           ", expected " + std::to_string(d));
    }
    if (s.tokens() == 0 || s.dim() == 0) {
      throw DimensionError("sentence '" + s.id + "' has an empty matrix");
    }
    if (s.id.size() > 0xffff) throw DimensionError("sentence id longer than 65535 bytes");
    if (d > 0xffffffffULL || s.tokens() > 0xffffffffULL) {
      throw DimensionError("sentence '" + s.id + "' exceeds u32 shape limits");
    }
  }

  std::string out(kMagic, 4);
  out.push_back(static_cast<char>(kEmbVersion));
  put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, 0);
  for (const auto& s : sentences) {
    put_u16(out, static_cast<std::uint16_t>(s.id.size()));
    out += s.id;
    put_u32(out, static_cast<std::uint32_t>(s.tokens()));
    for (double v : s.vectors.data()) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  sink.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!sink) throw Error("failed writing embedding stream");
  return out.size();
}

void write_embeddings_file(std::span<const SentenceEmbedding> sentences,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_embeddings(sentences, out);
}

std::vector<SentenceEmbedding> read_embeddings(std::istream& source) {
  const std::string bytes{std::istreambuf_iterator<char>(source), std::istreambuf_iterator<char>()};
  ByteReader in(bytes);

  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic: not an EMB1 file");
  }
  in.need(kEmbHeaderBytes, "header");
  in.take(4);
  const std::uint8_t version = in.u8();
  if (version != kEmbVersion) {
    throw FormatError("unsupported EMB1 version " + std::to_string(version));
  }
  const std::uint32_t d = in.u32();
  const std::uint32_t reserved = in.u32();
  if (reserved != 0) throw FormatError("reserved header field is nonzero");

  std::vector<SentenceEmbedding> out;
  while (!in.at_end()) {
    in.need(2, "record id length");
    const std::uint16_t id_len = in.u16();
    in.need(id_len, "record id");
    std::string id = in.take(id_len);
    in.need(4, "record token count");
    const std::size_t n_offset = in.offset();
    const std::uint32_t n = in.u32();
    if (n == 0) throw DataError(id, "record has zero tokens");
    if (d == 0) throw FormatError("header declares d = 0 but records follow");
    const std::uint64_t values = static_cast<std::uint64_t>(n) * d;
    if (values > in.remaining() / 4) {
      throw CorruptionError(n_offset, "record '" + id + "' declares " + std::to_string(n) + "x" +
                                          std::to_string(d) + " values but only " +
                                          std::to_string(in.remaining()) + " bytes remain");
    }
    Matrix m(n, d);
    for (double& v : m.data()) {
      const float f = std::bit_cast<float>(in.u32());
      if (!std::isfinite(f)) throw DataError(id, "non-finite embedding value");
      v = f;
    }
    out.push_back({std::move(id), std::move(m)});
  }
  return out;
}

std::vector<SentenceEmbedding> read_embeddings_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file '" + path.string() + "'");
  return read_embeddings(in);
}

std::filesystem::path CheckpointManifest::resolve(const ManifestEntry& entry) const {
  const std::filesystem::path p(entry.path);
  return p.is_absolute() ? p : base_dir / p;
}

void validate_manifest(const CheckpointManifest& manifest) {
  std::set<std::tuple<std::string, std::int64_t, int>> keys;
  for (const auto& e : manifest.entries) {
    const std::string where = "manifest entry (task '" + e.task + "', seed " +
                              std::to_string(e.seed) + ", checkpoint " +
                              std::to_string(e.checkpoint_index) + ")";
    if (e.checkpoint_index < 0) throw ConfigError(where + ": negative checkpoint_index");
    if (!(e.epoch_fraction >= 0.0) || !std::isfinite(e.epoch_fraction)) {
      throw ConfigError(where + ": epoch_fraction must be finite and >= 0");
    }
    if (e.path.empty()) throw ConfigError(where + ": empty path");
    if (e.task_metric && !std::isfinite(*e.task_metric)) {
      throw ConfigError(where + ": non-finite task_metric");
    }
    if (!keys.emplace(e.task, e.seed, e.checkpoint_index).second) {
      throw ConfigError(where + ": duplicate (task, seed, checkpoint_index)");
    }
  }
}

CheckpointManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir) {
  CheckpointManifest manifest;
  manifest.base_dir = base_dir;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ConfigError("manifest must be a JSON array");
  try {
    for (const auto& obj : doc) {
      ManifestEntry e;
      e.task = obj.at("task").get<std::string>();
      e.seed = obj.at("seed").get<std::int64_t>();
      e.checkpoint_index = obj.at("checkpoint_index").get<int>();
      e.epoch_fraction = obj.at("epoch_fraction").get<double>();
      e.layer = obj.at("layer").get<int>();
      e.path = obj.at("path").get<std::string>();
      if (auto it = obj.find("task_metric"); it != obj.end() && !it->is_null()) {
        e.task_metric = it->get<double>();
      }
      manifest.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad manifest entry: ") + e.what());
  }
  validate_manifest(manifest);
  return manifest;
}

CheckpointManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open manifest '" + path.string() + "'");
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_manifest(text, path.parent_path());
}

std::string manifest_to_json(const CheckpointManifest& manifest) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json obj = {{"task", e.task},
                          {"seed", e.seed},
                          {"checkpoint_index", e.checkpoint_index},
                          {"epoch_fraction", e.epoch_fraction},
                          {"layer", e.layer},
                          {"path", e.path}};
    if (e.task_metric) obj["task_metric"] = *e.task_metric;
    doc.push_back(std::move(obj));
  }
  return doc.dump(2) + "\n";
}

void save_manifest(const CheckpointManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << manifest_to_json(manifest);
}

Example make_example(SentenceTree tree, SentenceEmbedding embedding) {
  Example ex;
  ex.distances = gold_distances(tree);
  ex.depths = gold_depths(tree);
  ex.edges = gold_edges(tree);
  ex.punct = punctuation_mask(tree);
  ex.tree = std::move(tree);
  ex.embedding = std::move(embedding);
  return ex;
}

AlignedDataset align(std::span<const SentenceEmbedding> embeddings,
                     std::span<const SentenceTree> trees) {
  std::unordered_map<std::string, const SentenceEmbedding*> by_id;
  for (const auto& e : embeddings) by_id.emplace(e.id, &e);

  AlignedDataset out;
  std::set<std::string> used;
  for (const auto& tree : trees) {
    const auto it = by_id.find(tree.id);
    if (it == by_id.end()) {
      out.unmatched_tree_ids.push_back(tree.id);
      continue;
    }
    const SentenceEmbedding& emb = *it->second;
    if (emb.tokens() != tree.size()) {
      throw AlignmentError(tree.id, "tree has " + std::to_string(tree.size()) +
                                        " tokens but embedding has " +
                                        std::to_string(emb.tokens()) + " rows");
    }
    used.insert(tree.id);
    out.examples.push_back(make_example(tree, emb));
  }
  for (const auto& e : embeddings) {
    if (!used.contains(e.id)) out.unmatched_embedding_ids.push_back(e.id);
  }
  return out;
}

}  // namespace sprobe
