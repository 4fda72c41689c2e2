#pragma once

// CoNLL-U reading and gold tree geometry.
//
// Token positions are 1-based in the file (and in Token::index / Token::head,
// where head 0 is the virtual root). Every matrix, vector, and edge produced
// here is 0-based: token with index k sits at position k-1.

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sprobe {

struct Token {
  int index = 0;  // 1-based
  std::string form;
  std::string upos;
  int head = 0;  // 0 = virtual root
};

struct SentenceTree {
  std::string id;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  // 0-based position of the head-0 token.
  std::size_t root() const;
};

// Unordered token pair stored as (min, max), 0-based.
using Edge = std::pair<int, int>;
using EdgeSet = std::set<Edge>;

Edge make_edge(int a, int b);

// n x n path lengths in edges.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), data_(n * n, 0) {}

  std::size_t size() const { return n_; }
  int& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  int operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<int> data_;
};

using DepthVector = std::vector<int>;

struct ParseOptions {
  // Drop sentences that fail tree validation instead of throwing.
  bool skip_invalid = false;
};

struct ParseResult {
  std::vector<SentenceTree> sentences;
  // One message per sentence dropped under skip_invalid.
  std::vector<std::string> skipped;
};

// Throws ParseError for malformed lines and ValidationError for head
// assignments that are out of range, cyclic, or multi-rooted.
ParseResult parse_conllu(std::string_view text, const ParseOptions& options = {});
ParseResult read_conllu_file(const std::string& path, const ParseOptions& options = {});

// Throws ValidationError unless the heads form a single rooted tree.
void validate_tree(const SentenceTree& tree);

// Writes a minimal 10-column CoNLL-U document with `# sent_id` comments.
std::string write_conllu(const std::vector<SentenceTree>& trees);

DistanceMatrix gold_distances(const SentenceTree& tree);
DepthVector gold_depths(const SentenceTree& tree);
EdgeSet gold_edges(const SentenceTree& tree);
std::vector<bool> punctuation_mask(const SentenceTree& tree);

}  // namespace sprobe
