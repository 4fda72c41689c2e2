#include "sprobe/treebank.hpp"

#include <charconv>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "sprobe/errors.hpp"

namespace sprobe {

namespace {

constexpr std::size_t kColumns = 10;

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t") == std::string_view::npos;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Builds the undirected adjacency list of a validated tree.
std::vector<std::vector<int>> adjacency(const SentenceTree& tree) {
  std::vector<std::vector<int>> adj(tree.size());
  for (const Token& t : tree.tokens) {
    if (t.head == 0) continue;
    adj[t.index - 1].push_back(t.head - 1);
    adj[t.head - 1].push_back(t.index - 1);
  }
  return adj;
}

}  // namespace

std::size_t SentenceTree::root() const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].head == 0) return i;
  }
  throw ValidationError(id, "no root token");
}

Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

void validate_tree(const SentenceTree& tree) {
  const int n = static_cast<int>(tree.size());
  if (n == 0) throw ValidationError(tree.id, "sentence has no tokens");
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const Token& t = tree.tokens[i];
    if (t.index != i + 1) {
      throw ValidationError(tree.id, "token " + std::to_string(i + 1) + " carries index " +
                                         std::to_string(t.index));
    }
    if (t.head < 0 || t.head > n) {
      throw ValidationError(tree.id, "token " + std::to_string(t.index) + " has head " +
                                         std::to_string(t.head) + " outside [0, " +
                                         std::to_string(n) + "]");
    }
    if (t.head == t.index) {
      throw ValidationError(tree.id, "token " + std::to_string(t.index) + " is its own head");
    }
    if (t.head == 0) ++roots;
  }
  if (roots != 1) {
    throw ValidationError(tree.id, "expected exactly one root, found " + std::to_string(roots));
  }
  // 0 = unvisited, 1 = on current chain, 2 = known to reach the root.
  std::vector<char> state(n, 0);
  for (int start = 0; start < n; ++start) {
    std::vector<int> chain;
    int cur = start;
    while (cur >= 0 && state[cur] == 0) {
      state[cur] = 1;
      chain.push_back(cur);
      cur = tree.tokens[cur].head - 1;
    }
    if (cur >= 0 && state[cur] == 1) {
      throw ValidationError(tree.id, "head cycle through token " + std::to_string(cur + 1));
    }
    for (int v : chain) state[v] = 2;
  }
}

ParseResult parse_conllu(std::string_view text, const ParseOptions& options) {
  ParseResult result;
  std::unordered_set<std::string> seen_ids;

  SentenceTree current;
  bool in_sentence = false;
  std::size_t ordinal = 0;
  std::size_t sentence_line = 0;

  auto finish = [&]() {
    if (!in_sentence) return;
    in_sentence = false;
    ++ordinal;
    if (current.id.empty()) current.id = "sent-" + std::to_string(ordinal);
    try {
      if (current.tokens.empty()) {
        throw ValidationError(current.id, "sentence starting at line " +
                                              std::to_string(sentence_line) + " has no tokens");
      }
      if (!seen_ids.insert(current.id).second) {
        throw ValidationError(current.id, "duplicate sentence id");
      }
      validate_tree(current);
      result.sentences.push_back(std::move(current));
    } catch (const ValidationError& e) {
      if (!options.skip_invalid) throw;
      result.skipped.emplace_back(e.what());
    }
    current = SentenceTree{};
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (is_blank(line)) {
      finish();
      if (eol == text.size()) break;
      continue;
    }
    if (!in_sentence) {
      in_sentence = true;
      sentence_line = line_no;
    }
    if (line.front() == '#') {
      std::string_view body = trim(line.substr(1));
      if (body.starts_with("sent_id")) {
        std::string_view rest = trim(body.substr(7));
        if (!rest.empty() && rest.front() == '=') current.id = std::string(trim(rest.substr(1)));
      }
      continue;
    }

    const auto cols = split_tabs(line);
    if (cols.size() != kColumns) {
      throw ParseError(line_no, "expected " + std::to_string(kColumns) + " tab-separated columns, found " +
                                    std::to_string(cols.size()));
    }
    const std::string_view id = cols[0];
    // Multiword ranges ("3-4") and empty nodes ("5.1") are not syntactic words.
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;

    Token token;
    if (!parse_int(id, token.index) || token.index < 1) {
      throw ParseError(line_no, "bad token id '" + std::string(id) + "'");
    }
    if (token.index != static_cast<int>(current.tokens.size()) + 1) {
      throw ParseError(line_no, "token id " + std::to_string(token.index) + " out of sequence");
    }
    if (!parse_int(cols[6], token.head)) {
      throw ParseError(line_no, "bad head '" + std::string(cols[6]) + "'");
    }
    token.form = std::string(cols[1]);
    token.upos = std::string(cols[3]);
    current.tokens.push_back(std::move(token));
    if (eol == text.size()) break;
  }
  finish();
  return result;
}

ParseResult read_conllu_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open treebank '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_conllu(buf.str(), options);
}

std::string write_conllu(const std::vector<SentenceTree>& trees) {
  std::string out;
  for (const SentenceTree& tree : trees) {
    out += "# sent_id = " + tree.id + "\n";
    for (const Token& t : tree.tokens) {
      out += std::to_string(t.index) + '\t' + t.form + "\t_\t" + t.upos + "\t_\t_\t" +
             std::to_string(t.head) + '\t' + (t.head == 0 ? "root" : "dep") + "\t_\t_\n";
    }
    out += '\n';
  }
  return out;
}

DistanceMatrix gold_distances(const SentenceTree& tree) {
  const std::size_t n = tree.size();
  const auto adj = adjacency(tree);
  DistanceMatrix dist(n);
  std::vector<int> d(n);
  std::deque<int> queue;
  for (std::size_t src = 0; src < n; ++src) {
    std::fill(d.begin(), d.end(), -1);
    d[src] = 0;
    queue.assign(1, static_cast<int>(src));
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : adj[u]) {
        if (d[v] < 0) {
          d[v] = d[u] + 1;
          queue.push_back(v);
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) dist(src, j) = d[j];
  }
  return dist;
}

DepthVector gold_depths(const SentenceTree& tree) {
  const std::size_t n = tree.size();
  DepthVector depth(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    // Walk up until a token with known depth (or the root) is reached.
    std::vector<std::size_t> chain;
    std::size_t cur = i;
    while (depth[cur] < 0 && tree.tokens[cur].head != 0) {
      chain.push_back(cur);
      cur = static_cast<std::size_t>(tree.tokens[cur].head - 1);
    }
    if (depth[cur] < 0) depth[cur] = 0;
    int d = depth[cur];
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) depth[*it] = ++d;
  }
  return depth;
}

EdgeSet gold_edges(const SentenceTree& tree) {
  EdgeSet edges;
  for (const Token& t : tree.tokens) {
    if (t.head != 0) edges.insert(make_edge(t.index - 1, t.head - 1));
  }
  return edges;
}

std::vector<bool> punctuation_mask(const SentenceTree& tree) {
  std::vector<bool> mask(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) mask[i] = tree.tokens[i].upos == "PUNCT";
  return mask;
}

}  // namespace sprobe
