#include "gsae/graph.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gsae/errors.hpp"
#include "gsae/random.hpp"
#include "nlohmann/json.hpp"

namespace gsae {

using json = nlohmann::json;

Graph::Graph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
  if (n_ < 1) throw std::invalid_argument("graph needs at least one node");
  for (auto& [i, j] : edges_) {
    if (i > j) std::swap(i, j);
    if (i == j) throw std::invalid_argument("self-loop at node " + std::to_string(i));
    if (i < 0 || j >= n_)
      throw std::invalid_argument("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                                  ") out of range for n = " + std::to_string(n_));
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw std::invalid_argument("duplicate edge");
}

bool Graph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
}

Eigen::MatrixXd Graph::adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (const auto& [i, j] : edges_) {
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return a;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> d(n_, 0);
  for (const auto& [i, j] : edges_) {
    ++d[i];
    ++d[j];
  }
  return d;
}

Graph Graph::permuted(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != n_)
    throw std::invalid_argument("permutation size does not match node count");
  std::vector<Edge> mapped;
  mapped.reserve(edges_.size());
  for (const auto& [i, j] : edges_) mapped.emplace_back(perm[i], perm[j]);
  return Graph(n_, std::move(mapped));
}

void GraphDataset::validate() const {
  for (std::size_t k = 0; k < graphs.size(); ++k)
    if (graphs[k].node_count() != n)
      throw std::invalid_argument("graph " + std::to_string(k) + " has node count " +
                                  std::to_string(graphs[k].node_count()) + ", dataset has " +
                                  std::to_string(n));
  if (meta && meta->size() != graphs.size())
    throw std::invalid_argument("meta length " + std::to_string(meta->size()) +
                                " does not match graph count " + std::to_string(graphs.size()));
  if (meta.has_value() != !meta_name.empty())
    throw std::invalid_argument("meta and meta_name must be present together");
}

RnaSequence::RnaSequence(std::string bases) : bases_(std::move(bases)) {
  if (bases_.empty()) throw std::invalid_argument("empty sequence");
  for (std::size_t i = 0; i < bases_.size(); ++i) {
    const char c = bases_[i];
    if (c != 'A' && c != 'C' && c != 'G' && c != 'U') throw IllegalCharacter(i, c);
  }
}

bool can_pair(char a, char b) {
  return (a == 'A' && b == 'U') || (a == 'U' && b == 'A') || (a == 'G' && b == 'C') ||
         (a == 'C' && b == 'G') || (a == 'G' && b == 'U') || (a == 'U' && b == 'G');
}

Graph parse_dot_bracket(const std::string& s) {
  const int n = static_cast<int>(s.size());
  if (n == 0) throw IllegalCharacter(0, '\0');
  std::vector<Graph::Edge> edges;
  edges.reserve(s.size() * 2);
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    switch (s[i]) {
      case '.':
        break;
      case '(':
        stack.push_back(i);
        break;
      case ')':
        if (stack.empty()) throw UnbalancedBrackets(static_cast<std::size_t>(i));
        // Backbone already links adjacent nodes; a pair (i, i+1) would
        // duplicate it, but bracket matching can't produce that: ")(" adjacency
        // means the open bracket is at i and close at i+1, distance 1, which
        // only arises from "()" and is a legal (if degenerate) pair. Guard it.
        if (stack.back() + 1 == i) {
          stack.pop_back();
          break;  // pair coincides with a backbone edge; keep the single edge
        }
        edges.emplace_back(stack.back(), i);
        stack.pop_back();
        break;
      default:
        throw IllegalCharacter(static_cast<std::size_t>(i), s[i]);
    }
  }
  if (!stack.empty()) throw UnbalancedBrackets(static_cast<std::size_t>(stack.back()));
  return Graph(n, std::move(edges));
}

namespace {

// Unordered pair index <-> (i, j) with i < j, lexicographic over i then j.
Graph::Edge pair_from_index(int n, std::uint64_t idx) {
  for (int i = 0; i < n - 1; ++i) {
    const std::uint64_t row = static_cast<std::uint64_t>(n - 1 - i);
    if (idx < row) return {i, i + 1 + static_cast<int>(idx)};
    idx -= row;
  }
  throw std::logic_error("pair index out of range");
}

}  // namespace

GraphDataset gen_toy_trajectory(int n, double p, int steps, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("need n >= 2");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("need 0 < p < 1");
  if (steps < 0) throw std::invalid_argument("need steps >= 0");

  Rng rng(seed);
  const std::uint64_t num_pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;

  std::vector<Graph::Edge> current;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) current.emplace_back(i, j);

  GraphDataset out;
  out.n = n;
  out.meta_name = "step_index";
  out.meta = std::vector<double>();
  out.graphs.reserve(static_cast<std::size_t>(steps) + 1);
  out.graphs.emplace_back(n, current);
  out.meta->push_back(0.0);

  std::vector<Graph::Edge> work = current;
  for (int k = 1; k <= steps; ++k) {
    const Graph::Edge e = pair_from_index(n, rng.uniform_int(num_pairs));
    auto it = std::find(work.begin(), work.end(), e);
    if (it == work.end())
      work.push_back(e);
    else
      work.erase(it);
    out.graphs.emplace_back(n, work);
    out.meta->push_back(static_cast<double>(k));
  }
  return out;
}

namespace {

using PairList = std::vector<Graph::Edge>;

// All pseudoknot-free structures on s[lo..hi]: position lo is either unpaired
// or paired with a unique partner, so each structure is produced exactly once.
std::vector<PairList> enumerate_interval(const std::string& s, int lo, int hi) {
  if (lo >= hi) return {PairList{}};
  std::vector<PairList> out;
  for (PairList& rest : enumerate_interval(s, lo + 1, hi)) out.push_back(std::move(rest));
  for (int k = lo + kMinHairpinLoop + 1; k <= hi; ++k) {
    if (!can_pair(s[lo], s[k])) continue;
    const auto inner = enumerate_interval(s, lo + 1, k - 1);
    const auto outer = enumerate_interval(s, k + 1, hi);
    for (const PairList& a : inner)
      for (const PairList& b : outer) {
        PairList combined;
        combined.reserve(1 + a.size() + b.size());
        combined.emplace_back(lo, k);
        combined.insert(combined.end(), a.begin(), a.end());
        combined.insert(combined.end(), b.begin(), b.end());
        out.push_back(std::move(combined));
      }
  }
  return out;
}

Graph structure_to_graph(int n, const PairList& pairs) {
  std::vector<Graph::Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) + pairs.size());
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  edges.insert(edges.end(), pairs.begin(), pairs.end());
  return Graph(n, std::move(edges));
}

}  // namespace

GraphDataset enumerate_folds(const RnaSequence& seq, std::size_t max_structures,
                             std::uint64_t seed) {
  if (seq.length() > kMaxFoldLength) throw SequenceTooLong(seq.length(), kMaxFoldLength);
  if (max_structures < 1) throw std::invalid_argument("max_structures must be >= 1");

  const int n = static_cast<int>(seq.length());
  std::vector<PairList> structures = enumerate_interval(seq.bases(), 0, n - 1);

  std::vector<std::size_t> keep(structures.size());
  std::iota(keep.begin(), keep.end(), 0);
  if (structures.size() > max_structures) {
    // Partial Fisher-Yates, then restore enumeration order for determinism.
    Rng rng(seed);
    for (std::size_t i = 0; i < max_structures; ++i) {
      const std::size_t j = i + rng.uniform_int(keep.size() - i);
      std::swap(keep[i], keep[j]);
    }
    keep.resize(max_structures);
    std::sort(keep.begin(), keep.end());
  }

  GraphDataset out;
  out.n = n;
  out.meta_name = "energy";
  out.meta = std::vector<double>();
  out.graphs.reserve(keep.size());
  for (const std::size_t idx : keep) {
    out.graphs.push_back(structure_to_graph(n, structures[idx]));
    out.meta->push_back(-static_cast<double>(structures[idx].size()));
  }
  return out;
}

int ged_fixed(const Graph& g1, const Graph& g2) {
  if (g1.node_count() != g2.node_count())
    throw NodeCountMismatch(g1.node_count(), g2.node_count());
  const auto& a = g1.edges();
  const auto& b = g2.edges();
  std::size_t i = 0, j = 0, diff = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
      ++diff;
    } else {
      ++j;
      ++diff;
    }
  }
  return static_cast<int>(diff + (a.size() - i) + (b.size() - j));
}

void save_dataset(const GraphDataset& dataset, const std::string& path) {
  dataset.validate();
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  json header;
  header["n"] = dataset.n;
  header["meta_name"] = dataset.meta ? json(dataset.meta_name) : json(nullptr);
  out << header.dump() << '\n';
  for (std::size_t k = 0; k < dataset.graphs.size(); ++k) {
    json line;
    line["id"] = k;
    json edges = json::array();
    for (const auto& [i, j] : dataset.graphs[k].edges()) edges.push_back({i, j});
    line["edges"] = std::move(edges);
    line["meta"] = dataset.meta ? json((*dataset.meta)[k]) : json(nullptr);
    out << line.dump() << '\n';
  }
  if (!out) throw IoFailure("write to '" + path + "' failed");
}

GraphDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");

  std::string line;
  std::size_t line_no = 0;

  auto next_json = [&](json& j) -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw SchemaViolation(line_no, "<json>", e.what());
      }
      return true;
    }
    return false;
  };

  json header;
  if (!next_json(header)) throw SchemaViolation(0, "header", "empty file");
  if (!header.is_object() || !header.contains("n") || !header.contains("meta_name"))
    throw SchemaViolation(line_no, "header", "expected {\"n\": int, \"meta_name\": string|null}");
  if (!header["n"].is_number_integer() || header["n"].get<int>() < 1)
    throw SchemaViolation(line_no, "n", "must be a positive integer");

  GraphDataset out;
  out.n = header["n"].get<int>();
  const bool has_meta = !header["meta_name"].is_null();
  if (has_meta) {
    if (!header["meta_name"].is_string())
      throw SchemaViolation(line_no, "meta_name", "must be string or null");
    out.meta_name = header["meta_name"].get<std::string>();
    out.meta = std::vector<double>();
  }

  json rec;
  while (next_json(rec)) {
    if (!rec.is_object() || !rec.contains("id") || !rec.contains("edges") || !rec.contains("meta"))
      throw SchemaViolation(line_no, "record", "expected {\"id\", \"edges\", \"meta\"}");
    if (!rec["id"].is_number_integer() ||
        rec["id"].get<long long>() != static_cast<long long>(out.graphs.size()))
      throw SchemaViolation(line_no, "id", "ids must be consecutive from 0");
    if (!rec["edges"].is_array()) throw SchemaViolation(line_no, "edges", "must be an array");

    std::vector<Graph::Edge> edges;
    for (const auto& e : rec["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
          !e[1].is_number_integer())
        throw SchemaViolation(line_no, "edges", "each edge must be [i, j]");
      const int i = e[0].get<int>();
      const int j = e[1].get<int>();
      if (i >= j) throw SchemaViolation(line_no, "edges", "require i < j");
      if (i < 0 || j >= out.n) throw SchemaViolation(line_no, "edges", "node index out of range");
      edges.emplace_back(i, j);
    }
    try {
      out.graphs.emplace_back(out.n, std::move(edges));
    } catch (const std::invalid_argument& e) {
      throw SchemaViolation(line_no, "edges", e.what());
    }

    if (has_meta) {
      if (!rec["meta"].is_number())
        throw SchemaViolation(line_no, "meta", "header declares meta; expected a number");
      out.meta->push_back(rec["meta"].get<double>());
    } else if (!rec["meta"].is_null()) {
      throw SchemaViolation(line_no, "meta", "header declares no meta; expected null");
    }
  }
  out.validate();
  return out;
}

GraphDataset ingest_dot_bracket_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");

  GraphDataset out;
  std::vector<double> energies;
  bool any_energy = false;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_len = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string structure, energy_token, extra;
    if (!(fields >> structure)) continue;  // blank line

    std::size_t len = structure.size();
    Graph g = [&] {
      try {
        return parse_dot_bracket(structure);
      } catch (const UnbalancedBrackets& e) {
        throw SchemaViolation(line_no, "structure",
                              "unbalanced brackets at column " + std::to_string(e.position + 1));
      } catch (const IllegalCharacter& e) {
        throw SchemaViolation(line_no, "structure",
                              std::string("illegal character '") + e.character + "' at column " +
                                  std::to_string(e.position + 1));
      }
    }();

    if (out.graphs.empty()) {
      expected_len = len;
      out.n = static_cast<int>(len);
    } else if (len != expected_len) {
      throw NonUniformLength(line_no, len, expected_len);
    }

    double energy = 0.0;
    bool has_energy = false;
    if (fields >> energy_token) {
      const char* begin = energy_token.data();
      const char* end = begin + energy_token.size();
      auto [ptr, ec] = std::from_chars(begin, end, energy);
      if (ec != std::errc() || ptr != end)
        throw SchemaViolation(line_no, "energy", "malformed energy token '" + energy_token + "'");
      has_energy = true;
      if (fields >> extra)
        throw SchemaViolation(line_no, "energy", "unexpected trailing token '" + extra + "'");
    }

    if (out.graphs.empty())
      any_energy = has_energy;
    else if (has_energy != any_energy)
      throw SchemaViolation(line_no, "energy", "energies must be present on all lines or none");

    out.graphs.push_back(std::move(g));
    if (has_energy) energies.push_back(energy);
  }

  if (out.graphs.empty()) throw SchemaViolation(0, "file", "no structures found");
  if (any_energy) {
    out.meta = std::move(energies);
    out.meta_name = "energy";
  }
  out.validate();
  return out;
}

}  // namespace gsae
