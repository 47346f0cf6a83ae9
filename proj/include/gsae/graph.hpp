#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gsae {

/// Undirected simple graph on a fixed labeled node set. Edges are stored
/// canonically as sorted (i, j) pairs with i < j; no self-loops, no duplicates.
class Graph {
 public:
  using Edge = std::pair<int, int>;

  Graph() = default;

  /// Validates and canonicalizes. Throws std::invalid_argument on self-loops,
  /// out-of-range endpoints, duplicates, or n < 1.
  Graph(int n, std::vector<Edge> edges);

  int node_count() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  bool has_edge(int i, int j) const;

  /// Symmetric 0/1 adjacency matrix with zero diagonal.
  Eigen::MatrixXd adjacency() const;

  std::vector<int> degrees() const;

  /// New graph with node i relabeled to perm[i].
  Graph permuted(const std::vector<int>& perm) const;

  bool operator==(const Graph&) const = default;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;  // sorted, i < j
};

/// Ordered collection of graphs over one shared node set, each with an
/// optional scalar meta-property.
struct GraphDataset {
  int n = 0;
  std::vector<Graph> graphs;
  std::optional<std::vector<double>> meta;
  std::string meta_name;  // "energy", "step_index", ... ; empty iff meta absent

  std::size_t size() const { return graphs.size(); }

  /// Throws std::invalid_argument if any invariant is broken (mismatched node
  /// counts, meta length, meta/meta_name inconsistency).
  void validate() const;

  bool operator==(const GraphDataset&) const = default;
};

/// RNA sequence over {A, C, G, U}, uppercase, nonempty.
class RnaSequence {
 public:
  explicit RnaSequence(std::string bases);  // throws IllegalCharacter
  const std::string& bases() const { return bases_; }
  std::size_t length() const { return bases_.size(); }

 private:
  std::string bases_;
};

/// Watson-Crick plus wobble: AU, UA, GC, CG, GU, UG.
bool can_pair(char a, char b);

/// Dot-bracket string to graph: backbone chain edges (i, i+1) plus one edge
/// per stack-matched bracket pair. Accepts any balanced string; loop-length
/// validity is not checked here. Throws UnbalancedBrackets / IllegalCharacter.
Graph parse_dot_bracket(const std::string& s);

/// Random edge-flip trajectory: graph 0 is Erdos-Renyi(n, p); each subsequent
/// graph toggles one uniformly random node pair. meta = step index.
GraphDataset gen_toy_trajectory(int n, double p, int steps, std::uint64_t seed);

inline constexpr std::size_t kMaxFoldLength = 30;
inline constexpr int kMinHairpinLoop = 3;  // paired (i, j) require j - i >= 4

/// Exhaustively enumerates pseudoknot-free secondary structures of seq
/// (minimum hairpin loop 3), converts each to a graph, and assigns the toy
/// energy -(pair count). If more than max_structures exist, subsamples
/// uniformly without replacement with the given seed (dataset order preserved).
GraphDataset enumerate_folds(const RnaSequence& seq, std::size_t max_structures,
                             std::uint64_t seed);

/// Fixed-correspondence graph edit distance: |edges(g1) symmetric-difference
/// edges(g2)|. Throws NodeCountMismatch.
int ged_fixed(const Graph& g1, const Graph& g2);

/// JSON Lines dataset file. Header {"n": int, "meta_name": string|null}, then
/// one line per graph: {"id": int, "edges": [[i, j], ...], "meta": float|null}.
void save_dataset(const GraphDataset& dataset, const std::string& path);
GraphDataset load_dataset(const std::string& path);

/// One dot-bracket structure per line, optional trailing energy float
/// (ViennaRNA-style). All structures must share one length.
GraphDataset ingest_dot_bracket_file(const std::string& path);

}  // namespace gsae
