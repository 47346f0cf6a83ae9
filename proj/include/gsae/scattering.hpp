#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gsae/graph.hpp"

namespace gsae {

/// Lazy random walk diffusion operator P = (I + A D^-1) / 2. Column-stochastic;
/// diagonal entries >= 1/2.
struct LazyWalk {
  Eigen::MatrixXd p;
};

/// Dyadic diffusion wavelets Psi_j = P^(2^(j-1)) - P^(2^j), j = 1..j_max.
/// Columns of each Psi_j sum to zero and sum_j Psi_j = P - P^(2^j_max).
struct WaveletBank {
  int j_max = 0;
  std::vector<Eigen::MatrixXd> psi;
};

struct ScatteringConfig {
  int j_max = 0;   // wavelet scales J
  int q_max = 4;   // moment count Q
  std::vector<int> orders = {0, 1, 2};
  bool self_loop_isolated = false;  // patch isolated nodes with a self-loop

  /// Default J = ceil(log2(n)) clamped to [1, 8].
  static ScatteringConfig defaults_for(int n);

  void validate() const;
  bool has_order(int m) const;

  /// Feature-vector length for an n-node graph: n * Q * (#order-0 blocks +
  /// J * #order-1 + J(J-1)/2 * #order-2), counting only requested orders.
  int feature_length(int n) const;

  /// Per-dirac block length (feature_length / n).
  int block_length() const;
};

/// Layout descriptor exported next to every scattering matrix so downstream
/// consumers can interpret and re-check feature vectors.
struct ScatteringManifest {
  int n = 0;
  int j_max = 0;
  int q_max = 0;
  std::vector<int> orders;
  int feature_len = 0;
  bool self_loop_isolated = false;

  static ScatteringManifest from(int n, const ScatteringConfig& cfg);
  bool operator==(const ScatteringManifest&) const = default;

  std::string to_json() const;
  static ScatteringManifest parse_json(const std::string& text);
  void save(const std::string& path) const;
  static ScatteringManifest load(const std::string& path);
};

/// Throws IsolatedNode unless cfg requests the self-loop patch.
LazyWalk build_lazy_walk(const Graph& g, bool self_loop_isolated = false);

/// Psi_j computed via repeated squaring of P.
WaveletBank build_wavelets(const LazyWalk& walk, int j_max);

/// Unnormalized absolute moments: element q-1 is sum_i |x_i|^q, q = 1..Q.
Eigen::VectorXd moments(const Eigen::VectorXd& x, int q_max);

/// Scattering feature vector of one graph. Layout: per dirac signal d_i
/// (i ascending), order-0 block (Q), order-1 blocks (j ascending, Q each),
/// order-2 blocks (pairs j1 < j2 lexicographic, Q each), restricted to the
/// orders requested in cfg.
Eigen::VectorXd scatter_graph(const Graph& g, const ScatteringConfig& cfg);

/// Row k = scatter_graph(d.graphs[k], cfg). Reports the first failing graph
/// index on error.
Eigen::MatrixXd scatter_dataset(const GraphDataset& d, const ScatteringConfig& cfg);

}  // namespace gsae
