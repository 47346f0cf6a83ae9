#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "gsae/graph.hpp"

namespace gsae {

/// Symmetric-union kNN graph: (i, j) connected iff j is among the k nearest
/// Euclidean neighbors of i or vice versa. Ties break toward the lower index.
struct KnnGraph {
  int k = 0;
  Eigen::MatrixXd adjacency;  // 0/1, symmetric, zero diagonal
};

KnnGraph knn_graph(const Eigen::MatrixXd& embedding, int k);

struct SmoothnessReport {
  int k = 0;
  double dirichlet = 0.0;         // x^T L x
  double smoothness_index = 0.0;  // x^T L x / x^T x
  std::string signal_name;
};

/// Dirichlet energy and smoothness index of the raw (uncentered) signal on the
/// combinatorial Laplacian L = D - A of the embedding's kNN graph. Set
/// center_signal to mean-center first. Throws ZeroSignal when x^T x = 0.
SmoothnessReport smoothness(const Eigen::MatrixXd& embedding, const Eigen::VectorXd& signal,
                            int k, const std::string& signal_name = "",
                            bool center_signal = false);

double energy_mse_report(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

/// mean +/- sample std over repeated runs (the Table-style aggregate).
MeanStd aggregate_runs(const std::vector<double>& values);

struct PcaResult {
  Eigen::MatrixXd projected;            // rows x dims
  Eigen::VectorXd explained_variance;   // ratios of total variance, descending
  Eigen::MatrixXd components;           // cols x dims, unit columns
};

/// Mean-centered projection onto the top covariance eigenvectors. Sign
/// convention: the largest-magnitude entry of each component is positive.
PcaResult pca_project(const Eigen::MatrixXd& data, int dims);

/// Weisfeiler-Lehman subtree features from uniform initial labels. The label
/// compression table is shared across every graph featurized through the same
/// instance so count vectors are comparable.
class WlFeaturizer {
 public:
  /// Counts of every label observed at every iteration 0..h.
  std::map<int, long> features(const Graph& g, int iterations);

  /// Dense count matrix over a dataset (rows = graphs, one column per label
  /// the dictionary has seen, in label order).
  Eigen::MatrixXd feature_matrix(const std::vector<Graph>& graphs, int iterations);

  int label_count() const { return next_label_; }

 private:
  int compress(const std::string& key);
  std::unordered_map<std::string, int> table_;
  int next_label_ = 0;
};

/// Classical MDS of the pairwise fixed-correspondence GED matrix: double-
/// center the squared distances, eigendecompose, embed with the top-dims
/// nonnegative eigenvalues. All-zero distances yield a zero embedding.
Eigen::MatrixXd ged_mds_embedding(const GraphDataset& dataset, int dims);

/// Classical MDS of an arbitrary symmetric distance matrix.
Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& distances, int dims);

/// Element t = ged_fixed(graphs[t], graphs.back()); the last element is 0.
std::vector<int> trajectory_edit_profile(const std::vector<Graph>& graphs);

/// Spearman rank correlation between embedding distance and ged_fixed over
/// sampled graph pairs (the faithfulness report).
double faithfulness_spearman(const Eigen::MatrixXd& embedding, const GraphDataset& dataset,
                             int num_pairs, std::uint64_t seed);

}  // namespace gsae
