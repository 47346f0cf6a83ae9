#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gsae/graph.hpp"
#include "gsae/gsae_model.hpp"
#include "gsae/nn.hpp"
#include "gsae/scattering.hpp"

namespace gsae {

/// Reconstructed adjacency: symmetric, zero diagonal, entries strictly in
/// (0, 1) by construction (clamped-logit sigmoid of an inner product).
struct SoftAdjacency {
  Eigen::MatrixXd a_hat;
};

struct SinConfig {
  int rank = 16;  // node-embedding width r in sigma(Z Z^T)
  std::vector<int> hidden_dims = {400, 200};
  double tau = 0.5;  // binarization threshold
  double lr = 1e-4;
  int batch_size = 100;
  long pretrain_max_iterations = 20000;
  long pretrain_window = 500;      // convergence check granularity
  double pretrain_rel_tol = 1e-4;  // relative window-mean improvement
  long refine_iterations = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Scattering inversion network U: two (dense -> relu -> batchnorm) blocks and
/// a final dense layer expanding to an n x r node-embedding matrix, decoded to
/// a soft adjacency by sigmoid(Z Z^T).
class SinModel {
 public:
  SinModel(const ScatteringManifest& manifest, const SinConfig& cfg);

  /// Eval-mode inversion of one scattering vector.
  SoftAdjacency invert(const Eigen::VectorXd& s);

  /// BCE between predicted and true upper-triangle edge bits on one batch;
  /// gradients accumulate into the parameters.
  double pretrain_loss_and_gradients(const Eigen::MatrixXd& batch,
                                     const Eigen::MatrixXd& target_bits);

  /// Re-scattering MSE: mean over the batch of the squared L2 distance between
  /// each input vector and the scattering of its reconstructed soft adjacency
  /// (lazy walk built from A-hat with degrees deg + 1e-6 so gradients flow).
  double refine_loss_and_gradients(const Eigen::MatrixXd& batch);

  /// Per-entry re-scattering MSE of the soft adjacency in eval mode (loss
  /// normalized by row count times feature length).
  double soft_rescatter_mse(const Eigen::MatrixXd& rows);

  /// Per-entry re-scattering MSE where each inversion is binarized first and
  /// re-scattered as a discrete graph (isolated nodes patched with self-loops
  /// so degenerate predictions stay reportable).
  double binarized_rescatter_mse(const Eigen::MatrixXd& rows);

  std::vector<nn::Param*> params();
  void zero_grad();

  const ScatteringManifest& manifest() const { return manifest_; }
  const SinConfig& config() const { return cfg_; }
  void mark_pretrained() { pretrained_ = true; }
  bool pretrained() const { return pretrained_; }

  void save(const std::string& path) const;
  static SinModel load(const std::string& path);

 private:
  SinModel() = default;

  Eigen::MatrixXd node_embedding(const Eigen::RowVectorXd& expanded) const;  // n x r

  ScatteringManifest manifest_;
  SinConfig cfg_;
  nn::Mlp mlp_;  // blocks + expand layer
  bool pretrained_ = false;

  friend struct SinModelAccess;
};

/// Edge (i, j) present iff a_hat(i, j) >= tau (ties included). Requires
/// 0 < tau < 1.
Graph binarize(const SoftAdjacency& a, double tau);

/// Scattering features of an arbitrary soft adjacency through the relaxed
/// lazy walk (degrees regularized by 1e-6). This is the map the refinement
/// loss differentiates through; on a 0/1 adjacency it agrees with
/// scatter_graph up to the degree regularizer.
Eigen::VectorXd rescatter_soft(const Eigen::MatrixXd& a_hat, const ScatteringConfig& cfg);

struct SinTrainStats {
  long iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Adam on the BCE edge objective until the window-mean improvement falls
/// below cfg.pretrain_rel_tol or the iteration cap is reached.
SinTrainStats pretrain_sin(SinModel& model, const GraphDataset& dataset,
                           const Eigen::MatrixXd& scattering_rows);

/// Adam on the re-scattering MSE for cfg.refine_iterations steps. initial/
/// final losses are eval-mode soft re-scattering MSEs over the given rows.
SinTrainStats refine_sin(SinModel& model, const Eigen::MatrixXd& scattering_rows);

/// Graphs decoded along the latent segment from z_a to z_b (inclusive).
/// Endpoints use exactly z_a and z_b. steps >= 2.
std::vector<Graph> generate_trajectory(GsaeModel& gsae, SinModel& sin,
                                       const Eigen::VectorXd& z_a, const Eigen::VectorXd& z_b,
                                       int steps);

}  // namespace gsae
