#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsae/nn.hpp"
#include "gsae/scattering.hpp"

namespace gsae {

struct GsaeConfig {
  int latent_dim = 25;
  double alpha = 0.0;  // regression weight
  double beta = 1.0;   // KL weight
  double lr = 1e-4;
  long iterations = 15000;
  int batch_size = 100;
  std::vector<int> hidden_dims = {400, 200};
  std::uint64_t seed = 0;
  bool variational = true;  // false trains with z = mu (the plain-AE variant)
  bool standardize_targets = false;
  long history_every = 100;

  void validate() const;
};

struct HistoryRow {
  long iteration = 0;
  double total = 0.0;
  double recon = 0.0;
  double pred = 0.0;
  double kl = 0.0;
};

/// Encoder E, variational heads, decoder D, and regressor H over scattering
/// feature vectors. Encoder blocks are dense -> batchnorm -> relu; decoder and
/// regressor are two dense layers with relu on the hidden one.
class GsaeModel {
 public:
  GsaeModel(const ScatteringManifest& manifest, const GsaeConfig& cfg);

  /// (mu, logvar), each batch x latent_dim.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> encode(const Eigen::MatrixXd& x, bool train);

  Eigen::MatrixXd decode(const Eigen::MatrixXd& z, bool train);
  Eigen::MatrixXd regress(const Eigen::MatrixXd& z, bool train);

  /// z = mu + exp(logvar / 2) * noise (elementwise).
  static Eigen::MatrixXd reparameterize(const Eigen::MatrixXd& mu,
                                        const Eigen::MatrixXd& logvar,
                                        const Eigen::MatrixXd& noise);

  struct LossBreakdown {
    double total = 0.0;
    double recon = 0.0;
    double pred = 0.0;
    double kl = 0.0;
  };

  /// Full combined loss recon + alpha*pred + beta*kl on one batch, with
  /// gradients accumulated into all parameters. Targets are required when
  /// alpha > 0 (standardized internally when configured). Noise must be
  /// batch x latent_dim; pass zeros for the deterministic path.
  LossBreakdown loss_and_gradients(const Eigen::MatrixXd& batch,
                                   const Eigen::VectorXd* targets,
                                   const Eigen::MatrixXd& noise);

  /// Noise-free eval-mode embedding: mu rows.
  Eigen::MatrixXd embed(const Eigen::MatrixXd& x);

  /// H(mu) per row, in raw target units. Throws RegressorUntrained when the
  /// model was trained with alpha = 0 unless allow_untrained (the untrained-
  /// regressor readout is what the alpha-ablation comparisons report).
  Eigen::VectorXd predict_energy(const Eigen::MatrixXd& x, bool allow_untrained = false);

  std::vector<nn::Param*> params();
  void zero_grad();

  const ScatteringManifest& manifest() const { return manifest_; }
  const GsaeConfig& config() const { return cfg_; }

  void set_target_stats(double mean, double stddev);
  double target_mean() const { return target_mean_; }
  double target_std() const { return target_std_; }
  void mark_trained() { trained_ = true; }
  bool trained() const { return trained_; }

  void save(const std::string& path, const nn::Adam* optimizer = nullptr) const;
  static GsaeModel load(const std::string& path, nn::Adam* optimizer = nullptr);

 private:
  GsaeModel() = default;

  ScatteringManifest manifest_;
  GsaeConfig cfg_;
  nn::Mlp encoder_;
  nn::Mlp mu_head_;
  nn::Mlp logvar_head_;
  nn::Mlp decoder_;
  nn::Mlp regressor_;
  double target_mean_ = 0.0;
  double target_std_ = 1.0;
  bool trained_ = false;
};

struct GsaeTrainResult {
  GsaeModel model;
  std::vector<HistoryRow> history;
};

/// Runs cfg.iterations minibatch Adam steps over shuffled training rows
/// (shuffle once per epoch, remainder smaller than the batch dropped).
/// History is recorded every cfg.history_every steps. Deterministic given
/// cfg.seed. Throws MissingTargets / NonFiniteLoss.
GsaeTrainResult train_gsae(const Eigen::MatrixXd& x,
                           const std::optional<Eigen::VectorXd>& meta,
                           const ScatteringManifest& manifest, const GsaeConfig& cfg);

}  // namespace gsae
