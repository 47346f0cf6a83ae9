#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "nlohmann/json_fwd.hpp"

namespace gsae {
class Rng;
}

namespace gsae::nn {

/// One trainable tensor plus its gradient accumulator.
struct Param {
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  explicit Param(Eigen::MatrixXd v)
      : value(std::move(v)), grad(Eigen::MatrixXd::Zero(value.rows(), value.cols())) {}
  void zero_grad() { grad.setZero(); }
};

/// Batched layer: rows are samples, columns features. Train-mode forward
/// caches intermediates for one backward pass; gradients accumulate into the
/// owned Params, and the input gradient is returned.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool train) = 0;
  virtual Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual nlohmann::json state() const = 0;
};

/// y = x W^T + b.
class Dense : public Layer {
 public:
  Dense(int in_dim, int out_dim, Rng& rng);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool train) override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  nlohmann::json state() const override;

  int in_dim() const { return static_cast<int>(w_.value.cols()); }
  int out_dim() const { return static_cast<int>(w_.value.rows()); }

  Param w_;  // out x in
  Param b_;  // out x 1

 private:
  Eigen::MatrixXd x_cache_;
  bool has_cache_ = false;
};

class Relu : public Layer {
 public:
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool train) override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) override;
  nlohmann::json state() const override;

 private:
  Eigen::MatrixXd mask_;
  bool has_cache_ = false;
};

class Sigmoid : public Layer {
 public:
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool train) override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) override;
  nlohmann::json state() const override;

 private:
  Eigen::MatrixXd y_cache_;
  bool has_cache_ = false;
};

/// Per-feature batch normalization. Train mode normalizes with batch
/// statistics (biased variance) and updates exponential running averages;
/// eval mode uses the running statistics. Train mode requires batch >= 2.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(int dim);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool train) override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) override;
  std::vector<Param*> params() override { return {&gamma_, &beta_}; }
  nlohmann::json state() const override;

  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  Param gamma_;  // 1 x dim
  Param beta_;   // 1 x dim
  Eigen::RowVectorXd running_mean_;
  Eigen::RowVectorXd running_var_;

 private:
  Eigen::MatrixXd xhat_cache_;
  Eigen::RowVectorXd invstd_cache_;
  bool has_cache_ = false;
};

/// Sequential stack of layers.
class Mlp {
 public:
  Mlp() = default;
  Mlp(Mlp&&) = default;
  Mlp& operator=(Mlp&&) = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool train);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out);

  std::vector<Param*> params();
  void zero_grad();

  nlohmann::json state() const;
  static Mlp from_state(const nlohmann::json& j);

  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

struct LossResult {
  double value = 0.0;
  Eigen::MatrixXd grad;
};

/// Mean over batch rows of the squared L2 distance; gradient 2(pred-target)/N.
LossResult mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

/// Mean over all entries of -[t log p + (1-t) log(1-p)] with p clamped to
/// [1e-7, 1 - 1e-7]. Clamped entries get zero gradient.
LossResult bce_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

struct KlResult {
  double value = 0.0;
  Eigen::MatrixXd grad_mu;
  Eigen::MatrixXd grad_logvar;
};

/// KL(N(mu, exp(logvar)) || N(0, 1)) summed over latent dims, averaged over
/// batch rows: -1/2 sum (1 + logvar - mu^2 - exp(logvar)) / N.
KlResult kl_gaussian(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar);

/// Standard bias-corrected Adam over a fixed parameter list.
class Adam {
 public:
  explicit Adam(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Param*>& params);

  long step_count() const { return t_; }

  nlohmann::json state() const;
  void load_state(const nlohmann::json& j, const std::vector<Param*>& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

// Matrix <-> JSON helpers shared by all checkpoint writers. Row-major data.
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace gsae::nn
