#include "gsae/nn.hpp"

#include <cmath>

#include "gsae/errors.hpp"
#include "gsae/random.hpp"
#include "nlohmann/json.hpp"

namespace gsae::nn {

using json = nlohmann::json;

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ConfigError("matrix data length does not match shape");
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  return m;
}

Dense::Dense(int in_dim, int out_dim, Rng& rng)
    : w_(Eigen::MatrixXd(out_dim, in_dim)), b_(Eigen::MatrixXd(out_dim, 1)) {
  if (in_dim < 1 || out_dim < 1) throw ShapeMismatch("dense dims must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (Eigen::Index r = 0; r < w_.value.rows(); ++r)
    for (Eigen::Index c = 0; c < w_.value.cols(); ++c)
      w_.value(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
  for (Eigen::Index r = 0; r < b_.value.rows(); ++r)
    b_.value(r, 0) = (2.0 * rng.uniform() - 1.0) * bound;
}

Eigen::MatrixXd Dense::forward(const Eigen::MatrixXd& x, bool train) {
  if (x.cols() != w_.value.cols())
    throw ShapeMismatch("dense expects " + std::to_string(w_.value.cols()) + " inputs, got " +
                        std::to_string(x.cols()));
  if (train) {
    x_cache_ = x;
    has_cache_ = true;
  } else {
    has_cache_ = false;
  }
  return (x * w_.value.transpose()).rowwise() + b_.value.col(0).transpose();
}

Eigen::MatrixXd Dense::backward(const Eigen::MatrixXd& grad_out) {
  if (!has_cache_) throw BackwardWithoutForward();
  if (grad_out.rows() != x_cache_.rows() || grad_out.cols() != w_.value.rows())
    throw ShapeMismatch("dense backward gradient shape");
  w_.grad += grad_out.transpose() * x_cache_;
  b_.grad += grad_out.colwise().sum().transpose();
  return grad_out * w_.value;
}

json Dense::state() const {
  return {{"type", "dense"}, {"w", matrix_to_json(w_.value)}, {"b", matrix_to_json(b_.value)}};
}

Eigen::MatrixXd Relu::forward(const Eigen::MatrixXd& x, bool train) {
  if (train) {
    mask_ = (x.array() > 0.0).cast<double>();
    has_cache_ = true;
  } else {
    has_cache_ = false;
  }
  return x.cwiseMax(0.0);
}

Eigen::MatrixXd Relu::backward(const Eigen::MatrixXd& grad_out) {
  if (!has_cache_) throw BackwardWithoutForward();
  if (grad_out.rows() != mask_.rows() || grad_out.cols() != mask_.cols())
    throw ShapeMismatch("relu backward gradient shape");
  return grad_out.cwiseProduct(mask_);
}

json Relu::state() const { return {{"type", "relu"}}; }

Eigen::MatrixXd Sigmoid::forward(const Eigen::MatrixXd& x, bool train) {
  Eigen::MatrixXd y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double v = x(r, c);
      y(r, c) = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
  if (train) {
    y_cache_ = y;
    has_cache_ = true;
  } else {
    has_cache_ = false;
  }
  return y;
}

Eigen::MatrixXd Sigmoid::backward(const Eigen::MatrixXd& grad_out) {
  if (!has_cache_) throw BackwardWithoutForward();
  if (grad_out.rows() != y_cache_.rows() || grad_out.cols() != y_cache_.cols())
    throw ShapeMismatch("sigmoid backward gradient shape");
  return grad_out.cwiseProduct(
      y_cache_.cwiseProduct((Eigen::MatrixXd::Ones(y_cache_.rows(), y_cache_.cols()) - y_cache_)));
}

json Sigmoid::state() const { return {{"type", "sigmoid"}}; }

BatchNorm::BatchNorm(int dim)
    : gamma_(Eigen::MatrixXd::Ones(1, dim)),
      beta_(Eigen::MatrixXd::Zero(1, dim)),
      running_mean_(Eigen::RowVectorXd::Zero(dim)),
      running_var_(Eigen::RowVectorXd::Ones(dim)) {
  if (dim < 1) throw ShapeMismatch("batchnorm dim must be positive");
}

Eigen::MatrixXd BatchNorm::forward(const Eigen::MatrixXd& x, bool train) {
  if (x.cols() != gamma_.value.cols())
    throw ShapeMismatch("batchnorm expects " + std::to_string(gamma_.value.cols()) +
                        " features, got " + std::to_string(x.cols()));
  const Eigen::RowVectorXd gamma_row = gamma_.value.row(0);
  const Eigen::RowVectorXd beta_row = beta_.value.row(0);

  if (!train) {
    has_cache_ = false;
    const Eigen::RowVectorXd invstd = (running_var_.array() + kEps).sqrt().inverse().matrix();
    Eigen::MatrixXd xhat =
        ((x.rowwise() - running_mean_).array().rowwise() * invstd.array()).matrix();
    return ((xhat.array().rowwise() * gamma_row.array()).rowwise() + beta_row.array()).matrix();
  }

  const Eigen::Index n = x.rows();
  if (n < 2) throw ShapeMismatch("batchnorm train mode requires batch >= 2");

  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::RowVectorXd var =
      centered.array().square().colwise().sum() / static_cast<double>(n);

  invstd_cache_ = (var.array() + kEps).sqrt().inverse().matrix();
  xhat_cache_ = (centered.array().rowwise() * invstd_cache_.array()).matrix();
  has_cache_ = true;

  running_mean_ = (1.0 - kMomentum) * running_mean_ + kMomentum * mean;
  running_var_ = (1.0 - kMomentum) * running_var_ + kMomentum * var;

  return ((xhat_cache_.array().rowwise() * gamma_row.array()).rowwise() + beta_row.array())
      .matrix();
}

Eigen::MatrixXd BatchNorm::backward(const Eigen::MatrixXd& grad_out) {
  if (!has_cache_) throw BackwardWithoutForward();
  if (grad_out.rows() != xhat_cache_.rows() || grad_out.cols() != xhat_cache_.cols())
    throw ShapeMismatch("batchnorm backward gradient shape");

  const double n = static_cast<double>(grad_out.rows());
  const Eigen::RowVectorXd dbeta = grad_out.colwise().sum();
  const Eigen::RowVectorXd dgamma = grad_out.cwiseProduct(xhat_cache_).colwise().sum();
  gamma_.grad += dgamma;
  beta_.grad += dbeta;

  // dx = gamma * invstd / n * (n dy - sum(dy) - xhat * sum(dy xhat))
  Eigen::MatrixXd dx = n * grad_out;
  dx.rowwise() -= dbeta;
  dx -= (xhat_cache_.array().rowwise() * dgamma.array()).matrix();
  const Eigen::RowVectorXd scale =
      (gamma_.value.row(0).array() * invstd_cache_.array() / n).matrix();
  dx = (dx.array().rowwise() * scale.array()).matrix();
  return dx;
}

json BatchNorm::state() const {
  return {{"type", "batchnorm"},
          {"gamma", matrix_to_json(gamma_.value)},
          {"beta", matrix_to_json(beta_.value)},
          {"running_mean", matrix_to_json(running_mean_)},
          {"running_var", matrix_to_json(running_var_)}};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, bool train) {
  Eigen::MatrixXd h = x;
  for (auto& layer : layers_) h = layer->forward(h, train);
  return h;
}

Eigen::MatrixXd Mlp::backward(const Eigen::MatrixXd& grad_out) {
  Eigen::MatrixXd g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Param*> Mlp::params() {
  std::vector<Param*> out;
  for (auto& layer : layers_)
    for (Param* p : layer->params()) out.push_back(p);
  return out;
}

void Mlp::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

json Mlp::state() const {
  json layers = json::array();
  for (const auto& layer : layers_) layers.push_back(layer->state());
  return layers;
}

Mlp Mlp::from_state(const json& j) {
  Mlp mlp;
  for (const auto& entry : j) {
    const std::string type = entry.at("type").get<std::string>();
    if (type == "dense") {
      Rng rng(0);
      const Eigen::MatrixXd w = matrix_from_json(entry.at("w"));
      auto layer = std::make_unique<Dense>(static_cast<int>(w.cols()),
                                           static_cast<int>(w.rows()), rng);
      layer->w_.value = w;
      layer->b_.value = matrix_from_json(entry.at("b"));
      mlp.add(std::move(layer));
    } else if (type == "relu") {
      mlp.add(std::make_unique<Relu>());
    } else if (type == "sigmoid") {
      mlp.add(std::make_unique<Sigmoid>());
    } else if (type == "batchnorm") {
      const Eigen::MatrixXd gamma = matrix_from_json(entry.at("gamma"));
      auto layer = std::make_unique<BatchNorm>(static_cast<int>(gamma.cols()));
      layer->gamma_.value = gamma;
      layer->beta_.value = matrix_from_json(entry.at("beta"));
      layer->running_mean_ = matrix_from_json(entry.at("running_mean"));
      layer->running_var_ = matrix_from_json(entry.at("running_var"));
      mlp.add(std::move(layer));
    } else {
      throw ConfigError("unknown layer type '" + type + "'");
    }
  }
  return mlp;
}

LossResult mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeMismatch("mse operands");
  const double n = static_cast<double>(pred.rows());
  LossResult r;
  const Eigen::MatrixXd diff = pred - target;
  r.value = diff.squaredNorm() / n;
  r.grad = 2.0 * diff / n;
  return r;
}

LossResult bce_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeMismatch("bce operands");
  constexpr double lo = 1e-7;
  constexpr double hi = 1.0 - 1e-7;
  const double count = static_cast<double>(pred.size());
  LossResult r;
  r.grad = Eigen::MatrixXd::Zero(pred.rows(), pred.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      const double t = target(i, j);
      const double raw = pred(i, j);
      const double p = std::clamp(raw, lo, hi);
      total += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
      if (raw >= lo && raw <= hi) r.grad(i, j) = (p - t) / (p * (1.0 - p)) / count;
    }
  r.value = total / count;
  return r;
}

KlResult kl_gaussian(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols())
    throw ShapeMismatch("kl operands");
  const double n = static_cast<double>(mu.rows());
  KlResult r;
  const Eigen::ArrayXXd lv = logvar.array();
  r.value = (-0.5 * (1.0 + lv - mu.array().square() - lv.exp())).sum() / n;
  r.grad_mu = mu / n;
  r.grad_logvar = (0.5 * (lv.exp() - 1.0) / n).matrix();
  return r;
}

void Adam::step(const std::vector<Param*>& params) {
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Param* p : params) {
      m_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw ShapeMismatch("adam parameter list changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
      throw ShapeMismatch("adam gradient shape");
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    const Eigen::ArrayXXd mhat = m_[i].array() / bc1;
    const Eigen::ArrayXXd vhat = v_[i].array() / bc2;
    p.value.array() -= lr_ * mhat / (vhat.sqrt() + eps_);
  }
}

json Adam::state() const {
  json j;
  j["t"] = t_;
  j["lr"] = lr_;
  j["beta1"] = beta1_;
  j["beta2"] = beta2_;
  j["eps"] = eps_;
  json m = json::array(), v = json::array();
  for (const auto& x : m_) m.push_back(matrix_to_json(x));
  for (const auto& x : v_) v.push_back(matrix_to_json(x));
  j["m"] = std::move(m);
  j["v"] = std::move(v);
  return j;
}

void Adam::load_state(const json& j, const std::vector<Param*>& params) {
  t_ = j.at("t").get<long>();
  lr_ = j.at("lr").get<double>();
  beta1_ = j.at("beta1").get<double>();
  beta2_ = j.at("beta2").get<double>();
  eps_ = j.at("eps").get<double>();
  m_.clear();
  v_.clear();
  for (const auto& x : j.at("m")) m_.push_back(matrix_from_json(x));
  for (const auto& x : j.at("v")) v_.push_back(matrix_from_json(x));
  if (m_.size() != params.size()) throw ConfigError("adam state does not match parameter list");
}

}  // namespace gsae::nn
