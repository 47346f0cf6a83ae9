#include "gsae/gsae_model.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "gsae/errors.hpp"
#include "gsae/random.hpp"
#include "nlohmann/json.hpp"

namespace gsae {

using json = nlohmann::json;

void GsaeConfig::validate() const {
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (lr <= 0.0) throw ConfigError("lr must be > 0");
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (batchnorm)");
  if (hidden_dims.empty()) throw ConfigError("hidden_dims must be nonempty");
  for (int h : hidden_dims)
    if (h < 1) throw ConfigError("hidden dims must be positive");
  if (history_every < 1) throw ConfigError("history_every must be >= 1");
}

GsaeModel::GsaeModel(const ScatteringManifest& manifest, const GsaeConfig& cfg)
    : manifest_(manifest), cfg_(cfg) {
  cfg_.validate();
  Rng rng(stage_seed(cfg.seed, "gsae-init"));

  int in = manifest.feature_len;
  for (int h : cfg.hidden_dims) {
    encoder_.add(std::make_unique<nn::Dense>(in, h, rng));
    encoder_.add(std::make_unique<nn::BatchNorm>(h));
    encoder_.add(std::make_unique<nn::Relu>());
    in = h;
  }
  mu_head_.add(std::make_unique<nn::Dense>(in, cfg.latent_dim, rng));
  logvar_head_.add(std::make_unique<nn::Dense>(in, cfg.latent_dim, rng));

  const int dec_hidden = cfg.hidden_dims.back();
  decoder_.add(std::make_unique<nn::Dense>(cfg.latent_dim, dec_hidden, rng));
  decoder_.add(std::make_unique<nn::Relu>());
  decoder_.add(std::make_unique<nn::Dense>(dec_hidden, manifest.feature_len, rng));

  regressor_.add(std::make_unique<nn::Dense>(cfg.latent_dim, dec_hidden, rng));
  regressor_.add(std::make_unique<nn::Relu>());
  regressor_.add(std::make_unique<nn::Dense>(dec_hidden, 1, rng));
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> GsaeModel::encode(const Eigen::MatrixXd& x,
                                                              bool train) {
  if (x.cols() != manifest_.feature_len)
    throw ShapeMismatch("expected feature length " + std::to_string(manifest_.feature_len) +
                        ", got " + std::to_string(x.cols()));
  const Eigen::MatrixXd h = encoder_.forward(x, train);
  return {mu_head_.forward(h, train), logvar_head_.forward(h, train)};
}

Eigen::MatrixXd GsaeModel::decode(const Eigen::MatrixXd& z, bool train) {
  return decoder_.forward(z, train);
}

Eigen::MatrixXd GsaeModel::regress(const Eigen::MatrixXd& z, bool train) {
  return regressor_.forward(z, train);
}

Eigen::MatrixXd GsaeModel::reparameterize(const Eigen::MatrixXd& mu,
                                          const Eigen::MatrixXd& logvar,
                                          const Eigen::MatrixXd& noise) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols() || mu.rows() != noise.rows() ||
      mu.cols() != noise.cols())
    throw ShapeMismatch("reparameterize operands");
  return mu + ((logvar.array() * 0.5).exp() * noise.array()).matrix();
}

GsaeModel::LossBreakdown GsaeModel::loss_and_gradients(const Eigen::MatrixXd& batch,
                                                       const Eigen::VectorXd* targets,
                                                       const Eigen::MatrixXd& noise) {
  if (cfg_.alpha > 0.0 && targets == nullptr) throw MissingTargets();

  auto [mu, logvar] = encode(batch, true);
  const Eigen::MatrixXd z = cfg_.variational ? reparameterize(mu, logvar, noise) : mu;

  LossBreakdown out;
  const nn::LossResult recon = nn::mse_loss(decode(z, true), batch);
  out.recon = recon.value;
  Eigen::MatrixXd dz = decoder_.backward(recon.grad);

  if (cfg_.alpha > 0.0) {
    Eigen::MatrixXd t = (targets->array() - target_mean_).matrix() / target_std_;
    const nn::LossResult pred = nn::mse_loss(regress(z, true), t);
    out.pred = pred.value;
    dz += regressor_.backward(cfg_.alpha * pred.grad);
  }

  const nn::KlResult kl = nn::kl_gaussian(mu, logvar);
  out.kl = kl.value;

  Eigen::MatrixXd dmu = dz + cfg_.beta * kl.grad_mu;
  Eigen::MatrixXd dlogvar = cfg_.beta * kl.grad_logvar;
  if (cfg_.variational)
    dlogvar += (dz.array() * noise.array() * 0.5 * (logvar.array() * 0.5).exp()).matrix();

  const Eigen::MatrixXd dh = mu_head_.backward(dmu) + logvar_head_.backward(dlogvar);
  encoder_.backward(dh);

  out.total = out.recon + cfg_.alpha * out.pred + cfg_.beta * out.kl;
  return out;
}

Eigen::MatrixXd GsaeModel::embed(const Eigen::MatrixXd& x) {
  return encode(x, false).first;
}

Eigen::VectorXd GsaeModel::predict_energy(const Eigen::MatrixXd& x, bool allow_untrained) {
  if (cfg_.alpha == 0.0 && !allow_untrained) throw RegressorUntrained();
  const Eigen::MatrixXd mu = embed(x);
  const Eigen::MatrixXd raw = regressor_.forward(mu, false);
  return (raw.col(0).array() * target_std_ + target_mean_).matrix();
}

std::vector<nn::Param*> GsaeModel::params() {
  std::vector<nn::Param*> out;
  for (nn::Mlp* m : {&encoder_, &mu_head_, &logvar_head_, &decoder_, &regressor_})
    for (nn::Param* p : m->params()) out.push_back(p);
  return out;
}

void GsaeModel::zero_grad() {
  for (nn::Param* p : params()) p->zero_grad();
}

void GsaeModel::set_target_stats(double mean, double stddev) {
  target_mean_ = mean;
  target_std_ = stddev;
}

namespace {

json config_to_json(const GsaeConfig& c) {
  return {{"latent_dim", c.latent_dim},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"lr", c.lr},
          {"iterations", c.iterations},
          {"batch_size", c.batch_size},
          {"hidden_dims", c.hidden_dims},
          {"seed", c.seed},
          {"variational", c.variational},
          {"standardize_targets", c.standardize_targets},
          {"history_every", c.history_every}};
}

GsaeConfig config_from_json(const json& j) {
  GsaeConfig c;
  c.latent_dim = j.at("latent_dim").get<int>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.lr = j.at("lr").get<double>();
  c.iterations = j.at("iterations").get<long>();
  c.batch_size = j.at("batch_size").get<int>();
  c.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.variational = j.at("variational").get<bool>();
  c.standardize_targets = j.at("standardize_targets").get<bool>();
  c.history_every = j.at("history_every").get<long>();
  return c;
}

}  // namespace

void GsaeModel::save(const std::string& path, const nn::Adam* optimizer) const {
  json j;
  j["schema"] = "gsae-checkpoint-v1";
  j["config"] = config_to_json(cfg_);
  j["manifest"] = json::parse(manifest_.to_json());
  j["encoder"] = encoder_.state();
  j["mu_head"] = mu_head_.state();
  j["logvar_head"] = logvar_head_.state();
  j["decoder"] = decoder_.state();
  j["regressor"] = regressor_.state();
  j["target_mean"] = target_mean_;
  j["target_std"] = target_std_;
  j["trained"] = trained_;
  if (optimizer) j["optimizer"] = optimizer->state();
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  out << j.dump() << '\n';
  if (!out) throw IoFailure("write to '" + path + "' failed");
}

GsaeModel GsaeModel::load(const std::string& path, nn::Adam* optimizer) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  json j = json::parse(in);
  if (j.value("schema", "") != "gsae-checkpoint-v1")
    throw ConfigError("not a gsae checkpoint: " + path);

  GsaeModel m;
  m.cfg_ = config_from_json(j.at("config"));
  m.manifest_ = ScatteringManifest::parse_json(j.at("manifest").dump());
  m.encoder_ = nn::Mlp::from_state(j.at("encoder"));
  m.mu_head_ = nn::Mlp::from_state(j.at("mu_head"));
  m.logvar_head_ = nn::Mlp::from_state(j.at("logvar_head"));
  m.decoder_ = nn::Mlp::from_state(j.at("decoder"));
  m.regressor_ = nn::Mlp::from_state(j.at("regressor"));
  m.target_mean_ = j.at("target_mean").get<double>();
  m.target_std_ = j.at("target_std").get<double>();
  m.trained_ = j.at("trained").get<bool>();
  if (optimizer && j.contains("optimizer")) optimizer->load_state(j.at("optimizer"), m.params());
  return m;
}

GsaeTrainResult train_gsae(const Eigen::MatrixXd& x,
                           const std::optional<Eigen::VectorXd>& meta,
                           const ScatteringManifest& manifest, const GsaeConfig& cfg) {
  cfg.validate();
  if (x.rows() < cfg.batch_size)
    throw ShapeMismatch("row count " + std::to_string(x.rows()) + " below batch size " +
                        std::to_string(cfg.batch_size));
  if (cfg.alpha > 0.0 && !meta) throw MissingTargets();
  if (meta && meta->size() != x.rows())
    throw ShapeMismatch("meta length does not match row count");

  GsaeTrainResult result{GsaeModel(manifest, cfg), {}};
  GsaeModel& model = result.model;

  if (cfg.alpha > 0.0 && cfg.standardize_targets) {
    const double mean = meta->mean();
    const double var = (meta->array() - mean).square().sum() / meta->size();
    model.set_target_stats(mean, var > 0.0 ? std::sqrt(var) : 1.0);
  }

  Rng shuffle_rng(stage_seed(cfg.seed, "gsae-shuffle"));
  Rng noise_rng(stage_seed(cfg.seed, "gsae-noise"));
  nn::Adam optimizer(cfg.lr);
  const std::vector<nn::Param*> params = model.params();

  const int rows = static_cast<int>(x.rows());
  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);
  int cursor = rows;  // force an initial shuffle

  Eigen::MatrixXd batch(cfg.batch_size, x.cols());
  Eigen::VectorXd targets(cfg.batch_size);
  Eigen::MatrixXd noise(cfg.batch_size, cfg.latent_dim);

  for (long iter = 1; iter <= cfg.iterations; ++iter) {
    if (cursor + cfg.batch_size > rows) {
      for (int i = rows - 1; i > 0; --i) {
        const int j = static_cast<int>(shuffle_rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[i], order[j]);
      }
      cursor = 0;
    }
    for (int b = 0; b < cfg.batch_size; ++b) {
      const int idx = order[cursor + b];
      batch.row(b) = x.row(idx);
      if (meta) targets(b) = (*meta)(idx);
    }
    cursor += cfg.batch_size;

    if (cfg.variational)
      for (int r = 0; r < cfg.batch_size; ++r)
        for (int c = 0; c < cfg.latent_dim; ++c) noise(r, c) = noise_rng.normal();
    else
      noise.setZero();

    model.zero_grad();
    const GsaeModel::LossBreakdown loss =
        model.loss_and_gradients(batch, meta ? &targets : nullptr, noise);
    if (!std::isfinite(loss.total)) throw NonFiniteLoss(iter);
    optimizer.step(params);

    if (iter % cfg.history_every == 0 || iter == cfg.iterations)
      result.history.push_back({iter, loss.total, loss.recon, loss.pred, loss.kl});
  }

  model.mark_trained();
  return result;
}

}  // namespace gsae
