#include "gsae/sin_model.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "gsae/errors.hpp"
#include "gsae/random.hpp"
#include "nlohmann/json.hpp"

namespace gsae {

using json = nlohmann::json;

void SinConfig::validate() const {
  if (rank < 1) throw ConfigError("rank must be >= 1");
  if (hidden_dims.empty()) throw ConfigError("hidden_dims must be nonempty");
  for (int h : hidden_dims)
    if (h < 1) throw ConfigError("hidden dims must be positive");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must be in (0, 1)");
  if (lr <= 0.0) throw ConfigError("lr must be > 0");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (batchnorm)");
  if (pretrain_max_iterations < 1 || refine_iterations < 0)
    throw ConfigError("iteration counts out of range");
  if (pretrain_window < 1) throw ConfigError("pretrain_window must be >= 1");
  if (pretrain_rel_tol <= 0.0) throw ConfigError("pretrain_rel_tol must be > 0");
}

namespace {

constexpr double kLogitClamp = 30.0;  // keeps sigma strictly inside (0, 1)
constexpr double kDegreeEps = 1e-6;   // soft-degree regularizer for D-hat

Eigen::MatrixXd sign_of(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

struct AdjacencyWork {
  Eigen::MatrixXd z;    // n x r
  Eigen::MatrixXd g;    // Z Z^T before clamping
  Eigen::MatrixXd sig;  // sigmoid(clamped G)
  Eigen::MatrixXd a_hat;
};

AdjacencyWork build_soft_adjacency(Eigen::MatrixXd z) {
  AdjacencyWork w;
  w.z = std::move(z);
  w.g = w.z * w.z.transpose();
  const Eigen::MatrixXd clamped = w.g.cwiseMax(-kLogitClamp).cwiseMin(kLogitClamp);
  w.sig = clamped.unaryExpr([](double v) {
    return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  });
  w.a_hat = 0.5 * (w.sig + w.sig.transpose());
  w.a_hat.diagonal().setZero();
  return w;
}

// d a_hat -> d z. Only entries of da_hat that the caller actually used need to
// be set; the diagonal is ignored by construction.
Eigen::MatrixXd soft_adjacency_backward(const AdjacencyWork& w, Eigen::MatrixXd da_hat) {
  da_hat.diagonal().setZero();
  const Eigen::MatrixXd dsig = 0.5 * (da_hat + da_hat.transpose());
  Eigen::MatrixXd dg =
      dsig.cwiseProduct(w.sig.cwiseProduct(Eigen::MatrixXd::Ones(w.sig.rows(), w.sig.cols()) -
                                           w.sig));
  // Clamp saturation: no gradient beyond the logit cap.
  dg = dg.cwiseProduct((w.g.cwiseAbs().array() < kLogitClamp).cast<double>().matrix());
  return (dg + dg.transpose()) * w.z;
}

struct ScatterWork {
  Eigen::MatrixXd a_hat;
  Eigen::VectorXd inv_deg;              // 1 / (rowsum + eps)
  std::vector<Eigen::MatrixXd> q;       // P^(2^k), k = 0..J
  std::vector<Eigen::MatrixXd> psi;     // Psi_j, j = 1..J
  std::vector<Eigen::MatrixXd> abs_psi;
  std::vector<Eigen::MatrixXd> cascade;  // Psi_j2 |Psi_j1| for j1 < j2
};

// Column moments of m written into feat at the given block offset, matching
// the scatter_graph layout (per-dirac stride block_len).
void fill_column_moments(const Eigen::MatrixXd& m, int q_max, Eigen::VectorXd& feat, int offset,
                         int block_len) {
  const int n = static_cast<int>(m.cols());
  Eigen::MatrixXd pow = m.cwiseAbs();
  const Eigen::MatrixXd abs_m = pow;
  for (int q = 1; q <= q_max; ++q) {
    if (q > 1) pow = pow.cwiseProduct(abs_m);
    const Eigen::RowVectorXd sums = pow.colwise().sum();
    for (int i = 0; i < n; ++i) feat(offset + i * block_len + (q - 1)) = sums(i);
  }
}

// Adjoint of fill_column_moments: d feat slice -> d m.
Eigen::MatrixXd column_moments_backward(const Eigen::MatrixXd& m, int q_max,
                                        const Eigen::VectorXd& dfeat, int offset, int block_len) {
  const int n = static_cast<int>(m.cols());
  const Eigen::MatrixXd abs_m = m.cwiseAbs();
  const Eigen::MatrixXd sgn = sign_of(m);
  Eigen::MatrixXd pow = Eigen::MatrixXd::Ones(m.rows(), m.cols());  // |m|^(q-1)
  Eigen::MatrixXd dm = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (int q = 1; q <= q_max; ++q) {
    if (q > 1) pow = pow.cwiseProduct(abs_m);
    Eigen::VectorXd colscale(n);
    for (int i = 0; i < n; ++i)
      colscale(i) = static_cast<double>(q) * dfeat(offset + i * block_len + (q - 1));
    dm += pow.cwiseProduct(sgn) * colscale.asDiagonal();
  }
  return dm;
}

Eigen::VectorXd soft_scatter_forward(Eigen::MatrixXd a_hat, const ScatteringConfig& cfg,
                                     ScatterWork& work) {
  const int n = static_cast<int>(a_hat.rows());
  const int j_max = cfg.j_max;
  const int q_max = cfg.q_max;
  const int block_len = cfg.block_length();

  work.a_hat = std::move(a_hat);
  const Eigen::VectorXd deg = work.a_hat.rowwise().sum();
  work.inv_deg = (deg.array() + kDegreeEps).inverse().matrix();

  Eigen::MatrixXd p =
      0.5 * (Eigen::MatrixXd::Identity(n, n) + work.a_hat * work.inv_deg.asDiagonal());
  work.q.clear();
  work.q.push_back(std::move(p));
  for (int k = 1; k <= j_max; ++k) work.q.push_back(work.q[k - 1] * work.q[k - 1]);

  work.psi.clear();
  work.abs_psi.clear();
  for (int j = 1; j <= j_max; ++j) {
    work.psi.push_back(work.q[j - 1] - work.q[j]);
    work.abs_psi.push_back(work.psi.back().cwiseAbs());
  }

  Eigen::VectorXd feat = Eigen::VectorXd::Zero(cfg.feature_length(n));
  int offset = 0;
  if (cfg.has_order(0)) {
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < q_max; ++k) feat(i * block_len + k) = 1.0;
    offset += q_max;
  }
  if (cfg.has_order(1)) {
    for (int j = 0; j < j_max; ++j) {
      fill_column_moments(work.psi[j], q_max, feat, offset, block_len);
      offset += q_max;
    }
  }
  work.cascade.clear();
  if (cfg.has_order(2)) {
    for (int j1 = 0; j1 < j_max; ++j1)
      for (int j2 = j1 + 1; j2 < j_max; ++j2) {
        work.cascade.push_back(work.psi[j2] * work.abs_psi[j1]);
        fill_column_moments(work.cascade.back(), q_max, feat, offset, block_len);
        offset += q_max;
      }
  }
  return feat;
}

Eigen::MatrixXd soft_scatter_backward(const Eigen::VectorXd& dfeat, const ScatteringConfig& cfg,
                                      const ScatterWork& work) {
  const int n = static_cast<int>(work.a_hat.rows());
  const int j_max = cfg.j_max;
  const int q_max = cfg.q_max;
  const int block_len = cfg.block_length();

  std::vector<Eigen::MatrixXd> dpsi(j_max, Eigen::MatrixXd::Zero(n, n));
  int offset = cfg.has_order(0) ? q_max : 0;

  if (cfg.has_order(1)) {
    for (int j = 0; j < j_max; ++j) {
      dpsi[j] += column_moments_backward(work.psi[j], q_max, dfeat, offset, block_len);
      offset += q_max;
    }
  }
  if (cfg.has_order(2)) {
    std::size_t pair_idx = 0;
    for (int j1 = 0; j1 < j_max; ++j1)
      for (int j2 = j1 + 1; j2 < j_max; ++j2) {
        const Eigen::MatrixXd dm = column_moments_backward(work.cascade[pair_idx], q_max, dfeat,
                                                           offset, block_len);
        dpsi[j2] += dm * work.abs_psi[j1].transpose();
        dpsi[j1] += (work.psi[j2].transpose() * dm).cwiseProduct(sign_of(work.psi[j1]));
        offset += q_max;
        ++pair_idx;
      }
  }

  std::vector<Eigen::MatrixXd> dq(j_max + 1, Eigen::MatrixXd::Zero(n, n));
  for (int j = 1; j <= j_max; ++j) {
    dq[j - 1] += dpsi[j - 1];
    dq[j] -= dpsi[j - 1];
  }
  for (int k = j_max; k >= 1; --k) {
    dq[k - 1] += dq[k] * work.q[k - 1].transpose() + work.q[k - 1].transpose() * dq[k];
  }

  const Eigen::MatrixXd db = 0.5 * dq[0];
  Eigen::MatrixXd da = db * work.inv_deg.asDiagonal();
  const Eigen::RowVectorXd dw = db.cwiseProduct(work.a_hat).colwise().sum();
  const Eigen::VectorXd dd =
      (-dw.transpose().array() * work.inv_deg.array() * work.inv_deg.array()).matrix();
  da += dd * Eigen::RowVectorXd::Ones(n);
  return da;
}

int pair_count(int n) { return n * (n - 1) / 2; }

}  // namespace

SinModel::SinModel(const ScatteringManifest& manifest, const SinConfig& cfg)
    : manifest_(manifest), cfg_(cfg) {
  cfg_.validate();
  Rng rng(stage_seed(cfg.seed, "sin-init"));
  int in = manifest.feature_len;
  for (int h : cfg.hidden_dims) {
    mlp_.add(std::make_unique<nn::Dense>(in, h, rng));
    mlp_.add(std::make_unique<nn::Relu>());
    mlp_.add(std::make_unique<nn::BatchNorm>(h));
    in = h;
  }
  mlp_.add(std::make_unique<nn::Dense>(in, manifest.n * cfg.rank, rng));
}

Eigen::MatrixXd SinModel::node_embedding(const Eigen::RowVectorXd& expanded) const {
  const int n = manifest_.n;
  const int r = cfg_.rank;
  Eigen::MatrixXd z(n, r);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < r; ++c) z(i, c) = expanded(i * r + c);
  return z;
}

SoftAdjacency SinModel::invert(const Eigen::VectorXd& s) {
  if (s.size() != manifest_.feature_len)
    throw ShapeMismatch("expected feature length " + std::to_string(manifest_.feature_len) +
                        ", got " + std::to_string(s.size()));
  const Eigen::MatrixXd e = mlp_.forward(s.transpose(), false);
  return SoftAdjacency{build_soft_adjacency(node_embedding(e.row(0))).a_hat};
}

double SinModel::pretrain_loss_and_gradients(const Eigen::MatrixXd& batch,
                                             const Eigen::MatrixXd& target_bits) {
  const int n = manifest_.n;
  const int r = cfg_.rank;
  const int rows = static_cast<int>(batch.rows());
  const int pairs = pair_count(n);
  if (target_bits.rows() != rows || target_bits.cols() != pairs)
    throw ShapeMismatch("pretrain target bits shape");

  const Eigen::MatrixXd e = mlp_.forward(batch, true);

  std::vector<AdjacencyWork> works;
  works.reserve(rows);
  Eigen::MatrixXd probs(rows, pairs);
  for (int b = 0; b < rows; ++b) {
    works.push_back(build_soft_adjacency(node_embedding(e.row(b))));
    int idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) probs(b, idx++) = works.back().a_hat(i, j);
  }

  const nn::LossResult loss = nn::bce_loss(probs, target_bits);

  Eigen::MatrixXd de(rows, n * r);
  for (int b = 0; b < rows; ++b) {
    Eigen::MatrixXd da = Eigen::MatrixXd::Zero(n, n);
    int idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) da(i, j) = loss.grad(b, idx++);
    const Eigen::MatrixXd dz = soft_adjacency_backward(works[b], std::move(da));
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < r; ++c) de(b, i * r + c) = dz(i, c);
  }
  mlp_.backward(de);
  return loss.value;
}

double SinModel::refine_loss_and_gradients(const Eigen::MatrixXd& batch) {
  const int n = manifest_.n;
  const int r = cfg_.rank;
  const int rows = static_cast<int>(batch.rows());
  ScatteringConfig scfg;
  scfg.j_max = manifest_.j_max;
  scfg.q_max = manifest_.q_max;
  scfg.orders = manifest_.orders;

  const Eigen::MatrixXd e = mlp_.forward(batch, true);

  std::vector<AdjacencyWork> adj(rows);
  std::vector<ScatterWork> scat(rows);
  Eigen::MatrixXd feats(rows, manifest_.feature_len);
  for (int b = 0; b < rows; ++b) {
    adj[b] = build_soft_adjacency(node_embedding(e.row(b)));
    feats.row(b) = soft_scatter_forward(adj[b].a_hat, scfg, scat[b]).transpose();
  }

  const nn::LossResult loss = nn::mse_loss(feats, batch);

  Eigen::MatrixXd de(rows, n * r);
  for (int b = 0; b < rows; ++b) {
    const Eigen::MatrixXd da = soft_scatter_backward(loss.grad.row(b).transpose(), scfg, scat[b]);
    const Eigen::MatrixXd dz = soft_adjacency_backward(adj[b], da);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < r; ++c) de(b, i * r + c) = dz(i, c);
  }
  mlp_.backward(de);
  return loss.value;
}

double SinModel::soft_rescatter_mse(const Eigen::MatrixXd& rows) {
  ScatteringConfig scfg;
  scfg.j_max = manifest_.j_max;
  scfg.q_max = manifest_.q_max;
  scfg.orders = manifest_.orders;
  const Eigen::MatrixXd e = mlp_.forward(rows, false);
  double total = 0.0;
  for (Eigen::Index b = 0; b < rows.rows(); ++b) {
    const AdjacencyWork adj = build_soft_adjacency(node_embedding(e.row(b)));
    ScatterWork work;
    const Eigen::VectorXd feat = soft_scatter_forward(adj.a_hat, scfg, work);
    total += (feat - rows.row(b).transpose()).squaredNorm();
  }
  return total / (static_cast<double>(rows.rows()) * manifest_.feature_len);
}

double SinModel::binarized_rescatter_mse(const Eigen::MatrixXd& rows) {
  ScatteringConfig scfg;
  scfg.j_max = manifest_.j_max;
  scfg.q_max = manifest_.q_max;
  scfg.orders = manifest_.orders;
  scfg.self_loop_isolated = true;
  double total = 0.0;
  for (Eigen::Index b = 0; b < rows.rows(); ++b) {
    const Graph g = binarize(invert(rows.row(b).transpose()), cfg_.tau);
    const Eigen::VectorXd feat = scatter_graph(g, scfg);
    total += (feat - rows.row(b).transpose()).squaredNorm();
  }
  return total / (static_cast<double>(rows.rows()) * manifest_.feature_len);
}

std::vector<nn::Param*> SinModel::params() { return mlp_.params(); }

void SinModel::zero_grad() { mlp_.zero_grad(); }

void SinModel::save(const std::string& path) const {
  json j;
  j["schema"] = "sin-checkpoint-v1";
  j["config"] = {{"rank", cfg_.rank},
                 {"hidden_dims", cfg_.hidden_dims},
                 {"tau", cfg_.tau},
                 {"lr", cfg_.lr},
                 {"batch_size", cfg_.batch_size},
                 {"pretrain_max_iterations", cfg_.pretrain_max_iterations},
                 {"pretrain_window", cfg_.pretrain_window},
                 {"pretrain_rel_tol", cfg_.pretrain_rel_tol},
                 {"refine_iterations", cfg_.refine_iterations},
                 {"seed", cfg_.seed}};
  j["manifest"] = json::parse(manifest_.to_json());
  j["mlp"] = mlp_.state();
  j["pretrained"] = pretrained_;
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  out << j.dump() << '\n';
}

SinModel SinModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  json j = json::parse(in);
  if (j.value("schema", "") != "sin-checkpoint-v1")
    throw ConfigError("not a sin checkpoint: " + path);
  SinModel m;
  const json& c = j.at("config");
  m.cfg_.rank = c.at("rank").get<int>();
  m.cfg_.hidden_dims = c.at("hidden_dims").get<std::vector<int>>();
  m.cfg_.tau = c.at("tau").get<double>();
  m.cfg_.lr = c.at("lr").get<double>();
  m.cfg_.batch_size = c.at("batch_size").get<int>();
  m.cfg_.pretrain_max_iterations = c.at("pretrain_max_iterations").get<long>();
  m.cfg_.pretrain_window = c.at("pretrain_window").get<long>();
  m.cfg_.pretrain_rel_tol = c.at("pretrain_rel_tol").get<double>();
  m.cfg_.refine_iterations = c.at("refine_iterations").get<long>();
  m.cfg_.seed = c.at("seed").get<std::uint64_t>();
  m.manifest_ = ScatteringManifest::parse_json(j.at("manifest").dump());
  m.mlp_ = nn::Mlp::from_state(j.at("mlp"));
  m.pretrained_ = j.at("pretrained").get<bool>();
  return m;
}

Eigen::VectorXd rescatter_soft(const Eigen::MatrixXd& a_hat, const ScatteringConfig& cfg) {
  cfg.validate();
  if (a_hat.rows() != a_hat.cols()) throw ShapeMismatch("soft adjacency must be square");
  ScatterWork work;
  return soft_scatter_forward(a_hat, cfg, work);
}

Graph binarize(const SoftAdjacency& a, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must be in (0, 1)");
  const int n = static_cast<int>(a.a_hat.rows());
  std::vector<Graph::Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (a.a_hat(i, j) >= tau) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

namespace {

// Shared minibatch scaffolding for both SIN phases.
struct BatchPlan {
  std::vector<int> order;
  int cursor = 0;
  int batch = 0;
  Rng rng;

  BatchPlan(int rows, int batch_size, std::uint64_t seed)
      : order(rows), batch(std::min(batch_size, rows)), rng(seed) {
    std::iota(order.begin(), order.end(), 0);
    cursor = rows;  // force initial shuffle
  }

  void fill(const Eigen::MatrixXd& x, Eigen::MatrixXd& out_rows, std::vector<int>& out_idx) {
    const int rows = static_cast<int>(order.size());
    if (cursor + batch > rows) {
      for (int i = rows - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[i], order[j]);
      }
      cursor = 0;
    }
    out_idx.resize(batch);
    for (int b = 0; b < batch; ++b) {
      out_idx[b] = order[cursor + b];
      out_rows.row(b) = x.row(order[cursor + b]);
    }
    cursor += batch;
  }
};

}  // namespace

SinTrainStats pretrain_sin(SinModel& model, const GraphDataset& dataset,
                           const Eigen::MatrixXd& scattering_rows) {
  const SinConfig& cfg = model.config();
  const int n = model.manifest().n;
  if (dataset.n != n) throw ManifestMismatch("dataset node count differs from manifest");
  if (static_cast<Eigen::Index>(dataset.size()) != scattering_rows.rows())
    throw ShapeMismatch("dataset and scattering matrix are not row-aligned");
  if (dataset.size() < 2) throw ShapeMismatch("pretraining needs at least 2 rows (batchnorm)");

  const int pairs = n * (n - 1) / 2;
  Eigen::MatrixXd bits(dataset.size(), pairs);
  for (std::size_t g = 0; g < dataset.size(); ++g) {
    int idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        bits(static_cast<Eigen::Index>(g), idx++) = dataset.graphs[g].has_edge(i, j) ? 1.0 : 0.0;
  }

  BatchPlan plan(static_cast<int>(scattering_rows.rows()), cfg.batch_size,
                 stage_seed(cfg.seed, "sin-pretrain-shuffle"));
  nn::Adam optimizer(cfg.lr);
  const std::vector<nn::Param*> params = model.params();

  Eigen::MatrixXd batch(plan.batch, scattering_rows.cols());
  Eigen::MatrixXd batch_bits(plan.batch, pairs);
  std::vector<int> idx;

  SinTrainStats stats;
  double window_sum = 0.0;
  long window_count = 0;
  double prev_window_mean = -1.0;

  for (long iter = 1; iter <= cfg.pretrain_max_iterations; ++iter) {
    plan.fill(scattering_rows, batch, idx);
    for (int b = 0; b < plan.batch; ++b) batch_bits.row(b) = bits.row(idx[b]);

    model.zero_grad();
    const double loss = model.pretrain_loss_and_gradients(batch, batch_bits);
    if (!std::isfinite(loss)) throw NonFiniteLoss(iter);
    optimizer.step(params);

    if (iter == 1) stats.initial_loss = loss;
    stats.iterations = iter;
    window_sum += loss;
    ++window_count;

    if (window_count == cfg.pretrain_window) {
      const double mean = window_sum / static_cast<double>(window_count);
      stats.final_loss = mean;
      if (prev_window_mean >= 0.0 &&
          prev_window_mean - mean < cfg.pretrain_rel_tol * std::max(prev_window_mean, 1e-12))
        break;
      prev_window_mean = mean;
      window_sum = 0.0;
      window_count = 0;
    }
  }
  if (window_count > 0) stats.final_loss = window_sum / static_cast<double>(window_count);
  model.mark_pretrained();
  return stats;
}

SinTrainStats refine_sin(SinModel& model, const Eigen::MatrixXd& scattering_rows) {
  if (!model.pretrained()) throw Error("refine_sin requires a pretrained model");
  const SinConfig& cfg = model.config();
  if (scattering_rows.rows() < 2)
    throw ShapeMismatch("refinement needs at least 2 rows (batchnorm)");

  SinTrainStats stats;
  stats.initial_loss = model.soft_rescatter_mse(scattering_rows);

  BatchPlan plan(static_cast<int>(scattering_rows.rows()), cfg.batch_size,
                 stage_seed(cfg.seed, "sin-refine-shuffle"));
  nn::Adam optimizer(cfg.lr);
  const std::vector<nn::Param*> params = model.params();

  Eigen::MatrixXd batch(plan.batch, scattering_rows.cols());
  std::vector<int> idx;
  for (long iter = 1; iter <= cfg.refine_iterations; ++iter) {
    plan.fill(scattering_rows, batch, idx);
    model.zero_grad();
    const double loss = model.refine_loss_and_gradients(batch);
    if (!std::isfinite(loss)) throw NonFiniteLoss(iter);
    optimizer.step(params);
    stats.iterations = iter;
  }

  stats.final_loss = model.soft_rescatter_mse(scattering_rows);
  return stats;
}

std::vector<Graph> generate_trajectory(GsaeModel& gsae, SinModel& sin,
                                       const Eigen::VectorXd& z_a, const Eigen::VectorXd& z_b,
                                       int steps) {
  if (!(gsae.manifest() == sin.manifest()))
    throw ManifestMismatch("GSAE and SIN models were built over different scattering layouts");
  if (steps < 2) throw ConfigError("steps must be >= 2");
  if (z_a.size() != gsae.config().latent_dim || z_b.size() != gsae.config().latent_dim)
    throw ShapeMismatch("latent point size");

  std::vector<Graph> out;
  out.reserve(steps);
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps - 1);
    const Eigen::VectorXd z = (1.0 - t) * z_a + t * z_b;
    const Eigen::MatrixXd s_hat = gsae.decode(z.transpose(), false);
    out.push_back(binarize(sin.invert(s_hat.row(0).transpose()), sin.config().tau));
  }
  return out;
}

}  // namespace gsae
