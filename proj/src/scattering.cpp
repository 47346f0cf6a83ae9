#include "gsae/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gsae/errors.hpp"
#include "nlohmann/json.hpp"

namespace gsae {

using json = nlohmann::json;

ScatteringConfig ScatteringConfig::defaults_for(int n) {
  ScatteringConfig cfg;
  cfg.j_max = std::clamp(static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))), 1, 8);
  return cfg;
}

void ScatteringConfig::validate() const {
  if (j_max < 1) throw ConfigError("j_max must be >= 1");
  if (q_max < 1) throw ConfigError("q_max must be >= 1");
  if (orders.empty()) throw ConfigError("orders must be nonempty");
  for (int m : orders)
    if (m < 0 || m > 2) throw ConfigError("orders must be a subset of {0, 1, 2}");
}

bool ScatteringConfig::has_order(int m) const {
  return std::find(orders.begin(), orders.end(), m) != orders.end();
}

int ScatteringConfig::block_length() const {
  int blocks = 0;
  if (has_order(0)) blocks += 1;
  if (has_order(1)) blocks += j_max;
  if (has_order(2)) blocks += j_max * (j_max - 1) / 2;
  return blocks * q_max;
}

int ScatteringConfig::feature_length(int n) const { return n * block_length(); }

ScatteringManifest ScatteringManifest::from(int n, const ScatteringConfig& cfg) {
  ScatteringManifest m;
  m.n = n;
  m.j_max = cfg.j_max;
  m.q_max = cfg.q_max;
  m.orders = cfg.orders;
  m.feature_len = cfg.feature_length(n);
  m.self_loop_isolated = cfg.self_loop_isolated;
  return m;
}

std::string ScatteringManifest::to_json() const {
  json j;
  j["n"] = n;
  j["J"] = j_max;
  j["Q"] = q_max;
  j["orders"] = orders;
  j["feature_len"] = feature_len;
  j["self_loop_isolated"] = self_loop_isolated;
  return j.dump(2);
}

ScatteringManifest ScatteringManifest::parse_json(const std::string& text) {
  json j = json::parse(text);
  ScatteringManifest m;
  m.n = j.at("n").get<int>();
  m.j_max = j.at("J").get<int>();
  m.q_max = j.at("Q").get<int>();
  m.orders = j.at("orders").get<std::vector<int>>();
  m.feature_len = j.at("feature_len").get<int>();
  m.self_loop_isolated = j.value("self_loop_isolated", false);
  return m;
}

void ScatteringManifest::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  out << to_json() << '\n';
}

ScatteringManifest ScatteringManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_json(text);
}

LazyWalk build_lazy_walk(const Graph& g, bool self_loop_isolated) {
  const int n = g.node_count();
  Eigen::MatrixXd a = g.adjacency();
  Eigen::VectorXd deg = a.rowwise().sum();
  for (int i = 0; i < n; ++i) {
    if (deg(i) == 0.0) {
      if (!self_loop_isolated) throw IsolatedNode(i);
      a(i, i) = 1.0;
      deg(i) = 1.0;
    }
  }
  // A D^-1 scales column j by 1/deg(j).
  Eigen::MatrixXd p = a * deg.cwiseInverse().asDiagonal();
  p = 0.5 * (Eigen::MatrixXd::Identity(n, n) + p);
  return LazyWalk{std::move(p)};
}

WaveletBank build_wavelets(const LazyWalk& walk, int j_max) {
  if (j_max < 1) throw ConfigError("j_max must be >= 1");
  WaveletBank bank;
  bank.j_max = j_max;
  bank.psi.reserve(j_max);
  Eigen::MatrixXd prev = walk.p;  // P^(2^(j-1))
  for (int j = 1; j <= j_max; ++j) {
    Eigen::MatrixXd next = prev * prev;  // P^(2^j)
    bank.psi.push_back(prev - next);
    prev = std::move(next);
  }
  return bank;
}

Eigen::VectorXd moments(const Eigen::VectorXd& x, int q_max) {
  if (q_max < 1) throw ConfigError("q_max must be >= 1");
  Eigen::VectorXd out(q_max);
  Eigen::VectorXd pow = x.cwiseAbs();
  out(0) = pow.sum();
  for (int q = 2; q <= q_max; ++q) {
    pow = pow.cwiseProduct(x.cwiseAbs());
    out(q - 1) = pow.sum();
  }
  return out;
}

namespace {

// Column-wise moments of an n x n matrix, written as Q-blocks per column into
// out at stride block_len starting at offset.
void column_moments(const Eigen::MatrixXd& m, int q_max, Eigen::VectorXd& out, int offset,
                    int block_len) {
  const int n = static_cast<int>(m.cols());
  Eigen::MatrixXd pow = m.cwiseAbs();
  const Eigen::MatrixXd abs_m = pow;
  for (int q = 1; q <= q_max; ++q) {
    if (q > 1) pow = pow.cwiseProduct(abs_m);
    const Eigen::RowVectorXd sums = pow.colwise().sum();
    for (int i = 0; i < n; ++i) out(offset + i * block_len + (q - 1)) = sums(i);
  }
}

}  // namespace

Eigen::VectorXd scatter_graph(const Graph& g, const ScatteringConfig& cfg) {
  cfg.validate();
  const int n = g.node_count();
  const int q = cfg.q_max;
  const int block_len = cfg.block_length();

  const LazyWalk walk = build_lazy_walk(g, cfg.self_loop_isolated);
  const WaveletBank bank = build_wavelets(walk, cfg.j_max);

  Eigen::VectorXd out = Eigen::VectorXd::Zero(cfg.feature_length(n));
  int offset = 0;  // offset of the current block within each dirac's slice

  if (cfg.has_order(0)) {
    // Moments of the dirac signals themselves: |d_i|^q sums to 1 for every q.
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < q; ++k) out(i * block_len + k) = 1.0;
    offset += q;
  }

  if (cfg.has_order(1)) {
    // Psi_j d_i is column i of Psi_j.
    for (int j = 0; j < cfg.j_max; ++j) {
      column_moments(bank.psi[j], q, out, offset, block_len);
      offset += q;
    }
  }

  if (cfg.has_order(2)) {
    // Psi_j2 |Psi_j1 d_i| is column i of Psi_j2 * |Psi_j1|.
    for (int j1 = 0; j1 < cfg.j_max; ++j1) {
      const Eigen::MatrixXd abs_psi = bank.psi[j1].cwiseAbs();
      for (int j2 = j1 + 1; j2 < cfg.j_max; ++j2) {
        const Eigen::MatrixXd cascaded = bank.psi[j2] * abs_psi;
        column_moments(cascaded, q, out, offset, block_len);
        offset += q;
      }
    }
  }

  return out;
}

Eigen::MatrixXd scatter_dataset(const GraphDataset& d, const ScatteringConfig& cfg) {
  cfg.validate();
  const int feat = cfg.feature_length(d.n);
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(d.size()), feat);
  for (std::size_t k = 0; k < d.size(); ++k) {
    try {
      rows.row(static_cast<Eigen::Index>(k)) = scatter_graph(d.graphs[k], cfg).transpose();
    } catch (const Error& e) {
      throw Error("graph " + std::to_string(k) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace gsae
