#include "gsae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gsae/errors.hpp"
#include "gsae/random.hpp"

namespace gsae {

KnnGraph knn_graph(const Eigen::MatrixXd& embedding, int k) {
  const int rows = static_cast<int>(embedding.rows());
  if (rows < 2) throw KTooLarge(k, rows);
  if (k < 1 || k >= rows) throw KTooLarge(k, rows);

  KnnGraph g;
  g.k = k;
  g.adjacency = Eigen::MatrixXd::Zero(rows, rows);

  std::vector<std::pair<double, int>> dist(rows - 1);
  for (int i = 0; i < rows; ++i) {
    int m = 0;
    for (int j = 0; j < rows; ++j) {
      if (j == i) continue;
      dist[m++] = {(embedding.row(i) - embedding.row(j)).squaredNorm(), j};
    }
    // Deterministic tie-break: lower index wins among equal distances.
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int t = 0; t < k; ++t) {
      const int j = dist[t].second;
      g.adjacency(i, j) = 1.0;
      g.adjacency(j, i) = 1.0;
    }
  }
  return g;
}

SmoothnessReport smoothness(const Eigen::MatrixXd& embedding, const Eigen::VectorXd& signal,
                            int k, const std::string& signal_name, bool center_signal) {
  if (signal.size() != embedding.rows())
    throw LengthMismatch(static_cast<std::size_t>(signal.size()),
                         static_cast<std::size_t>(embedding.rows()));
  Eigen::VectorXd x = signal;
  if (center_signal) x.array() -= x.mean();
  const double xx = x.squaredNorm();
  if (xx == 0.0) throw ZeroSignal();

  const KnnGraph g = knn_graph(embedding, k);
  // x^T L x = sum over edges (x_i - x_j)^2 for L = D - A.
  double dirichlet = 0.0;
  const int n = static_cast<int>(g.adjacency.rows());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (g.adjacency(i, j) != 0.0) {
        const double d = x(i) - x(j);
        dirichlet += d * d;
      }

  SmoothnessReport r;
  r.k = k;
  r.dirichlet = dirichlet;
  r.smoothness_index = dirichlet / xx;
  r.signal_name = signal_name;
  return r;
}

double energy_mse_report(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets) {
  if (predictions.size() != targets.size())
    throw LengthMismatch(static_cast<std::size_t>(predictions.size()),
                         static_cast<std::size_t>(targets.size()));
  return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
}

MeanStd aggregate_runs(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / (values.size() - 1));
  }
  return out;
}

PcaResult pca_project(const Eigen::MatrixXd& data, int dims) {
  const Eigen::Index rows = data.rows();
  const Eigen::Index cols = data.cols();
  if (dims < 1 || dims > std::min(rows, cols))
    throw ConfigError("pca dims must be in [1, min(rows, cols)]");

  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(rows - 1));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd evals = es.eigenvalues();    // ascending
  const Eigen::MatrixXd evecs = es.eigenvectors();

  const double total = std::max(evals.cwiseMax(0.0).sum(), 0.0);

  PcaResult r;
  r.components = Eigen::MatrixXd(cols, dims);
  r.explained_variance = Eigen::VectorXd(dims);
  for (int d = 0; d < dims; ++d) {
    const Eigen::Index src = cols - 1 - d;  // descending eigenvalue order
    Eigen::VectorXd v = evecs.col(src);
    Eigen::Index argmax = 0;
    v.cwiseAbs().maxCoeff(&argmax);
    if (v(argmax) < 0.0) v = -v;
    r.components.col(d) = v;
    r.explained_variance(d) = total > 0.0 ? std::max(evals(src), 0.0) / total : 0.0;
  }
  r.projected = centered * r.components;
  return r;
}

int WlFeaturizer::compress(const std::string& key) {
  const auto [it, inserted] = table_.emplace(key, next_label_);
  if (inserted) ++next_label_;
  return it->second;
}

std::map<int, long> WlFeaturizer::features(const Graph& g, int iterations) {
  if (iterations < 0) throw ConfigError("wl iterations must be >= 0");
  const int n = g.node_count();
  std::vector<int> labels(n, compress("uniform"));

  std::map<int, long> counts;
  for (int v : labels) ++counts[v];

  std::vector<std::vector<int>> neighbors(n);
  for (const auto& [i, j] : g.edges()) {
    neighbors[i].push_back(j);
    neighbors[j].push_back(i);
  }

  for (int it = 0; it < iterations; ++it) {
    std::vector<int> next(n);
    for (int v = 0; v < n; ++v) {
      std::vector<int> neigh;
      neigh.reserve(neighbors[v].size());
      for (int u : neighbors[v]) neigh.push_back(labels[u]);
      std::sort(neigh.begin(), neigh.end());
      std::ostringstream key;
      key << labels[v] << '|';
      for (int l : neigh) key << l << ',';
      next[v] = compress(key.str());
    }
    labels = std::move(next);
    for (int v : labels) ++counts[v];
  }
  return counts;
}

Eigen::MatrixXd WlFeaturizer::feature_matrix(const std::vector<Graph>& graphs, int iterations) {
  std::vector<std::map<int, long>> all;
  all.reserve(graphs.size());
  for (const Graph& g : graphs) all.push_back(features(g, iterations));
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(graphs.size()),
                                            next_label_);
  for (std::size_t r = 0; r < all.size(); ++r)
    for (const auto& [label, count] : all[r])
      m(static_cast<Eigen::Index>(r), label) = static_cast<double>(count);
  return m;
}

Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& distances, int dims) {
  const Eigen::Index m = distances.rows();
  if (distances.cols() != m) throw ShapeMismatch("distance matrix must be square");
  if (dims < 1) throw ConfigError("mds dims must be >= 1");

  if (distances.cwiseAbs().maxCoeff() == 0.0) return Eigen::MatrixXd::Zero(m, dims);

  const Eigen::MatrixXd d2 = distances.cwiseProduct(distances);
  const Eigen::MatrixXd centerer =
      Eigen::MatrixXd::Identity(m, m) - Eigen::MatrixXd::Constant(m, m, 1.0 / m);
  const Eigen::MatrixXd b = -0.5 * centerer * d2 * centerer;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  const Eigen::VectorXd evals = es.eigenvalues();
  const Eigen::MatrixXd evecs = es.eigenvectors();

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, dims);
  for (int d = 0; d < dims && d < m; ++d) {
    const Eigen::Index src = m - 1 - d;
    const double lambda = evals(src);
    if (lambda <= 0.0) continue;  // negative eigenvalues carry no Euclidean coordinate
    out.col(d) = evecs.col(src) * std::sqrt(lambda);
  }
  return out;
}

Eigen::MatrixXd ged_mds_embedding(const GraphDataset& dataset, int dims) {
  const Eigen::Index m = static_cast<Eigen::Index>(dataset.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double v = static_cast<double>(ged_fixed(dataset.graphs[i], dataset.graphs[j]));
      d(i, j) = v;
      d(j, i) = v;
    }
  return classical_mds(d, dims);
}

std::vector<int> trajectory_edit_profile(const std::vector<Graph>& graphs) {
  if (graphs.empty()) throw Error("trajectory profile needs at least one graph");
  std::vector<int> out;
  out.reserve(graphs.size());
  for (const Graph& g : graphs) out.push_back(ged_fixed(g, graphs.back()));
  return out;
}

namespace {

std::vector<double> ranks_of(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double faithfulness_spearman(const Eigen::MatrixXd& embedding, const GraphDataset& dataset,
                             int num_pairs, std::uint64_t seed) {
  if (embedding.rows() != static_cast<Eigen::Index>(dataset.size()))
    throw LengthMismatch(static_cast<std::size_t>(embedding.rows()), dataset.size());
  if (dataset.size() < 2 || num_pairs < 2) throw Error("need at least 2 rows and 2 pairs");

  Rng rng(seed);
  std::vector<double> emb_dist, ged_dist;
  emb_dist.reserve(num_pairs);
  ged_dist.reserve(num_pairs);
  const std::uint64_t rows = dataset.size();
  for (int p = 0; p < num_pairs; ++p) {
    const auto i = static_cast<Eigen::Index>(rng.uniform_int(rows));
    auto j = static_cast<Eigen::Index>(rng.uniform_int(rows - 1));
    if (j >= i) ++j;
    emb_dist.push_back((embedding.row(i) - embedding.row(j)).norm());
    ged_dist.push_back(static_cast<double>(ged_fixed(dataset.graphs[i], dataset.graphs[j])));
  }

  const std::vector<double> ra = ranks_of(emb_dist);
  const std::vector<double> rb = ranks_of(ged_dist);
  const double n = static_cast<double>(num_pairs);
  double mean_a = 0.0, mean_b = 0.0;
  for (int i = 0; i < num_pairs; ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (int i = 0; i < num_pairs; ++i) {
    cov += (ra[i] - mean_a) * (rb[i] - mean_b);
    var_a += (ra[i] - mean_a) * (ra[i] - mean_a);
    var_b += (rb[i] - mean_b) * (rb[i] - mean_b);
  }
  if (var_a == 0.0 || var_b == 0.0) return 0.0;
  return cov / std::sqrt(var_a * var_b);
}

}  // namespace gsae
