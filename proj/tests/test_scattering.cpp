#include "gsae/scattering.hpp"

#include <cmath>

#include "doctest.h"
#include "gsae/errors.hpp"
#include "gsae/graph.hpp"
#include "gsae/random.hpp"
#include "oracles.hpp"

using namespace gsae;

TEST_SUITE("scattering") {

TEST_CASE("lazy walk on hand-checked graphs") {
  SUBCASE("single edge") {
    const LazyWalk w = build_lazy_walk(Graph(2, {{0, 1}}));
    Eigen::MatrixXd expected(2, 2);
    expected << 0.5, 0.5, 0.5, 0.5;
    CHECK((w.p - expected).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("triangle") {
    const LazyWalk w = build_lazy_walk(Graph(3, {{0, 1}, {1, 2}, {0, 2}}));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(w.p(i, j) == (i == j ? 0.5 : 0.25));
  }
  SUBCASE("star on 4 nodes") {
    const LazyWalk w = build_lazy_walk(Graph(4, {{0, 1}, {0, 2}, {0, 3}}));
    const Eigen::RowVectorXd sums = w.p.colwise().sum();
    for (int j = 0; j < 4; ++j) CHECK(std::abs(sums(j) - 1.0) < 1e-12);
    CHECK(w.p(1, 0) == doctest::Approx(1.0 / 6.0));
    CHECK(w.p(0, 1) == 0.5);
  }
}

TEST_CASE("isolated node policy") {
  const Graph g(3, {{0, 1}});
  CHECK_THROWS_AS(build_lazy_walk(g), IsolatedNode);
  const LazyWalk w = build_lazy_walk(g, true);
  CHECK(w.p(2, 2) == 1.0);
  CHECK(std::abs(w.p.colwise().sum().maxCoeff() - 1.0) < 1e-12);
}

TEST_CASE("wavelets: idempotent walk gives zero wavelets") {
  const LazyWalk w = build_lazy_walk(Graph(2, {{0, 1}}));
  const WaveletBank bank = build_wavelets(w, 3);
  for (const auto& psi : bank.psi) CHECK(psi.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("wavelets: J=1 is P - P^2 and telescoping holds") {
  Rng rng(7);
  const Graph g = oracles::random_connected_ish_graph(9, 0.3, rng);
  const LazyWalk w = build_lazy_walk(g);
  const WaveletBank one = build_wavelets(w, 1);
  CHECK((one.psi[0] - (w.p - w.p * w.p)).cwiseAbs().maxCoeff() < 1e-14);

  const int j_max = 4;
  const WaveletBank bank = build_wavelets(w, j_max);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(9, 9);
  Eigen::MatrixXd p_pow = w.p;
  for (int j = 0; j < j_max; ++j) {
    total += bank.psi[j];
    p_pow = p_pow * p_pow;
  }
  CHECK((total - (w.p - p_pow)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("moments") {
  Eigen::VectorXd x(2);
  x << 1.0, -2.0;
  const Eigen::VectorXd m = moments(x, 4);
  CHECK(m(0) == 3.0);
  CHECK(m(1) == 5.0);
  CHECK(m(2) == 9.0);
  CHECK(m(3) == 17.0);

  CHECK(moments(Eigen::VectorXd::Zero(5), 3).isZero(0.0));

  Eigen::VectorXd dirac = Eigen::VectorXd::Zero(6);
  dirac(2) = 1.0;
  const Eigen::VectorXd md = moments(dirac, 4);
  for (int q = 0; q < 4; ++q) CHECK(md(q) == 1.0);
}

TEST_CASE("scatter_graph on the single-edge graph") {
  ScatteringConfig cfg;
  cfg.j_max = 2;
  cfg.q_max = 4;
  const Eigen::VectorXd s = scatter_graph(Graph(2, {{0, 1}}), cfg);
  REQUIRE(s.size() == 2 * 4 * (1 + 2 + 1));  // 32
  const int block = cfg.block_length();
  for (int i = 0; i < 2; ++i) {
    for (int q = 0; q < 4; ++q) CHECK(s(i * block + q) == 1.0);        // order 0
    for (int k = 4; k < block; ++k) CHECK(std::abs(s(i * block + k)) < 1e-14);  // orders 1-2
  }
}

TEST_CASE("triangle blocks identical across diracs (vertex-transitive)") {
  ScatteringConfig cfg;
  cfg.j_max = 3;
  const Eigen::VectorXd s = scatter_graph(Graph(3, {{0, 1}, {1, 2}, {0, 2}}), cfg);
  const int block = cfg.block_length();
  for (int i = 1; i < 3; ++i)
    for (int k = 0; k < block; ++k)
      CHECK(s(i * block + k) == doctest::Approx(s(k)).epsilon(1e-12));
}

TEST_CASE("feature length formula across configurations") {
  for (int n : {2, 5, 11}) {
    for (int j : {1, 2, 5}) {
      for (int q : {1, 4}) {
        ScatteringConfig cfg;
        cfg.j_max = j;
        cfg.q_max = q;
        CHECK(cfg.feature_length(n) == n * q * (1 + j + j * (j - 1) / 2));
        Rng rng(n * 100 + j * 10 + q);
        const Graph g = oracles::random_connected_ish_graph(n, 0.4, rng);
        CHECK(scatter_graph(g, cfg).size() == cfg.feature_length(n));
      }
    }
  }
  SUBCASE("order subsets") {
    ScatteringConfig cfg;
    cfg.j_max = 3;
    cfg.q_max = 2;
    cfg.orders = {1};
    CHECK(cfg.feature_length(4) == 4 * 2 * 3);
    cfg.orders = {0, 2};
    CHECK(cfg.feature_length(4) == 4 * 2 * (1 + 3));
  }
}

TEST_CASE("default J is ceil(log2 n) clamped to [1, 8]") {
  CHECK(ScatteringConfig::defaults_for(2).j_max == 1);
  CHECK(ScatteringConfig::defaults_for(10).j_max == 4);
  CHECK(ScatteringConfig::defaults_for(32).j_max == 5);
  CHECK(ScatteringConfig::defaults_for(100000).j_max == 8);
}

TEST_CASE("conservation and nonexpansiveness on random graphs") {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(10));
    const Graph g = oracles::random_connected_ish_graph(n, 0.35, rng);
    const LazyWalk w = build_lazy_walk(g);

    Eigen::VectorXd f(n);
    for (int i = 0; i < n; ++i) f(i) = rng.normal();

    Eigen::VectorXd diffused = f;
    for (int t = 0; t < 4; ++t) {
      diffused = w.p * diffused;
      CHECK(std::abs(diffused.sum() - f.sum()) < 1e-10);
      CHECK(diffused.cwiseAbs().sum() <= f.cwiseAbs().sum() + 1e-12);
    }

    const WaveletBank bank = build_wavelets(w, 3);
    for (const auto& psi : bank.psi)
      CHECK(psi.colwise().sum().cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("block-permutation equivariance") {
  Rng rng(123);
  ScatteringConfig cfg;
  cfg.j_max = 3;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform_int(6));
    const Graph g = oracles::random_connected_ish_graph(n, 0.4, rng);
    const std::vector<int> perm = oracles::random_permutation(n, rng);
    const Graph h = g.permuted(perm);

    const Eigen::VectorXd sg = scatter_graph(g, cfg);
    const Eigen::VectorXd sh = scatter_graph(h, cfg);
    const int block = cfg.block_length();
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < block; ++k)
        CHECK(std::abs(sh(perm[i] * block + k) - sg(i * block + k)) <
              1e-10 * std::max(1.0, std::abs(sg(i * block + k))));
  }
}

TEST_CASE("scatter_dataset rows match per-graph calls and report failures") {
  Rng rng(5);
  GraphDataset d;
  d.n = 7;
  for (int k = 0; k < 5; ++k) d.graphs.push_back(oracles::random_connected_ish_graph(7, 0.4, rng));
  d.graphs.push_back(d.graphs[2]);  // duplicate row

  const ScatteringConfig cfg = ScatteringConfig::defaults_for(7);
  const Eigen::MatrixXd rows = scatter_dataset(d, cfg);
  REQUIRE(rows.rows() == 6);
  for (int k = 0; k < 6; ++k)
    CHECK((rows.row(k).transpose() - scatter_graph(d.graphs[k], cfg)).cwiseAbs().maxCoeff() ==
          0.0);
  CHECK(rows.row(2) == rows.row(5));

  GraphDataset bad = d;
  bad.graphs[3] = Graph(7, {{0, 1}});  // node 6 isolated
  try {
    scatter_dataset(bad, cfg);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("graph 3") != std::string::npos);
  }
}

TEST_CASE("trajectory neighbors are closer than random pairs in feature space") {
  const GraphDataset d = gen_toy_trajectory(10, 0.5, 199, 4242);
  ScatteringConfig cfg = ScatteringConfig::defaults_for(10);
  cfg.self_loop_isolated = true;
  const Eigen::MatrixXd rows = scatter_dataset(d, cfg);

  double neighbor_mean = 0.0;
  for (int k = 0; k + 1 < 200; ++k) neighbor_mean += (rows.row(k) - rows.row(k + 1)).norm();
  neighbor_mean /= 199.0;

  Rng rng(1);
  double random_mean = 0.0;
  const int pairs = 500;
  for (int t = 0; t < pairs; ++t) {
    const auto i = static_cast<Eigen::Index>(rng.uniform_int(200));
    auto j = static_cast<Eigen::Index>(rng.uniform_int(199));
    if (j >= i) ++j;
    random_mean += (rows.row(i) - rows.row(j)).norm();
  }
  random_mean /= pairs;
  CHECK(neighbor_mean < random_mean);
}

}  // TEST_SUITE
