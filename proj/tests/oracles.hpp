#pragma once

// Test-side oracles, independent of the implementation paths they check.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "gsae/graph.hpp"
#include "gsae/nn.hpp"
#include "gsae/random.hpp"

namespace oracles {

using PairSet = std::set<std::vector<std::pair<int, int>>>;

// Every pseudoknot-free structure of seq by brute force over all subsets of
// legal pairs (complementary, loop >= 3). Feasible for short sequences only.
inline PairSet brute_force_folds(const std::string& seq) {
  const int n = static_cast<int>(seq.size());
  std::vector<std::pair<int, int>> legal;
  for (int i = 0; i < n; ++i)
    for (int j = i + 4; j < n; ++j)
      if (gsae::can_pair(seq[i], seq[j])) legal.emplace_back(i, j);

  const std::size_t m = legal.size();
  REQUIRE(m <= 22);  // keep the 2^m sweep sane
  PairSet out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<std::pair<int, int>> chosen;
    for (std::size_t b = 0; b < m; ++b)
      if (mask & (std::size_t{1} << b)) chosen.push_back(legal[b]);

    bool ok = true;
    for (std::size_t a = 0; a < chosen.size() && ok; ++a)
      for (std::size_t b = a + 1; b < chosen.size() && ok; ++b) {
        auto [i, j] = chosen[a];
        auto [k, l] = chosen[b];
        if (k < i) {
          std::swap(i, k);
          std::swap(j, l);
        }
        // shared endpoint or crossing (i < k <= j < l) both invalid
        if (i == k || j == k || j == l || i == l) ok = false;
        else if (k <= j && j < l) ok = false;
      }
    if (ok) {
      std::sort(chosen.begin(), chosen.end());
      out.insert(std::move(chosen));
    }
  }
  return out;
}

// Base pairs of a fold graph = edges minus the backbone chain.
inline std::vector<std::pair<int, int>> structural_pairs(const gsae::Graph& g) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& [i, j] : g.edges())
    if (j != i + 1) pairs.emplace_back(i, j);
  return pairs;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

// Central finite differences against analytic gradients already stored in the
// params' grad fields. loss_fn must be a pure re-evaluation of the same loss.
inline GradCheck finite_diff_check(const std::function<double()>& loss_fn,
                                   const std::vector<gsae::nn::Param*>& params,
                                   double h = 1e-4) {
  // Snapshot analytic gradients before wiggling anything.
  std::vector<Eigen::MatrixXd> analytic;
  analytic.reserve(params.size());
  for (const auto* p : params) analytic.push_back(p->grad);

  GradCheck out;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Eigen::MatrixXd& value = params[pi]->value;
    for (Eigen::Index r = 0; r < value.rows(); ++r)
      for (Eigen::Index c = 0; c < value.cols(); ++c) {
        const double saved = value(r, c);
        value(r, c) = saved + h;
        const double up = loss_fn();
        value(r, c) = saved - h;
        const double down = loss_fn();
        value(r, c) = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic[pi](r, c);
        const double rel =
            std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
        out.max_rel_error = std::max(out.max_rel_error, rel);
        ++out.coords_checked;
      }
  }
  return out;
}

inline gsae::Graph random_graph(int n, double p, gsae::Rng& rng) {
  std::vector<gsae::Graph::Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.emplace_back(i, j);
  return gsae::Graph(n, std::move(edges));
}

// Random graph with no isolated nodes (chain backbone plus random extras).
inline gsae::Graph random_connected_ish_graph(int n, double p, gsae::Rng& rng) {
  std::vector<gsae::Graph::Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  for (int i = 0; i < n; ++i)
    for (int j = i + 2; j < n; ++j)
      if (rng.uniform() < p) edges.emplace_back(i, j);
  return gsae::Graph(n, std::move(edges));
}

inline std::vector<int> random_permutation(int n, gsae::Rng& rng) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_int(static_cast<std::uint64_t>(i + 1))]);
  return perm;
}

}  // namespace oracles
