#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsae/eval.hpp"
#include "gsae/graph.hpp"
#include "gsae/gsae_model.hpp"
#include "gsae/scattering.hpp"
#include "gsae/sin_model.hpp"

namespace gsae {

/// Shortest round-trip decimal representation (std::to_chars), so reruns of a
/// deterministic pipeline produce byte-identical files.
std::string format_double(double v);

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
};

/// Seeded shuffle, first ceil(rows * train_fraction) indices train, rest test.
SplitIndices train_test_split(int rows, double train_fraction, std::uint64_t seed);

// --- CSV / JSONL artifact writers (layouts per the documented interfaces) ---

void write_scattering_csv(const std::string& path, const Eigen::MatrixXd& rows);
Eigen::MatrixXd read_scattering_csv(const std::string& path);

void write_embedding_csv(const std::string& path, const Eigen::MatrixXd& embedding,
                         const std::optional<std::vector<double>>& meta);
void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history);

struct SmoothnessRow {
  std::string method;
  std::string signal;
  int k = 0;
  double dirichlet = 0.0;
  double smoothness_index = 0.0;
};
void write_smoothness_csv(const std::string& path, const std::vector<SmoothnessRow>& rows);

void write_coords_csv(const std::string& path, const Eigen::MatrixXd& coords);
void write_profile_csv(const std::string& path, const std::vector<int>& profile, int steps);
void write_metrics_csv(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& rows);

/// Graph list in the dataset JSONL schema (no meta).
void write_trajectory_jsonl(const std::string& path, const std::vector<Graph>& graphs);

/// Start indices drawn from the top meta quintile, end indices from the bottom
/// one (high-meta to low-meta endpoints for interpolation experiments).
std::vector<std::pair<int, int>> pick_interpolation_pairs(const std::vector<double>& meta,
                                                          int count, std::uint64_t seed);

/// Fraction of node pairs whose binarized inversion matches the true edge bit,
/// averaged over the given rows.
double binarized_edge_accuracy(SinModel& model, const GraphDataset& dataset,
                               const Eigen::MatrixXd& scattering_rows,
                               const std::vector<int>& indices);

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string dataset_path;
  std::string out_dir;

  // scattering
  int j_max = 0;  // 0 = ceil(log2 n) clamped to [1, 8]
  int q_max = 4;
  std::vector<int> orders = {0, 1, 2};
  bool self_loop_isolated = false;

  double train_fraction = 0.7;
  GsaeConfig gsae;

  bool train_sin = false;
  SinConfig sin;

  std::vector<int> k_values = {5, 10};
  bool eval_wl = true;
  int wl_iterations = 3;
  int wl_pca_dims = 25;
  bool eval_ged_mds = false;
  int ged_mds_max_rows = 2000;
  int ged_mds_dims = 25;
  int spearman_pairs = 1000;

  bool interpolate = false;
  int interpolate_pairs = 5;
  int interpolate_steps = 10;

  void validate() const;
  std::string to_json() const;
  /// Rejects unknown keys at every level.
  static PipelineConfig from_json(const std::string& text);
};

struct PipelineResult {
  ScatteringManifest manifest;
  std::vector<SmoothnessRow> smoothness;
  std::optional<double> test_energy_mse;
  std::optional<double> spearman;
  std::optional<double> sin_edge_accuracy;
  std::optional<double> sin_rescatter_mse;  // per-entry, binarized re-scatter
};

/// Full run: scatter -> split -> train GSAE -> embed -> reports -> optional
/// SIN -> optional trajectories. All artifacts land under cfg.out_dir; the
/// resolved config is written alongside them.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace gsae
