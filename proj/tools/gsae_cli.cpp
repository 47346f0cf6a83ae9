#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gsae/errors.hpp"
#include "gsae/eval.hpp"
#include "gsae/graph.hpp"
#include "gsae/gsae_model.hpp"
#include "gsae/pipeline.hpp"
#include "gsae/random.hpp"
#include "gsae/scattering.hpp"
#include "gsae/sin_model.hpp"

namespace fs = std::filesystem;
using namespace gsae;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

ScatteringConfig scattering_config_for(int n, int j_max, int q_max, const std::vector<int>& orders,
                                       bool self_loop_isolated) {
  ScatteringConfig cfg = ScatteringConfig::defaults_for(n);
  if (j_max > 0) cfg.j_max = j_max;
  cfg.q_max = q_max;
  cfg.orders = orders;
  cfg.self_loop_isolated = self_loop_isolated;
  cfg.validate();
  return cfg;
}

struct ScatterOptions {
  int j_max = 0;
  int q_max = 4;
  std::vector<int> orders = {0, 1, 2};
  bool self_loop_isolated = false;
};

void add_scatter_options(CLI::App* cmd, ScatterOptions& opt) {
  cmd->add_option("--j-max", opt.j_max, "Wavelet scales J (0 = ceil(log2 n), clamped to [1,8])");
  cmd->add_option("--q-max", opt.q_max, "Moment count Q");
  cmd->add_option("--orders", opt.orders, "Scattering orders, subset of {0,1,2}");
  cmd->add_flag("--self-loop-isolated", opt.self_loop_isolated,
                "Patch isolated nodes with a self-loop instead of erroring");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph embedding via geometric scattering + semi-supervised VAE, "
               "with scattering inversion and smoothness evaluation"};
  app.require_subcommand(1);

  // ---- gen-toy ----
  auto* gen_toy = app.add_subcommand("gen-toy", "Generate a random edge-flip graph trajectory");
  struct {
    int n = 10;
    double p = 0.5;
    int steps = 9999;
    std::uint64_t seed = 0;
    std::string out;
  } toy;
  gen_toy->add_option("--n", toy.n, "Node count");
  gen_toy->add_option("--p", toy.p, "Initial edge probability");
  gen_toy->add_option("--steps", toy.steps, "Edge flips (produces steps+1 graphs)");
  gen_toy->add_option("--seed", toy.seed, "Root seed");
  gen_toy->add_option("--out", toy.out, "Output dataset (JSONL)")->required();

  // ---- gen-folds ----
  auto* gen_folds = app.add_subcommand("gen-folds", "Enumerate toy RNA folds of one sequence");
  struct {
    std::string seq;
    std::size_t max_structures = 20000;
    std::uint64_t seed = 0;
    std::string out;
  } folds;
  gen_folds->add_option("--seq", folds.seq, "RNA sequence over A/C/G/U (length <= 30)")
      ->required();
  gen_folds->add_option("--max-structures", folds.max_structures,
                        "Subsample cap (without replacement)");
  gen_folds->add_option("--seed", folds.seed, "Subsample seed");
  gen_folds->add_option("--out", folds.out, "Output dataset (JSONL)")->required();

  // ---- ingest ----
  auto* ingest = app.add_subcommand("ingest", "Convert a dot-bracket file to a dataset");
  struct {
    std::string input;
    std::string out;
  } ing;
  ingest->add_option("--input", ing.input, "Dot-bracket file (optional trailing energies)")
      ->required();
  ingest->add_option("--out", ing.out, "Output dataset (JSONL)")->required();

  // ---- scatter ----
  auto* scatter = app.add_subcommand("scatter", "Compute scattering features of a dataset");
  struct {
    std::string dataset;
    std::string out;
    ScatterOptions opt;
  } sc;
  scatter->add_option("--dataset", sc.dataset, "Input dataset (JSONL)")->required();
  scatter->add_option("--out", sc.out, "Output CSV (sidecar <out>.manifest.json)")->required();
  add_scatter_options(scatter, sc.opt);

  // ---- train-gsae ----
  auto* train = app.add_subcommand("train-gsae", "Train the scattering autoencoder");
  struct {
    std::string scattering;
    std::string manifest;
    std::string dataset;
    std::string checkpoint;
    std::string history;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    GsaeConfig cfg;
  } tg;
  train->add_option("--scattering", tg.scattering, "Scattering CSV")->required();
  train->add_option("--manifest", tg.manifest, "Scattering manifest JSON")->required();
  train->add_option("--dataset", tg.dataset, "Dataset JSONL (supplies meta targets)");
  train->add_option("--checkpoint", tg.checkpoint, "Output checkpoint JSON")->required();
  train->add_option("--history", tg.history, "Output training-history CSV");
  train->add_option("--train-fraction", tg.train_fraction, "Train split fraction");
  train->add_option("--seed", tg.seed, "Root seed");
  train->add_option("--latent-dim", tg.cfg.latent_dim, "Bottleneck dimension");
  train->add_option("--alpha", tg.cfg.alpha, "Regression loss weight");
  train->add_option("--beta", tg.cfg.beta, "KL loss weight");
  train->add_option("--lr", tg.cfg.lr, "Adam learning rate");
  train->add_option("--iterations", tg.cfg.iterations, "Training iterations");
  train->add_option("--batch-size", tg.cfg.batch_size, "Minibatch size");
  train->add_option("--hidden-dims", tg.cfg.hidden_dims, "Encoder hidden widths");
  train->add_flag("!--no-variational", tg.cfg.variational, "Train as a plain autoencoder");
  train->add_flag("--standardize-targets", tg.cfg.standardize_targets,
                  "z-score meta targets during training");

  // ---- train-sin ----
  auto* tsin = app.add_subcommand("train-sin", "Pretrain + refine the scattering inverter");
  struct {
    std::string scattering;
    std::string manifest;
    std::string dataset;
    std::string checkpoint;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    SinConfig cfg;
  } ts;
  tsin->add_option("--scattering", ts.scattering, "Scattering CSV")->required();
  tsin->add_option("--manifest", ts.manifest, "Scattering manifest JSON")->required();
  tsin->add_option("--dataset", ts.dataset, "Dataset JSONL (true adjacencies)")->required();
  tsin->add_option("--checkpoint", ts.checkpoint, "Output checkpoint JSON")->required();
  tsin->add_option("--train-fraction", ts.train_fraction, "Train split fraction");
  tsin->add_option("--seed", ts.seed, "Root seed");
  tsin->add_option("--rank", ts.cfg.rank, "Node-embedding width r");
  tsin->add_option("--hidden-dims", ts.cfg.hidden_dims, "Block widths");
  tsin->add_option("--tau", ts.cfg.tau, "Binarization threshold");
  tsin->add_option("--lr", ts.cfg.lr, "Adam learning rate");
  tsin->add_option("--batch-size", ts.cfg.batch_size, "Minibatch size");
  tsin->add_option("--pretrain-max-iterations", ts.cfg.pretrain_max_iterations,
                   "Pretraining iteration cap");
  tsin->add_option("--refine-iterations", ts.cfg.refine_iterations, "Refinement iterations");

  // ---- embed ----
  auto* embed_cmd = app.add_subcommand("embed", "Embed scattering rows with a trained GSAE");
  struct {
    std::string checkpoint;
    std::string scattering;
    std::string dataset;
    std::string out;
  } em;
  embed_cmd->add_option("--checkpoint", em.checkpoint, "GSAE checkpoint")->required();
  embed_cmd->add_option("--scattering", em.scattering, "Scattering CSV")->required();
  embed_cmd->add_option("--dataset", em.dataset, "Dataset JSONL (copies meta into the CSV)");
  embed_cmd->add_option("--out", em.out, "Output embedding CSV")->required();

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "Smoothness / faithfulness reports");
  struct {
    std::string embedding;
    std::string dataset;
    std::string out;
    std::vector<int> k_values = {5, 10};
    int spearman_pairs = 1000;
    std::uint64_t seed = 0;
    bool wl = false;
    int wl_iterations = 3;
    int wl_pca_dims = 25;
    bool ged_mds = false;
    int ged_mds_dims = 25;
    int ged_mds_max_rows = 2000;
  } ev;
  eval_cmd->add_option("--embedding", ev.embedding, "Embedding CSV (graph_id,z0,...)")
      ->required();
  eval_cmd->add_option("--dataset", ev.dataset, "Dataset JSONL (meta signal + GED)")->required();
  eval_cmd->add_option("--out", ev.out, "Output smoothness CSV")->required();
  eval_cmd->add_option("--k", ev.k_values, "kNN sizes");
  eval_cmd->add_option("--spearman-pairs", ev.spearman_pairs, "Sampled pairs for faithfulness");
  eval_cmd->add_option("--seed", ev.seed, "Sampling seed");
  eval_cmd->add_flag("--wl", ev.wl, "Also report the WL-kernel embedding baseline");
  eval_cmd->add_option("--wl-iterations", ev.wl_iterations, "WL refinement rounds");
  eval_cmd->add_option("--wl-pca-dims", ev.wl_pca_dims, "PCA dims of the WL feature matrix");
  eval_cmd->add_flag("--ged-mds", ev.ged_mds, "Also report the GED + classical-MDS baseline");
  eval_cmd->add_option("--ged-mds-dims", ev.ged_mds_dims, "MDS dims");
  eval_cmd->add_option("--ged-mds-max-rows", ev.ged_mds_max_rows,
                       "Skip GED/MDS above this many graphs (quadratic cost)");

  // ---- interpolate ----
  auto* interp = app.add_subcommand("interpolate", "Decode latent-segment graph trajectories");
  struct {
    std::string gsae_ckpt;
    std::string sin_ckpt;
    std::string scattering;
    std::string dataset;
    std::string out_dir;
    int pairs = 5;
    int steps = 10;
    std::uint64_t seed = 0;
  } ip;
  interp->add_option("--gsae", ip.gsae_ckpt, "GSAE checkpoint")->required();
  interp->add_option("--sin", ip.sin_ckpt, "SIN checkpoint")->required();
  interp->add_option("--scattering", ip.scattering, "Scattering CSV")->required();
  interp->add_option("--dataset", ip.dataset, "Dataset JSONL (meta picks endpoints)")->required();
  interp->add_option("--out", ip.out_dir, "Output directory")->required();
  interp->add_option("--pairs", ip.pairs, "Endpoint pairs to interpolate");
  interp->add_option("--steps", ip.steps, "Points per trajectory");
  interp->add_option("--seed", ip.seed, "Endpoint sampling seed");

  // ---- pca ----
  auto* pca_cmd = app.add_subcommand("pca", "PCA projection of a feature/embedding CSV");
  struct {
    std::string input;
    std::string out;
    int dims = 2;
  } pc;
  pca_cmd->add_option("--input", pc.input, "Input CSV (graph_id,<values...>)")->required();
  pca_cmd->add_option("--out", pc.out, "Output coordinates CSV")->required();
  pca_cmd->add_option("--dims", pc.dims, "Projection dimensions");

  // ---- pipeline ----
  auto* pipe = app.add_subcommand("pipeline", "Run scatter -> split -> train -> embed -> eval");
  struct {
    std::string config;
    std::string dataset;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<long> iterations;
    bool sin_enabled = false;
    bool interpolate_enabled = false;
  } pl;
  pipe->add_option("--config", pl.config, "Pipeline config JSON (flags override)");
  pipe->add_option("--dataset", pl.dataset, "Dataset JSONL");
  pipe->add_option("--out", pl.out, "Run directory");
  pipe->add_option("--seed", pl.seed, "Root seed");
  pipe->add_option("--alpha", pl.alpha, "GSAE regression weight");
  pipe->add_option("--iterations", pl.iterations, "GSAE training iterations");
  pipe->add_flag("--sin", pl.sin_enabled, "Also train the scattering inverter");
  pipe->add_flag("--interpolate", pl.interpolate_enabled, "Also export latent trajectories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen_toy->parsed()) {
      save_dataset(gen_toy_trajectory(toy.n, toy.p, toy.steps, toy.seed), toy.out);
      std::cout << "stage=gen-toy graphs=" << toy.steps + 1 << " out=" << toy.out << '\n';
    } else if (gen_folds->parsed()) {
      const GraphDataset d =
          enumerate_folds(RnaSequence(folds.seq), folds.max_structures, folds.seed);
      save_dataset(d, folds.out);
      std::cout << "stage=gen-folds structures=" << d.size() << " out=" << folds.out << '\n';
    } else if (ingest->parsed()) {
      const GraphDataset d = ingest_dot_bracket_file(ing.input);
      save_dataset(d, ing.out);
      std::cout << "stage=ingest structures=" << d.size() << " n=" << d.n << '\n';
    } else if (scatter->parsed()) {
      const GraphDataset d = load_dataset(sc.dataset);
      const ScatteringConfig cfg = scattering_config_for(d.n, sc.opt.j_max, sc.opt.q_max,
                                                         sc.opt.orders, sc.opt.self_loop_isolated);
      write_scattering_csv(sc.out, scatter_dataset(d, cfg));
      ScatteringManifest::from(d.n, cfg).save(sc.out + ".manifest.json");
      std::cout << "stage=scatter rows=" << d.size()
                << " feature_len=" << cfg.feature_length(d.n) << '\n';
    } else if (train->parsed()) {
      const Eigen::MatrixXd rows = read_scattering_csv(tg.scattering);
      const ScatteringManifest manifest = ScatteringManifest::load(tg.manifest);
      std::optional<Eigen::VectorXd> meta;
      if (!tg.dataset.empty()) {
        const GraphDataset d = load_dataset(tg.dataset);
        if (d.meta) {
          const SplitIndices split = train_test_split(static_cast<int>(rows.rows()),
                                                      tg.train_fraction,
                                                      stage_seed(tg.seed, "split"));
          Eigen::MatrixXd train_rows(static_cast<Eigen::Index>(split.train.size()), rows.cols());
          Eigen::VectorXd train_meta(static_cast<Eigen::Index>(split.train.size()));
          for (std::size_t i = 0; i < split.train.size(); ++i) {
            train_rows.row(static_cast<Eigen::Index>(i)) = rows.row(split.train[i]);
            train_meta(static_cast<Eigen::Index>(i)) = (*d.meta)[split.train[i]];
          }
          tg.cfg.seed = stage_seed(tg.seed, "gsae");
          GsaeTrainResult res = train_gsae(train_rows, train_meta, manifest, tg.cfg);
          res.model.save(tg.checkpoint);
          if (!tg.history.empty()) write_history_csv(tg.history, res.history);
          std::cout << "stage=train-gsae train_rows=" << split.train.size() << '\n';
          return 0;
        }
      }
      // No meta available: train unsupervised on a plain split.
      const SplitIndices split = train_test_split(static_cast<int>(rows.rows()),
                                                  tg.train_fraction, stage_seed(tg.seed, "split"));
      Eigen::MatrixXd train_rows(static_cast<Eigen::Index>(split.train.size()), rows.cols());
      for (std::size_t i = 0; i < split.train.size(); ++i)
        train_rows.row(static_cast<Eigen::Index>(i)) = rows.row(split.train[i]);
      tg.cfg.seed = stage_seed(tg.seed, "gsae");
      GsaeTrainResult res = train_gsae(train_rows, std::nullopt, manifest, tg.cfg);
      res.model.save(tg.checkpoint);
      if (!tg.history.empty()) write_history_csv(tg.history, res.history);
      std::cout << "stage=train-gsae train_rows=" << split.train.size() << '\n';
    } else if (tsin->parsed()) {
      const Eigen::MatrixXd rows = read_scattering_csv(ts.scattering);
      const ScatteringManifest manifest = ScatteringManifest::load(ts.manifest);
      const GraphDataset d = load_dataset(ts.dataset);
      const SplitIndices split = train_test_split(static_cast<int>(rows.rows()),
                                                  ts.train_fraction, stage_seed(ts.seed, "split"));
      GraphDataset train_set;
      train_set.n = d.n;
      Eigen::MatrixXd train_rows(static_cast<Eigen::Index>(split.train.size()), rows.cols());
      for (std::size_t i = 0; i < split.train.size(); ++i) {
        train_set.graphs.push_back(d.graphs[split.train[i]]);
        train_rows.row(static_cast<Eigen::Index>(i)) = rows.row(split.train[i]);
      }
      ts.cfg.seed = stage_seed(ts.seed, "sin");
      SinModel model(manifest, ts.cfg);
      const SinTrainStats pre = pretrain_sin(model, train_set, train_rows);
      const SinTrainStats ref = refine_sin(model, train_rows);
      model.save(ts.checkpoint);
      const double acc = binarized_edge_accuracy(model, d, rows, split.test.empty() ? split.train
                                                                                    : split.test);
      std::cout << "stage=train-sin pretrain_iters=" << pre.iterations
                << " refine_iters=" << ref.iterations << " edge_accuracy=" << acc << '\n';
    } else if (embed_cmd->parsed()) {
      GsaeModel model = GsaeModel::load(em.checkpoint);
      const Eigen::MatrixXd rows = read_scattering_csv(em.scattering);
      std::optional<std::vector<double>> meta;
      if (!em.dataset.empty()) meta = load_dataset(em.dataset).meta;
      write_embedding_csv(em.out, model.embed(rows), meta);
      std::cout << "stage=embed rows=" << rows.rows() << '\n';
    } else if (eval_cmd->parsed()) {
      const Eigen::MatrixXd embedding = read_scattering_csv(ev.embedding);
      const GraphDataset d = load_dataset(ev.dataset);
      if (!d.meta) throw ConfigError("eval needs a dataset with a meta signal");
      // Embedding CSVs written by this tool carry a trailing meta column when
      // the dataset has one; drop it so distances use latent coordinates only.
      Eigen::MatrixXd emb = embedding;
      if (d.meta && emb.cols() >= 2) emb = embedding.leftCols(embedding.cols() - 1).eval();
      const Eigen::VectorXd signal =
          Eigen::Map<const Eigen::VectorXd>(d.meta->data(), d.meta->size());
      std::vector<SmoothnessRow> out_rows;
      std::optional<Eigen::MatrixXd> wl_embedding;
      if (ev.wl) {
        WlFeaturizer wl;
        const Eigen::MatrixXd f = wl.feature_matrix(d.graphs, ev.wl_iterations);
        const int dims =
            std::min<int>(ev.wl_pca_dims, static_cast<int>(std::min(f.rows(), f.cols())));
        wl_embedding = pca_project(f, dims).projected;
      }
      std::optional<Eigen::MatrixXd> ged_emb;
      if (ev.ged_mds && static_cast<int>(d.size()) <= ev.ged_mds_max_rows)
        ged_emb = ged_mds_embedding(d, ev.ged_mds_dims);
      for (int k : ev.k_values) {
        const SmoothnessReport r = smoothness(emb, signal, k, d.meta_name);
        out_rows.push_back({"embedding", d.meta_name, k, r.dirichlet, r.smoothness_index});
        if (wl_embedding) {
          const SmoothnessReport w = smoothness(*wl_embedding, signal, k, d.meta_name);
          out_rows.push_back({"wl_kernel", d.meta_name, k, w.dirichlet, w.smoothness_index});
        }
        if (ged_emb) {
          const SmoothnessReport g = smoothness(*ged_emb, signal, k, d.meta_name);
          out_rows.push_back({"ged_mds", d.meta_name, k, g.dirichlet, g.smoothness_index});
        }
      }
      write_smoothness_csv(ev.out, out_rows);
      const double rho = faithfulness_spearman(
          emb, d, std::min<int>(ev.spearman_pairs, 4 * static_cast<int>(d.size())), ev.seed);
      std::cout << "stage=eval spearman=" << rho << " out=" << ev.out << '\n';
    } else if (interp->parsed()) {
      GsaeModel gsae_model = GsaeModel::load(ip.gsae_ckpt);
      SinModel sin_model = SinModel::load(ip.sin_ckpt);
      const Eigen::MatrixXd rows = read_scattering_csv(ip.scattering);
      const GraphDataset d = load_dataset(ip.dataset);
      if (!d.meta) throw ConfigError("interpolate needs a dataset with a meta property");
      const Eigen::MatrixXd embedding = gsae_model.embed(rows);
      const auto pairs = pick_interpolation_pairs(*d.meta, ip.pairs, ip.seed);
      fs::create_directories(ip.out_dir);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const std::vector<Graph> traj = generate_trajectory(
            gsae_model, sin_model, embedding.row(pairs[p].first).transpose(),
            embedding.row(pairs[p].second).transpose(), ip.steps);
        const std::string stem =
            (fs::path(ip.out_dir) / ("trajectory_" + std::to_string(p))).string();
        write_trajectory_jsonl(stem + ".jsonl", traj);
        write_profile_csv(stem + "_profile.csv", trajectory_edit_profile(traj), ip.steps);
      }
      std::cout << "stage=interpolate pairs=" << pairs.size() << '\n';
    } else if (pca_cmd->parsed()) {
      const Eigen::MatrixXd data = read_scattering_csv(pc.input);
      const PcaResult r = pca_project(
          data, std::min<int>(pc.dims, static_cast<int>(std::min(data.rows(), data.cols()))));
      write_coords_csv(pc.out, r.projected);
      std::cout << "stage=pca dims=" << r.projected.cols() << " ev0="
                << (r.explained_variance.size() > 0 ? r.explained_variance(0) : 0.0) << '\n';
    } else if (pipe->parsed()) {
      PipelineConfig cfg;
      if (!pl.config.empty()) cfg = PipelineConfig::from_json(slurp(pl.config));
      if (!pl.dataset.empty()) cfg.dataset_path = pl.dataset;
      if (!pl.out.empty()) cfg.out_dir = pl.out;
      if (pl.seed) cfg.seed = *pl.seed;
      if (pl.alpha) cfg.gsae.alpha = *pl.alpha;
      if (pl.iterations) cfg.gsae.iterations = *pl.iterations;
      if (pl.sin_enabled) cfg.train_sin = true;
      if (pl.interpolate_enabled) cfg.interpolate = true;
      run_pipeline(cfg);
      std::cout << "stage=pipeline out=" << cfg.out_dir << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
