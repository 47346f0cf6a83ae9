#include "gsae/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "gsae/errors.hpp"
#include "gsae/random.hpp"
#include "nlohmann/json.hpp"

namespace gsae {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("double formatting failed");
  return std::string(buf, ptr);
}

SplitIndices train_test_split(int rows, double train_fraction, std::uint64_t seed) {
  if (rows < 1) throw Error("split needs at least one row");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw ConfigError("train_fraction must be in (0, 1]");
  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = rows - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[i], order[j]);
  }
  const int cut = std::min(rows, static_cast<int>(std::ceil(rows * train_fraction)));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + cut);
  s.test.assign(order.begin() + cut, order.end());
  return s;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  return out;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return out;
}

Eigen::VectorXd gather(const std::vector<double>& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[idx[i]];
  return out;
}

}  // namespace

void write_scattering_csv(const std::string& path, const Eigen::MatrixXd& rows) {
  auto out = open_out(path);
  out << "graph_id";
  for (Eigen::Index c = 0; c < rows.cols(); ++c) out << ",f" << c;
  out << '\n';
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < rows.cols(); ++c) out << ',' << format_double(rows(r, c));
    out << '\n';
  }
}

Eigen::MatrixXd read_scattering_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw IoFailure("empty scattering csv");
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    bool first = true;
    while (p < end) {
      const char* comma = std::find(p, end, ',');
      if (!first) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(p, comma, v);
        if (ec != std::errc() || ptr != comma)
          throw IoFailure("bad number at line " + std::to_string(line_no));
        row.push_back(v);
      }
      first = false;
      p = comma == end ? end : comma + 1;
    }
    if (!rows.empty() && rows.front().size() != row.size())
      throw IoFailure("ragged scattering csv at line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

void write_embedding_csv(const std::string& path, const Eigen::MatrixXd& embedding,
                         const std::optional<std::vector<double>>& meta) {
  if (meta && static_cast<Eigen::Index>(meta->size()) != embedding.rows())
    throw LengthMismatch(meta->size(), static_cast<std::size_t>(embedding.rows()));
  auto out = open_out(path);
  out << "graph_id";
  for (Eigen::Index c = 0; c < embedding.cols(); ++c) out << ",z" << c;
  if (meta) out << ",meta";
  out << '\n';
  for (Eigen::Index r = 0; r < embedding.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < embedding.cols(); ++c)
      out << ',' << format_double(embedding(r, c));
    if (meta) out << ',' << format_double((*meta)[r]);
    out << '\n';
  }
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history) {
  auto out = open_out(path);
  out << "iteration,total,recon,pred,kl\n";
  for (const HistoryRow& h : history)
    out << h.iteration << ',' << format_double(h.total) << ',' << format_double(h.recon) << ','
        << format_double(h.pred) << ',' << format_double(h.kl) << '\n';
}

void write_smoothness_csv(const std::string& path, const std::vector<SmoothnessRow>& rows) {
  auto out = open_out(path);
  out << "method,signal,k,dirichlet,smoothness_index\n";
  for (const SmoothnessRow& r : rows)
    out << r.method << ',' << r.signal << ',' << r.k << ',' << format_double(r.dirichlet) << ','
        << format_double(r.smoothness_index) << '\n';
}

void write_coords_csv(const std::string& path, const Eigen::MatrixXd& coords) {
  auto out = open_out(path);
  out << "graph_id";
  for (Eigen::Index c = 0; c < coords.cols(); ++c) out << ",c" << c;
  out << '\n';
  for (Eigen::Index r = 0; r < coords.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < coords.cols(); ++c) out << ',' << format_double(coords(r, c));
    out << '\n';
  }
}

void write_profile_csv(const std::string& path, const std::vector<int>& profile, int steps) {
  auto out = open_out(path);
  out << "t,ged_to_final\n";
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double t =
        steps > 1 ? static_cast<double>(i) / static_cast<double>(steps - 1) : 0.0;
    out << format_double(t) << ',' << profile[i] << '\n';
  }
}

void write_metrics_csv(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& rows) {
  auto out = open_out(path);
  out << "metric,value\n";
  for (const auto& [k, v] : rows) out << k << ',' << v << '\n';
}

void write_trajectory_jsonl(const std::string& path, const std::vector<Graph>& graphs) {
  GraphDataset d;
  d.n = graphs.empty() ? 1 : graphs.front().node_count();
  d.graphs = graphs;
  save_dataset(d, path);
}

std::vector<std::pair<int, int>> pick_interpolation_pairs(const std::vector<double>& meta,
                                                          int count, std::uint64_t seed) {
  if (meta.size() < 2) throw Error("need at least 2 rows");
  std::vector<int> order(meta.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return meta[a] != meta[b] ? meta[a] < meta[b] : a < b;
  });
  const std::size_t quintile = std::max<std::size_t>(1, meta.size() / 5);
  std::vector<int> low(order.begin(), order.begin() + quintile);
  std::vector<int> high(order.end() - quintile, order.end());

  Rng rng(seed);
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int a = high[rng.uniform_int(high.size())];
    const int b = low[rng.uniform_int(low.size())];
    pairs.emplace_back(a, b);
  }
  return pairs;
}

double binarized_edge_accuracy(SinModel& model, const GraphDataset& dataset,
                               const Eigen::MatrixXd& scattering_rows,
                               const std::vector<int>& indices) {
  if (indices.empty()) throw Error("edge accuracy needs at least one row");
  const int n = dataset.n;
  const double pairs = static_cast<double>(n) * (n - 1) / 2.0;
  double correct = 0.0;
  for (int idx : indices) {
    const Graph predicted =
        binarize(model.invert(scattering_rows.row(idx).transpose()), model.config().tau);
    correct += pairs - static_cast<double>(ged_fixed(predicted, dataset.graphs[idx]));
  }
  return correct / (pairs * static_cast<double>(indices.size()));
}

void PipelineConfig::validate() const {
  if (dataset_path.empty()) throw ConfigError("dataset path is required");
  if (out_dir.empty()) throw ConfigError("output directory is required");
  if (q_max < 1) throw ConfigError("q_max must be >= 1");
  if (j_max < 0) throw ConfigError("j_max must be >= 0 (0 = auto)");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must be in (0, 1)");
  for (int k : k_values)
    if (k < 1) throw ConfigError("k values must be >= 1");
  gsae.validate();
  if (train_sin) sin.validate();
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& scope) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(known.begin(), known.end(),
                     [&](const char* k) { return key == k; }) == known.end())
      throw ConfigError("unknown key '" + key + "' in " + scope);
  }
}

}  // namespace

std::string PipelineConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["dataset"] = dataset_path;
  j["out"] = out_dir;
  j["scattering"] = {{"j_max", j_max},
                     {"q_max", q_max},
                     {"orders", orders},
                     {"self_loop_isolated", self_loop_isolated}};
  j["train_fraction"] = train_fraction;
  j["gsae"] = {{"latent_dim", gsae.latent_dim},
               {"alpha", gsae.alpha},
               {"beta", gsae.beta},
               {"lr", gsae.lr},
               {"iterations", gsae.iterations},
               {"batch_size", gsae.batch_size},
               {"hidden_dims", gsae.hidden_dims},
               {"variational", gsae.variational},
               {"standardize_targets", gsae.standardize_targets},
               {"history_every", gsae.history_every}};
  j["sin"] = {{"enabled", train_sin},
              {"rank", sin.rank},
              {"hidden_dims", sin.hidden_dims},
              {"tau", sin.tau},
              {"lr", sin.lr},
              {"batch_size", sin.batch_size},
              {"pretrain_max_iterations", sin.pretrain_max_iterations},
              {"pretrain_window", sin.pretrain_window},
              {"pretrain_rel_tol", sin.pretrain_rel_tol},
              {"refine_iterations", sin.refine_iterations}};
  j["eval"] = {{"k_values", k_values},
               {"wl", eval_wl},
               {"wl_iterations", wl_iterations},
               {"wl_pca_dims", wl_pca_dims},
               {"ged_mds", eval_ged_mds},
               {"ged_mds_max_rows", ged_mds_max_rows},
               {"ged_mds_dims", ged_mds_dims},
               {"spearman_pairs", spearman_pairs}};
  j["interpolate"] = {{"enabled", interpolate},
                      {"pairs", interpolate_pairs},
                      {"steps", interpolate_steps}};
  return j.dump(2);
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  reject_unknown(j, {"seed", "dataset", "out", "scattering", "train_fraction", "gsae", "sin",
                     "eval", "interpolate"},
                 "config root");
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("dataset")) c.dataset_path = j["dataset"].get<std::string>();
  if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  if (j.contains("train_fraction")) c.train_fraction = j["train_fraction"].get<double>();
  if (j.contains("scattering")) {
    const json& s = j["scattering"];
    reject_unknown(s, {"j_max", "q_max", "orders", "self_loop_isolated"}, "scattering");
    if (s.contains("j_max")) c.j_max = s["j_max"].get<int>();
    if (s.contains("q_max")) c.q_max = s["q_max"].get<int>();
    if (s.contains("orders")) c.orders = s["orders"].get<std::vector<int>>();
    if (s.contains("self_loop_isolated"))
      c.self_loop_isolated = s["self_loop_isolated"].get<bool>();
  }
  if (j.contains("gsae")) {
    const json& g = j["gsae"];
    reject_unknown(g,
                   {"latent_dim", "alpha", "beta", "lr", "iterations", "batch_size",
                    "hidden_dims", "variational", "standardize_targets", "history_every"},
                   "gsae");
    if (g.contains("latent_dim")) c.gsae.latent_dim = g["latent_dim"].get<int>();
    if (g.contains("alpha")) c.gsae.alpha = g["alpha"].get<double>();
    if (g.contains("beta")) c.gsae.beta = g["beta"].get<double>();
    if (g.contains("lr")) c.gsae.lr = g["lr"].get<double>();
    if (g.contains("iterations")) c.gsae.iterations = g["iterations"].get<long>();
    if (g.contains("batch_size")) c.gsae.batch_size = g["batch_size"].get<int>();
    if (g.contains("hidden_dims")) c.gsae.hidden_dims = g["hidden_dims"].get<std::vector<int>>();
    if (g.contains("variational")) c.gsae.variational = g["variational"].get<bool>();
    if (g.contains("standardize_targets"))
      c.gsae.standardize_targets = g["standardize_targets"].get<bool>();
    if (g.contains("history_every")) c.gsae.history_every = g["history_every"].get<long>();
  }
  if (j.contains("sin")) {
    const json& s = j["sin"];
    reject_unknown(s,
                   {"enabled", "rank", "hidden_dims", "tau", "lr", "batch_size",
                    "pretrain_max_iterations", "pretrain_window", "pretrain_rel_tol",
                    "refine_iterations"},
                   "sin");
    if (s.contains("enabled")) c.train_sin = s["enabled"].get<bool>();
    if (s.contains("rank")) c.sin.rank = s["rank"].get<int>();
    if (s.contains("hidden_dims")) c.sin.hidden_dims = s["hidden_dims"].get<std::vector<int>>();
    if (s.contains("tau")) c.sin.tau = s["tau"].get<double>();
    if (s.contains("lr")) c.sin.lr = s["lr"].get<double>();
    if (s.contains("batch_size")) c.sin.batch_size = s["batch_size"].get<int>();
    if (s.contains("pretrain_max_iterations"))
      c.sin.pretrain_max_iterations = s["pretrain_max_iterations"].get<long>();
    if (s.contains("pretrain_window")) c.sin.pretrain_window = s["pretrain_window"].get<long>();
    if (s.contains("pretrain_rel_tol"))
      c.sin.pretrain_rel_tol = s["pretrain_rel_tol"].get<double>();
    if (s.contains("refine_iterations"))
      c.sin.refine_iterations = s["refine_iterations"].get<long>();
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    reject_unknown(e,
                   {"k_values", "wl", "wl_iterations", "wl_pca_dims", "ged_mds",
                    "ged_mds_max_rows", "ged_mds_dims", "spearman_pairs"},
                   "eval");
    if (e.contains("k_values")) c.k_values = e["k_values"].get<std::vector<int>>();
    if (e.contains("wl")) c.eval_wl = e["wl"].get<bool>();
    if (e.contains("wl_iterations")) c.wl_iterations = e["wl_iterations"].get<int>();
    if (e.contains("wl_pca_dims")) c.wl_pca_dims = e["wl_pca_dims"].get<int>();
    if (e.contains("ged_mds")) c.eval_ged_mds = e["ged_mds"].get<bool>();
    if (e.contains("ged_mds_max_rows")) c.ged_mds_max_rows = e["ged_mds_max_rows"].get<int>();
    if (e.contains("ged_mds_dims")) c.ged_mds_dims = e["ged_mds_dims"].get<int>();
    if (e.contains("spearman_pairs")) c.spearman_pairs = e["spearman_pairs"].get<int>();
  }
  if (j.contains("interpolate")) {
    const json& i = j["interpolate"];
    reject_unknown(i, {"enabled", "pairs", "steps"}, "interpolate");
    if (i.contains("enabled")) c.interpolate = i["enabled"].get<bool>();
    if (i.contains("pairs")) c.interpolate_pairs = i["pairs"].get<int>();
    if (i.contains("steps")) c.interpolate_steps = i["steps"].get<int>();
  }
  return c;
}

PipelineResult run_pipeline(const PipelineConfig& cfg_in) {
  PipelineConfig cfg = cfg_in;
  cfg.validate();

  fs::create_directories(cfg.out_dir);
  const auto artifact = [&](const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
  };

  const GraphDataset dataset = load_dataset(cfg.dataset_path);
  std::cout << "stage=load rows=" << dataset.size() << " n=" << dataset.n << '\n';

  ScatteringConfig scfg = ScatteringConfig::defaults_for(dataset.n);
  if (cfg.j_max > 0) scfg.j_max = cfg.j_max;
  scfg.q_max = cfg.q_max;
  scfg.orders = cfg.orders;
  scfg.self_loop_isolated = cfg.self_loop_isolated;

  PipelineResult result;
  result.manifest = ScatteringManifest::from(dataset.n, scfg);

  const Eigen::MatrixXd scattering = scatter_dataset(dataset, scfg);
  write_scattering_csv(artifact("scattering.csv"), scattering);
  result.manifest.save(artifact("scattering.manifest.json"));
  std::cout << "stage=scatter feature_len=" << result.manifest.feature_len << '\n';

  const SplitIndices split = train_test_split(static_cast<int>(dataset.size()),
                                              cfg.train_fraction, stage_seed(cfg.seed, "split"));

  GsaeConfig gcfg = cfg.gsae;
  gcfg.seed = stage_seed(cfg.seed, "gsae");
  const Eigen::MatrixXd train_rows = gather_rows(scattering, split.train);
  std::optional<Eigen::VectorXd> train_meta;
  if (dataset.meta) train_meta = gather(*dataset.meta, split.train);

  GsaeTrainResult trained = train_gsae(train_rows, train_meta, result.manifest, gcfg);
  trained.model.save(artifact("gsae_checkpoint.json"));
  write_history_csv(artifact("history.csv"), trained.history);
  std::cout << "stage=train-gsae iterations=" << gcfg.iterations
            << " final_recon=" << (trained.history.empty() ? 0.0 : trained.history.back().recon)
            << '\n';

  const Eigen::MatrixXd embedding = trained.model.embed(scattering);
  write_embedding_csv(artifact("embedding.csv"), embedding, dataset.meta);

  std::vector<std::pair<std::string, std::string>> metrics;

  if (dataset.meta) {
    const Eigen::VectorXd signal =
        Eigen::Map<const Eigen::VectorXd>(dataset.meta->data(), dataset.meta->size());

    std::optional<Eigen::MatrixXd> wl_embedding;
    if (cfg.eval_wl) {
      WlFeaturizer wl;
      const Eigen::MatrixXd wl_features = wl.feature_matrix(dataset.graphs, cfg.wl_iterations);
      const int dims = std::min<int>(cfg.wl_pca_dims, static_cast<int>(std::min(
                                                          wl_features.rows(), wl_features.cols())));
      wl_embedding = pca_project(wl_features, dims).projected;
    }

    std::optional<Eigen::MatrixXd> ged_embedding;
    if (cfg.eval_ged_mds && static_cast<int>(dataset.size()) <= cfg.ged_mds_max_rows)
      ged_embedding = ged_mds_embedding(dataset, cfg.ged_mds_dims);

    for (int k : cfg.k_values) {
      const auto push = [&](const std::string& method, const Eigen::MatrixXd& emb) {
        const SmoothnessReport rep = smoothness(emb, signal, k, dataset.meta_name);
        result.smoothness.push_back(
            {method, dataset.meta_name, k, rep.dirichlet, rep.smoothness_index});
      };
      push("gsae", embedding);
      push("scattering", scattering);
      if (wl_embedding) push("wl_kernel", *wl_embedding);
      if (ged_embedding) push("ged_mds", *ged_embedding);
    }
    write_smoothness_csv(artifact("smoothness.csv"), result.smoothness);

    if (cfg.gsae.alpha > 0.0 && !split.test.empty()) {
      const Eigen::VectorXd pred =
          trained.model.predict_energy(gather_rows(scattering, split.test));
      result.test_energy_mse = energy_mse_report(pred, gather(*dataset.meta, split.test));
      metrics.emplace_back("test_energy_mse", format_double(*result.test_energy_mse));
    } else {
      metrics.emplace_back("test_energy_mse", "n/a");
    }

    result.spearman = faithfulness_spearman(
        embedding, dataset, std::min<int>(cfg.spearman_pairs, 4 * static_cast<int>(dataset.size())),
        stage_seed(cfg.seed, "spearman"));
    metrics.emplace_back("embedding_ged_spearman", format_double(*result.spearman));
  }

  std::optional<SinModel> sin;
  if (cfg.train_sin) {
    SinConfig sincfg = cfg.sin;
    sincfg.seed = stage_seed(cfg.seed, "sin");
    sin.emplace(result.manifest, sincfg);

    GraphDataset train_set;
    train_set.n = dataset.n;
    for (int idx : split.train) train_set.graphs.push_back(dataset.graphs[idx]);

    const SinTrainStats pre = pretrain_sin(*sin, train_set, train_rows);
    std::cout << "stage=train-sin phase=pretrain iterations=" << pre.iterations
              << " final_bce=" << pre.final_loss << '\n';
    const SinTrainStats ref = refine_sin(*sin, train_rows);
    std::cout << "stage=train-sin phase=refine iterations=" << ref.iterations
              << " rescatter_mse_before=" << ref.initial_loss
              << " rescatter_mse_after=" << ref.final_loss << '\n';
    sin->save(artifact("sin_checkpoint.json"));

    const std::vector<int>& report_rows = split.test.empty() ? split.train : split.test;
    result.sin_edge_accuracy = binarized_edge_accuracy(*sin, dataset, scattering, report_rows);
    result.sin_rescatter_mse = sin->binarized_rescatter_mse(gather_rows(scattering, report_rows));
    metrics.emplace_back("sin_edge_accuracy", format_double(*result.sin_edge_accuracy));
    metrics.emplace_back("sin_rescatter_mse", format_double(*result.sin_rescatter_mse));
  }

  if (cfg.interpolate) {
    if (!sin) throw ConfigError("interpolation requires sin.enabled = true");
    if (!dataset.meta) throw ConfigError("interpolation requires a meta property");
    const auto pairs = pick_interpolation_pairs(*dataset.meta, cfg.interpolate_pairs,
                                                stage_seed(cfg.seed, "interpolate"));
    const fs::path traj_dir = fs::path(cfg.out_dir) / "trajectories";
    fs::create_directories(traj_dir);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const Eigen::VectorXd z_a = embedding.row(pairs[p].first).transpose();
      const Eigen::VectorXd z_b = embedding.row(pairs[p].second).transpose();
      const std::vector<Graph> traj =
          generate_trajectory(trained.model, *sin, z_a, z_b, cfg.interpolate_steps);
      const std::string stem = "trajectory_" + std::to_string(p);
      write_trajectory_jsonl((traj_dir / (stem + ".jsonl")).string(), traj);
      write_profile_csv((traj_dir / (stem + "_profile.csv")).string(),
                        trajectory_edit_profile(traj), cfg.interpolate_steps);
    }
    std::cout << "stage=interpolate pairs=" << pairs.size() << '\n';
  }

  write_metrics_csv(artifact("metrics.csv"), metrics);

  std::ofstream cfg_out(artifact("config.json"));
  if (!cfg_out) throw IoFailure("cannot write resolved config");
  cfg_out << cfg.to_json() << '\n';

  return result;
}

}  // namespace gsae
