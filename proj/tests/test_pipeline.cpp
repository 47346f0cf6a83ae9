#include "gsae/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "gsae/errors.hpp"
#include "gsae/random.hpp"
#include "oracles.hpp"

using namespace gsae;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("format_double round trips") {
  for (double v : {0.0, -0.0, 1.0, 1e-300, -3.141592653589793, 0.1, 1e17, 123456.789}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("train/test split partitions deterministically") {
  const SplitIndices s = train_test_split(100, 0.7, 5);
  CHECK(s.train.size() == 70);
  CHECK(s.test.size() == 30);
  std::set<int> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 100);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 99);

  const SplitIndices again = train_test_split(100, 0.7, 5);
  CHECK(s.train == again.train);
  CHECK(s.test == again.test);
  const SplitIndices other = train_test_split(100, 0.7, 6);
  CHECK(s.train != other.train);
}

TEST_CASE("scattering csv round trip") {
  Rng rng(3);
  Eigen::MatrixXd m(5, 7);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 7; ++c) m(r, c) = rng.normal() * std::pow(10.0, (r - 2) * 3);
  const std::string path = temp_path("gsae_scatter_roundtrip.csv");
  write_scattering_csv(path, m);
  const Eigen::MatrixXd back = read_scattering_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.rows() == 5);
  REQUIRE(back.cols() == 7);
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pipeline config json: round trip and unknown-key rejection") {
  PipelineConfig cfg;
  cfg.seed = 11;
  cfg.dataset_path = "data.jsonl";
  cfg.out_dir = "out";
  cfg.gsae.alpha = 0.5;
  cfg.gsae.hidden_dims = {64, 32};
  cfg.train_sin = true;
  cfg.sin.rank = 8;
  const PipelineConfig back = PipelineConfig::from_json(cfg.to_json());
  CHECK(back.seed == 11);
  CHECK(back.gsae.alpha == 0.5);
  CHECK(back.gsae.hidden_dims == std::vector<int>{64, 32});
  CHECK(back.train_sin);
  CHECK(back.sin.rank == 8);

  CHECK_THROWS_AS(PipelineConfig::from_json("{\"sede\": 1}"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json("{\"gsae\": {\"alhpa\": 0.5}}"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json("not json"), ConfigError);
}

TEST_CASE("interpolation pairs go from the high quintile to the low one") {
  std::vector<double> meta(50);
  for (int i = 0; i < 50; ++i) meta[i] = static_cast<double>(i);
  const auto pairs = pick_interpolation_pairs(meta, 20, 3);
  REQUIRE(pairs.size() == 20);
  for (const auto& [hi, lo] : pairs) {
    CHECK(meta[hi] >= 40.0);  // top quintile
    CHECK(meta[lo] <= 9.0);   // bottom quintile
  }
  CHECK(pairs == pick_interpolation_pairs(meta, 20, 3));
}

TEST_CASE("profile csv layout") {
  const std::string path = temp_path("gsae_profile.csv");
  write_profile_csv(path, {3, 2, 2, 0}, 4);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,ged_to_final");
  std::getline(in, line);
  CHECK(line == "0,3");
  std::getline(in, line);
  CHECK(line.substr(0, line.find(',')) == format_double(1.0 / 3.0));
  std::remove(path.c_str());
}

TEST_CASE("embedding csv carries the meta column when present") {
  Eigen::MatrixXd emb(2, 2);
  emb << 1, 2, 3, 4;
  const std::string path = temp_path("gsae_embed.csv");
  write_embedding_csv(path, emb, std::vector<double>{0.5, -1.5});
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "graph_id,z0,z1,meta");
  CHECK(row == "0,1,2,0.5");
  std::remove(path.c_str());
}

}  // TEST_SUITE
