#include "gsae/gsae_model.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gsae/errors.hpp"
#include "gsae/pipeline.hpp"
#include "gsae/random.hpp"
#include "nlohmann/json.hpp"
#include "oracles.hpp"

using namespace gsae;

namespace {

ScatteringManifest tiny_manifest(int n = 3, int j = 2, int q = 2) {
  ScatteringConfig cfg;
  cfg.j_max = j;
  cfg.q_max = q;
  return ScatteringManifest::from(n, cfg);
}

GsaeConfig tiny_config(std::uint64_t seed) {
  GsaeConfig cfg;
  cfg.latent_dim = 3;
  cfg.hidden_dims = {10, 8};
  cfg.batch_size = 4;
  cfg.seed = seed;
  return cfg;
}

Eigen::MatrixXd random_rows(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("gsae") {

TEST_CASE("reparameterize basic identities") {
  Eigen::MatrixXd mu(2, 3), lv(2, 3), noise(2, 3);
  mu << 1, 2, 3, 4, 5, 6;
  lv.setZero();
  noise.setZero();
  CHECK((GsaeModel::reparameterize(mu, lv, noise) - mu).cwiseAbs().maxCoeff() == 0.0);
  noise.setConstant(0.25);
  CHECK((GsaeModel::reparameterize(mu, lv, noise) - (mu.array() + 0.25).matrix())
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  CHECK_THROWS_AS(GsaeModel::reparameterize(mu, lv, Eigen::MatrixXd::Zero(1, 3)), ShapeMismatch);
}

TEST_CASE("reparameterize Monte-Carlo mean matches mu") {
  const int draws = 100000;
  Eigen::RowVectorXd mu(3), lv(3);
  mu << 0.3, -1.0, 2.0;
  lv << 0.0, 0.4, -0.6;
  Rng rng(8);
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(3);
  Eigen::MatrixXd noise(1, 3);
  for (int d = 0; d < draws; ++d) {
    for (int c = 0; c < 3; ++c) noise(0, c) = rng.normal();
    sum += GsaeModel::reparameterize(mu, lv, noise).row(0);
  }
  const Eigen::RowVectorXd mean = sum / draws;
  for (int c = 0; c < 3; ++c) {
    const double sigma = std::exp(0.5 * lv(c));
    CHECK(std::abs(mean(c) - mu(c)) < 3.0 * sigma / std::sqrt(static_cast<double>(draws)));
  }
}

TEST_CASE("encode shapes and purity") {
  const ScatteringManifest manifest = tiny_manifest();
  GsaeModel model(manifest, tiny_config(3));
  Rng rng(5);
  Eigen::MatrixXd x = random_rows(6, manifest.feature_len, rng);
  x.row(3) = x.row(0);

  auto [mu, lv] = model.encode(x, false);
  CHECK(mu.rows() == 6);
  CHECK(mu.cols() == 3);
  CHECK(mu.allFinite());
  CHECK(lv.allFinite());
  CHECK((mu.row(3) - mu.row(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((lv.row(3) - lv.row(0)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(model.encode(Eigen::MatrixXd::Zero(2, manifest.feature_len + 1), false),
                  ShapeMismatch);
}

TEST_CASE("default bottleneck is 25-dimensional") {
  ScatteringConfig cfg;
  cfg.j_max = 4;
  const ScatteringManifest manifest = ScatteringManifest::from(10, cfg);
  GsaeConfig gc;
  gc.seed = 1;
  GsaeModel model(manifest, gc);
  Rng rng(2);
  const Eigen::MatrixXd x = random_rows(100, manifest.feature_len, rng);
  const Eigen::MatrixXd z = model.embed(x);
  CHECK(z.rows() == 100);
  CHECK(z.cols() == 25);
}

TEST_CASE("loss accounting identity and the alpha=0/beta=0 reduction") {
  const ScatteringManifest manifest = tiny_manifest();
  Rng rng(11);
  const Eigen::MatrixXd x = random_rows(4, manifest.feature_len, rng);
  const Eigen::VectorXd y = random_rows(4, 1, rng).col(0);
  const Eigen::MatrixXd noise = random_rows(4, 3, rng);

  GsaeConfig plain = tiny_config(7);
  plain.alpha = 0.0;
  plain.beta = 0.0;
  GsaeModel ae(manifest, plain);
  const auto parts = ae.loss_and_gradients(x, nullptr, noise);
  CHECK(parts.total == parts.recon);

  GsaeConfig full = tiny_config(7);
  full.alpha = 0.5;
  full.beta = 1.25;
  GsaeModel both(manifest, full);
  const auto all = both.loss_and_gradients(x, &y, noise);
  CHECK(all.total ==
        doctest::Approx(all.recon + 0.5 * all.pred + 1.25 * all.kl).epsilon(1e-12));
  CHECK(all.recon >= 0.0);
  CHECK(all.pred >= 0.0);
  CHECK(all.kl >= 0.0);
}

TEST_CASE("missing targets raise when alpha > 0") {
  const ScatteringManifest manifest = tiny_manifest();
  GsaeConfig cfg = tiny_config(1);
  cfg.alpha = 0.5;
  GsaeModel model(manifest, cfg);
  Rng rng(1);
  const Eigen::MatrixXd x = random_rows(4, manifest.feature_len, rng);
  CHECK_THROWS_AS(model.loss_and_gradients(x, nullptr, Eigen::MatrixXd::Zero(4, 3)),
                  MissingTargets);
  CHECK_THROWS_AS(train_gsae(x, std::nullopt, manifest, cfg), MissingTargets);
}

TEST_CASE("full combined loss gradients match finite differences") {
  const ScatteringManifest manifest = tiny_manifest();
  for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
    CAPTURE(seed);
    GsaeConfig cfg = tiny_config(seed);
    cfg.alpha = 0.7;
    cfg.beta = 0.9;
    GsaeModel model(manifest, cfg);

    Rng rng(seed + 100);
    const Eigen::MatrixXd x = random_rows(4, manifest.feature_len, rng);
    const Eigen::VectorXd y = random_rows(4, 1, rng).col(0);
    const Eigen::MatrixXd noise = random_rows(4, 3, rng);

    model.zero_grad();
    model.loss_and_gradients(x, &y, noise);
    auto probe = [&] { return model.loss_and_gradients(x, &y, noise).total; };
    const auto check = oracles::finite_diff_check(probe, model.params());
    CHECK(check.max_rel_error < 1e-4);
  }
}

TEST_CASE("with zero noise and beta=0 the gradients are exactly a plain AE's") {
  const ScatteringManifest manifest = tiny_manifest();
  GsaeConfig cfg = tiny_config(21);
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  cfg.variational = false;
  GsaeModel model(manifest, cfg);

  const std::string path = temp_path("gsae_ae_reduction.json");
  model.save(path);
  std::ifstream in(path);
  const nlohmann::json ckpt = nlohmann::json::parse(in);
  nn::Mlp encoder = nn::Mlp::from_state(ckpt.at("encoder"));
  nn::Mlp mu_head = nn::Mlp::from_state(ckpt.at("mu_head"));
  nn::Mlp decoder = nn::Mlp::from_state(ckpt.at("decoder"));
  std::remove(path.c_str());

  Rng rng(4);
  const Eigen::MatrixXd x = random_rows(5, manifest.feature_len, rng);

  // Hand-assembled autoencoder step: encoder -> mu head -> decoder -> MSE.
  encoder.zero_grad();
  mu_head.zero_grad();
  decoder.zero_grad();
  const Eigen::MatrixXd h = encoder.forward(x, true);
  const Eigen::MatrixXd z = mu_head.forward(h, true);
  const nn::LossResult recon = nn::mse_loss(decoder.forward(z, true), x);
  encoder.backward(mu_head.backward(decoder.backward(recon.grad)));

  model.zero_grad();
  const auto parts = model.loss_and_gradients(x, nullptr, Eigen::MatrixXd::Zero(5, 3));
  CHECK(parts.total == recon.value);

  const auto model_params = model.params();  // encoder, mu, logvar, decoder, regressor
  const auto enc_params = encoder.params();
  const auto mu_params = mu_head.params();
  const auto dec_params = decoder.params();
  for (std::size_t i = 0; i < enc_params.size(); ++i)
    CHECK((model_params[i]->grad - enc_params[i]->grad).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t i = 0; i < mu_params.size(); ++i)
    CHECK((model_params[enc_params.size() + i]->grad - mu_params[i]->grad)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  const std::size_t dec_offset = enc_params.size() + 2 * mu_params.size();
  for (std::size_t i = 0; i < dec_params.size(); ++i)
    CHECK((model_params[dec_offset + i]->grad - dec_params[i]->grad).cwiseAbs().maxCoeff() ==
          0.0);
  // logvar head and regressor receive no gradient in this mode
  for (std::size_t i = enc_params.size() + mu_params.size(); i < dec_offset; ++i)
    CHECK(model_params[i]->grad.cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t i = dec_offset + dec_params.size(); i < model_params.size(); ++i)
    CHECK(model_params[i]->grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("training a constant dataset drives reconstruction toward zero") {
  const ScatteringManifest manifest = tiny_manifest(4, 2, 3);
  Rng rng(19);
  const Eigen::RowVectorXd row = random_rows(1, manifest.feature_len, rng).row(0);
  Eigen::MatrixXd x(12, manifest.feature_len);
  for (int r = 0; r < 12; ++r) x.row(r) = row;

  GsaeConfig cfg;
  cfg.latent_dim = 3;
  cfg.hidden_dims = {16, 8};
  cfg.batch_size = 6;
  cfg.iterations = 2000;
  cfg.lr = 1e-2;  // overfit test: large steps are fine
  cfg.beta = 0.0;
  cfg.variational = false;
  cfg.seed = 5;
  const GsaeTrainResult result = train_gsae(x, std::nullopt, manifest, cfg);
  REQUIRE(!result.history.empty());
  CHECK(result.history.back().recon < 1e-3);
  CHECK(result.history.back().total < result.history.front().total);
}

TEST_CASE("same seed trains to identical checkpoints, different seed does not") {
  const ScatteringManifest manifest = tiny_manifest();
  Rng rng(23);
  const Eigen::MatrixXd x = random_rows(10, manifest.feature_len, rng);
  const Eigen::VectorXd y = random_rows(10, 1, rng).col(0);

  GsaeConfig cfg = tiny_config(77);
  cfg.alpha = 0.5;
  cfg.iterations = 40;

  const std::string a = temp_path("gsae_det_a.json");
  const std::string b = temp_path("gsae_det_b.json");
  train_gsae(x, y, manifest, cfg).model.save(a);
  train_gsae(x, y, manifest, cfg).model.save(b);
  std::ifstream fa(a), fb(b);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(sa == sb);

  cfg.seed = 78;
  const std::string c = temp_path("gsae_det_c.json");
  train_gsae(x, y, manifest, cfg).model.save(c);
  std::ifstream fc(c);
  const std::string sc((std::istreambuf_iterator<char>(fc)), {});
  CHECK(sa != sc);
  std::remove(a.c_str());
  std::remove(b.c_str());
  std::remove(c.c_str());
}

TEST_CASE("checkpoint round trip preserves embeddings bitwise") {
  const ScatteringManifest manifest = tiny_manifest();
  Rng rng(31);
  const Eigen::MatrixXd x = random_rows(8, manifest.feature_len, rng);

  GsaeConfig cfg = tiny_config(13);
  cfg.iterations = 30;
  GsaeTrainResult result = train_gsae(x, std::nullopt, manifest, cfg);

  const std::string path = temp_path("gsae_roundtrip.json");
  result.model.save(path);
  GsaeModel loaded = GsaeModel::load(path);
  std::remove(path.c_str());

  const Eigen::MatrixXd a = result.model.embed(x);
  const Eigen::MatrixXd b = loaded.embed(x);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embed is row-order pure") {
  const ScatteringManifest manifest = tiny_manifest();
  GsaeModel model(manifest, tiny_config(2));
  Rng rng(3);
  const Eigen::MatrixXd x = random_rows(5, manifest.feature_len, rng);
  const Eigen::MatrixXd z = model.embed(x);
  Eigen::MatrixXd reversed(5, manifest.feature_len);
  for (int r = 0; r < 5; ++r) reversed.row(r) = x.row(4 - r);
  const Eigen::MatrixXd zr = model.embed(reversed);
  for (int r = 0; r < 5; ++r) CHECK((zr.row(r) - z.row(4 - r)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embed round trip matches the logged final reconstruction loss") {
  const ScatteringManifest manifest = tiny_manifest(4, 2, 3);
  Rng rng(41);
  // Small, learnable dataset: a few clusters with mild noise.
  Eigen::MatrixXd x(60, manifest.feature_len);
  for (int r = 0; r < 60; ++r) {
    Rng center(static_cast<std::uint64_t>(r % 3));
    for (int c = 0; c < manifest.feature_len; ++c)
      x(r, c) = center.normal() + 0.01 * rng.normal();
  }
  GsaeConfig cfg;
  cfg.latent_dim = 4;
  cfg.hidden_dims = {24, 12};
  cfg.batch_size = 60;  // every minibatch is the full training set
  cfg.iterations = 2500;
  cfg.lr = 1e-2;
  cfg.beta = 0.0;
  cfg.variational = false;
  cfg.seed = 9;
  GsaeTrainResult result = train_gsae(x, std::nullopt, manifest, cfg);

  const Eigen::MatrixXd recon = result.model.decode(result.model.embed(x), false);
  const double mse = nn::mse_loss(recon, x).value;
  const double logged = result.history.back().recon;
  CHECK(mse == doctest::Approx(logged).epsilon(0.10));
}

TEST_CASE("predict_energy contract") {
  const ScatteringManifest manifest = tiny_manifest(4, 2, 3);
  Rng rng(51);
  const Eigen::MatrixXd x = random_rows(12, manifest.feature_len, rng);

  SUBCASE("alpha = 0 models refuse unless explicitly allowed") {
    GsaeConfig cfg = tiny_config(3);
    cfg.iterations = 10;
    cfg.batch_size = 6;
    GsaeTrainResult result = train_gsae(x, std::nullopt, manifest, cfg);
    CHECK_THROWS_AS(result.model.predict_energy(x), RegressorUntrained);
    CHECK(result.model.predict_energy(x, true).allFinite());
  }

  SUBCASE("constant meta is learned to near zero MSE") {
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(12, 3.25);
    GsaeConfig cfg = tiny_config(3);
    cfg.alpha = 1.0;
    cfg.beta = 0.0;
    cfg.variational = false;
    cfg.batch_size = 6;
    cfg.lr = 1e-2;
    cfg.iterations = 3000;
    GsaeTrainResult result = train_gsae(x, y, manifest, cfg);
    const Eigen::VectorXd pred = result.model.predict_energy(x);
    CHECK((pred.array() - 3.25).square().mean() < 1e-3);
  }
}

TEST_CASE("exploding training reports NonFiniteLoss with the iteration") {
  const ScatteringManifest manifest = tiny_manifest();
  Rng rng(61);
  const Eigen::MatrixXd x = random_rows(8, manifest.feature_len, rng, 50.0);
  GsaeConfig cfg = tiny_config(1);
  cfg.lr = 1e18;
  cfg.iterations = 50;
  cfg.batch_size = 4;
  try {
    train_gsae(x, std::nullopt, manifest, cfg);
    FAIL("expected NonFiniteLoss");
  } catch (const NonFiniteLoss& e) {
    CHECK(e.iteration >= 2);
  }
}

}  // TEST_SUITE
