#include "gsae/nn.hpp"

#include <cmath>

#include "doctest.h"
#include "gsae/errors.hpp"
#include "gsae/random.hpp"
#include "nlohmann/json.hpp"
#include "oracles.hpp"

using namespace gsae;
using nn::Param;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

// Three-block MLP used for the gradient property tests.
nn::Mlp make_mlp(int in, int h1, int h2, int out, Rng& rng, bool with_batchnorm) {
  nn::Mlp mlp;
  mlp.add(std::make_unique<nn::Dense>(in, h1, rng));
  if (with_batchnorm) mlp.add(std::make_unique<nn::BatchNorm>(h1));
  mlp.add(std::make_unique<nn::Relu>());
  mlp.add(std::make_unique<nn::Dense>(h1, h2, rng));
  mlp.add(std::make_unique<nn::Relu>());
  mlp.add(std::make_unique<nn::Dense>(h2, out, rng));
  mlp.add(std::make_unique<nn::Sigmoid>());
  return mlp;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("identity-initialized linear layer is a fixed point") {
  Rng rng(0);
  nn::Dense layer(3, 3, rng);
  layer.w_.value = Eigen::MatrixXd::Identity(3, 3);
  layer.b_.value.setZero();

  const Eigen::MatrixXd x = random_matrix(4, 3, rng);
  const Eigen::MatrixXd y = layer.forward(x, true);
  CHECK((y - x).cwiseAbs().maxCoeff() == 0.0);

  const nn::LossResult loss = nn::mse_loss(y, x);
  CHECK(loss.value == 0.0);
  layer.backward(loss.grad);
  CHECK(layer.w_.grad.cwiseAbs().maxCoeff() == 0.0);
  CHECK(layer.b_.grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("relu definition and mask") {
  nn::Relu relu;
  Eigen::MatrixXd x(1, 2);
  x << -1.0, 2.0;
  const Eigen::MatrixXd y = relu.forward(x, true);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 2.0);
  Eigen::MatrixXd up(1, 2);
  up << 5.0, 7.0;
  const Eigen::MatrixXd down = relu.backward(up);
  CHECK(down(0, 0) == 0.0);
  CHECK(down(0, 1) == 7.0);
}

TEST_CASE("loss unit values") {
  Eigen::MatrixXd p(1, 2), t(1, 2);
  p << 1.0, 1.0;
  t << 0.0, 0.0;
  CHECK(nn::mse_loss(p, p).value == 0.0);
  CHECK(nn::mse_loss(p, t).value == doctest::Approx(2.0));

  Eigen::MatrixXd half = Eigen::MatrixXd::Constant(3, 4, 0.5);
  Eigen::MatrixXd bits = Eigen::MatrixXd::Zero(3, 4);
  bits(0, 0) = 1.0;
  CHECK(nn::bce_loss(half, bits).value == doctest::Approx(std::log(2.0)));
  CHECK(nn::bce_loss(bits, bits).value <= -std::log(1.0 - 1e-7) + 1e-12);

  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd lv = Eigen::MatrixXd::Zero(1, 1);
  CHECK(nn::kl_gaussian(mu, lv).value == 0.0);
  mu(0, 0) = 1.0;
  CHECK(nn::kl_gaussian(mu, lv).value == doctest::Approx(0.5));

  CHECK_THROWS_AS(nn::mse_loss(p, Eigen::MatrixXd::Zero(2, 2)), ShapeMismatch);
  CHECK_THROWS_AS(nn::bce_loss(p, Eigen::MatrixXd::Zero(2, 2)), ShapeMismatch);
}

TEST_CASE("loss nonnegativity on random inputs") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd a = random_matrix(3, 5, rng);
    const Eigen::MatrixXd b = random_matrix(3, 5, rng);
    CHECK(nn::mse_loss(a, b).value >= 0.0);
    const Eigen::MatrixXd p =
        a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    const Eigen::MatrixXd t =
        b.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
    CHECK(nn::bce_loss(p, t).value >= 0.0);
    CHECK(nn::kl_gaussian(a, b).value >= -1e-12);
  }
}

TEST_CASE("mse/bce/kl gradients match finite differences") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Param pred(random_matrix(3, 4, rng));
    const Eigen::MatrixXd target = random_matrix(3, 4, rng);

    pred.grad = nn::mse_loss(pred.value, target).grad;
    auto mse_probe = [&] { return nn::mse_loss(pred.value, target).value; };
    CHECK(oracles::finite_diff_check(mse_probe, {&pred}).max_rel_error < 1e-4);

    // probabilities in a comfortably interior range for bce
    Param probs(pred.value.unaryExpr(
        [](double v) { return 0.05 + 0.9 / (1.0 + std::exp(-v)); }));
    const Eigen::MatrixXd bits =
        target.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
    probs.grad = nn::bce_loss(probs.value, bits).grad;
    auto bce_probe = [&] { return nn::bce_loss(probs.value, bits).value; };
    CHECK(oracles::finite_diff_check(bce_probe, {&probs}).max_rel_error < 1e-4);

    Param mu(random_matrix(3, 4, rng));
    Param lv(random_matrix(3, 4, rng, 0.5));
    const nn::KlResult kl = nn::kl_gaussian(mu.value, lv.value);
    mu.grad = kl.grad_mu;
    lv.grad = kl.grad_logvar;
    auto kl_probe = [&] { return nn::kl_gaussian(mu.value, lv.value).value; };
    CHECK(oracles::finite_diff_check(kl_probe, {&mu, &lv}).max_rel_error < 1e-4);
  }
}

TEST_CASE("mlp gradients match finite differences over many seeds") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    nn::Mlp mlp = make_mlp(6, 8, 5, 4, rng, seed % 2 == 0);
    const Eigen::MatrixXd x = random_matrix(5, 6, rng);
    const Eigen::MatrixXd target = random_matrix(5, 4, rng, 0.3);

    auto loss_only = [&] { return nn::mse_loss(mlp.forward(x, true), target).value; };
    mlp.zero_grad();
    mlp.backward(nn::mse_loss(mlp.forward(x, true), target).grad);
    const auto check = oracles::finite_diff_check(loss_only, mlp.params());
    CHECK(check.max_rel_error < 1e-4);
    CHECK(check.coords_checked > 100);
  }
}

TEST_CASE("batchnorm normalizes in train mode and uses running stats in eval") {
  Rng rng(3);
  nn::BatchNorm bn(4);
  const Eigen::MatrixXd x = random_matrix(64, 4, rng, 2.5);

  const Eigen::MatrixXd y = bn.forward(x, true);  // gamma=1, beta=0: y == xhat
  const Eigen::RowVectorXd mean = y.colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-6);
  const Eigen::RowVectorXd var =
      (y.rowwise() - mean).array().square().colwise().sum() / 64.0;
  for (int j = 0; j < 4; ++j) CHECK(std::abs(var(j) - 1.0) < 1e-4);

  // eval output differs from train output until running stats converge
  const Eigen::MatrixXd y_eval = bn.forward(x, false);
  CHECK(y_eval.rows() == 64);
  for (int rep = 0; rep < 400; ++rep) bn.forward(x, true);
  const Eigen::MatrixXd settled = bn.forward(x, false);
  const Eigen::MatrixXd train_out = bn.forward(x, true);
  CHECK((settled - train_out).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("batchnorm rejects train batches of one row") {
  nn::BatchNorm bn(3);
  CHECK_THROWS_AS(bn.forward(Eigen::MatrixXd::Ones(1, 3), true), ShapeMismatch);
  CHECK_NOTHROW(bn.forward(Eigen::MatrixXd::Ones(1, 3), false));
}

TEST_CASE("backward without forward is an error") {
  Rng rng(0);
  nn::Dense d(2, 2, rng);
  CHECK_THROWS_AS(d.backward(Eigen::MatrixXd::Ones(1, 2)), BackwardWithoutForward);
  nn::Relu r;
  CHECK_THROWS_AS(r.backward(Eigen::MatrixXd::Ones(1, 2)), BackwardWithoutForward);
  nn::BatchNorm bn(2);
  bn.forward(Eigen::MatrixXd::Ones(3, 2), false);  // eval forward does not arm backward
  CHECK_THROWS_AS(bn.backward(Eigen::MatrixXd::Ones(3, 2)), BackwardWithoutForward);
}

TEST_CASE("adam: zero gradient leaves fresh parameters unchanged") {
  Param p(Eigen::MatrixXd::Constant(2, 2, 1.5));
  nn::Adam adam(1e-2);
  adam.step({&p});
  CHECK((p.value.array() == 1.5).all());
}

TEST_CASE("adam: first step with constant gradient approximates -lr sign(g)") {
  Param p(Eigen::MatrixXd::Zero(1, 3));
  p.grad << 1.0, -2.0, 0.5;
  const double lr = 1e-3;
  nn::Adam adam(lr);
  adam.step({&p});
  CHECK(std::abs(p.value(0, 0) - (-lr)) <= lr * 1e-6);
  CHECK(std::abs(p.value(0, 1) - lr) <= lr * 1e-6);
  CHECK(std::abs(p.value(0, 2) - (-lr)) <= lr * 1e-6);
}

TEST_CASE("adam trajectories are bitwise deterministic") {
  auto run = [] {
    Rng rng(77);
    nn::Mlp mlp = make_mlp(4, 6, 5, 3, rng, true);
    nn::Adam adam(1e-3);
    const Eigen::MatrixXd x = random_matrix(8, 4, rng);
    const Eigen::MatrixXd t = random_matrix(8, 3, rng);
    for (int i = 0; i < 25; ++i) {
      mlp.zero_grad();
      mlp.backward(nn::mse_loss(mlp.forward(x, true), t).grad);
      adam.step(mlp.params());
    }
    return mlp.state().dump();
  };
  CHECK(run() == run());
}

TEST_CASE("mlp state round trips through json") {
  Rng rng(12);
  nn::Mlp mlp = make_mlp(3, 5, 4, 2, rng, true);
  const Eigen::MatrixXd x = random_matrix(6, 3, rng);
  mlp.forward(x, true);  // move batchnorm running stats off their defaults

  nn::Mlp copy = nn::Mlp::from_state(mlp.state());
  const Eigen::MatrixXd a = mlp.forward(x, false);
  const Eigen::MatrixXd b = copy.forward(x, false);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

}  // TEST_SUITE
