#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "uavrelay/nn.hpp"

using namespace uavrelay;

namespace {

std::vector<QSample> random_batch(const Mlp& net, int size, Rng& rng,
                                  double target_scale = 1.0) {
  std::vector<QSample> batch(static_cast<std::size_t>(size));
  for (auto& s : batch) {
    s.x.resize(static_cast<std::size_t>(net.input_size()));
    for (auto& v : s.x) v = 2.0 * rng.uniform01() - 1.0;
    s.action = rng.uniform_int(0, net.output_size() - 1);
    s.target = target_scale * (2.0 * rng.uniform01() - 1.0);
  }
  return batch;
}

}  // namespace

TEST_CASE("zero network maps everything to zero") {
  Mlp net({3, 4, 4, 2});
  const auto q = net.forward(std::vector<double>{1.0, -2.0, 0.5});
  CHECK(q == std::vector<double>{0.0, 0.0});
}

TEST_CASE("hand-computed 1-2-1 rectifier net") {
  Mlp net({1, 2, 1});
  auto p = net.params();
  // layer 0: w = [1, -1], b = [0, 0]; layer 1: w = [1, 1], b = [0]
  p[0] = 1.0;
  p[1] = -1.0;
  p[4] = 1.0;
  p[5] = 1.0;
  const auto q = net.forward(std::vector<double>{2.0});
  CHECK(q == std::vector<double>{2.0}); // hidden (2, 0) -> 2
  const auto qn = net.forward(std::vector<double>{-3.0});
  CHECK(qn == std::vector<double>{3.0}); // hidden (0, 3) -> 3
}

TEST_CASE("nonnegative first layer kills negative inputs") {
  Rng rng(2);
  Mlp net = Mlp::glorot({2, 5, 3}, rng);
  auto p = net.params();
  for (std::size_t i = 0; i < 10; ++i) p[i] = std::abs(p[i]); // first layer weights
  const auto q = net.forward(std::vector<double>{-1.0, -2.5});
  // all hidden units clamp at zero, so only output biases remain (zero here)
  CHECK(q == std::vector<double>(3, 0.0));
}

TEST_CASE("dimension and action index validation") {
  Mlp net({3, 4, 2});
  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0}), std::invalid_argument);
  QSample bad;
  bad.x = {0.0, 0.0, 0.0};
  bad.action = 2;
  std::vector<QSample> batch = {bad};
  CHECK_THROWS_AS(q_loss(net, batch), std::out_of_range);
}

TEST_CASE("q-loss values") {
  Mlp net({2, 3}); // zero weights: every q is the output bias
  std::vector<QSample> batch(1);
  batch[0].x = {0.5, 0.5};
  batch[0].action = 1;
  batch[0].target = 0.0;
  CHECK(q_loss(net, batch) == 0.0);

  auto p = net.params();
  p[net.parameter_count() - 2] = 1.0; // bias of output 1
  batch[0].target = 3.0;
  CHECK(q_loss(net, batch) == doctest::Approx(4.0)); // (3 - 1)^2

  // residuals 1 and 3 -> mean of 1 and 9
  batch.resize(2);
  batch[0].target = 2.0; // q = 1
  batch[1].x = {0.1, 0.9};
  batch[1].action = 0; // q = 0
  batch[1].target = 3.0;
  CHECK(q_loss(net, batch) == doctest::Approx(5.0));
}

TEST_CASE("zero residuals give zero gradients and a fixed point") {
  Rng rng(3);
  Mlp net = Mlp::glorot({3, 6, 6, 2}, rng);
  std::vector<QSample> batch = random_batch(net, 4, rng);
  for (auto& s : batch) s.target = net.forward(s.x)[static_cast<std::size_t>(s.action)];

  std::vector<double> grad;
  CHECK(q_loss_gradient(net, batch, grad) == doctest::Approx(0.0));
  for (double g : grad) CHECK(g == 0.0);

  const Mlp before = net;
  AdamState adam(net.parameter_count(), {});
  backward_and_step(net, adam, batch);
  CHECK(net == before);
}

TEST_CASE("first adam step moves by about the base rate") {
  std::vector<double> param = {5.0};
  std::vector<double> grad = {1.0};
  AdamState adam(1, {});
  adam.apply(param, grad);
  CHECK(param[0] == doctest::Approx(5.0 - 0.001).epsilon(1e-6));
}

TEST_CASE("learning rate staircase decay") {
  AdamState adam(1, {});
  CHECK(adam.effective_rate() == doctest::Approx(0.001));
  std::vector<double> param = {0.0};
  std::vector<double> grad = {0.0};
  for (int i = 0; i < 10000; ++i) adam.apply(param, grad);
  CHECK(adam.steps() == 10000);
  CHECK(adam.effective_rate() == doctest::Approx(0.00095));
  for (int i = 0; i < 10000; ++i) adam.apply(param, grad);
  CHECK(adam.effective_rate() == doctest::Approx(0.001 * 0.95 * 0.95));
}

TEST_CASE("analytic gradients agree with central differences") {
  Rng rng(4);
  Mlp net = Mlp::glorot({5, 8, 8, 4}, rng);
  const auto batch = random_batch(net, 4, rng, 2.0);
  CHECK(gradient_check(net, batch) < 1e-5);

  // determinism: the same inputs give the identical answer
  CHECK(gradient_check(net, batch) == gradient_check(net, batch));
}

TEST_CASE("training reduces the loss on a fixed regression batch") {
  Rng rng(5);
  Mlp net = Mlp::glorot({4, 16, 16, 3}, rng);
  const auto batch = random_batch(net, 8, rng, 1.0);
  AdamState adam(net.parameter_count(), {AdamConfig{.base_rate = 0.01}});
  const double initial = q_loss(net, batch);
  double final_loss = initial;
  for (int i = 0; i < 200; ++i) final_loss = backward_and_step(net, adam, batch);
  CHECK(final_loss < 0.01 * initial);
}

TEST_CASE("non-finite gradients are a hard error") {
  Rng rng(6);
  Mlp net = Mlp::glorot({2, 4, 2}, rng);
  std::vector<QSample> batch(1);
  batch[0].x = {std::numeric_limits<double>::infinity(), 1.0};
  batch[0].action = 0;
  batch[0].target = 0.0;
  AdamState adam(net.parameter_count(), {});
  CHECK_THROWS_AS(backward_and_step(net, adam, batch), std::domain_error);
}

TEST_CASE("glorot init is seed-deterministic and bounded") {
  Rng a(7), b(7);
  const Mlp na = Mlp::glorot({6, 10, 4}, a);
  const Mlp nb = Mlp::glorot({6, 10, 4}, b);
  CHECK(na == nb);
  const double bound0 = std::sqrt(6.0 / (6 + 10));
  for (std::size_t i = 0; i < 60; ++i) CHECK(std::abs(na.params()[i]) <= bound0);
}

TEST_CASE("checkpoints round trip bit-exactly") {
  Rng rng(8);
  Checkpoint ckpt;
  ckpt.net = Mlp::glorot({5, 12, 12, 7}, rng);
  ckpt.adam = AdamState(ckpt.net.parameter_count(), {});
  // run a few steps so moments and the counter are nonzero
  auto batch = random_batch(ckpt.net, 4, rng, 3.0);
  for (int i = 0; i < 5; ++i) backward_and_step(ckpt.net, ckpt.adam, batch);
  ckpt.metadata["kind"] = "test";
  ckpt.metadata["note"] = "with, comma and \"quotes\"";

  std::stringstream first;
  save_checkpoint(first, ckpt);
  Checkpoint loaded = load_checkpoint(first);
  CHECK(loaded.net == ckpt.net);
  CHECK(loaded.adam == ckpt.adam);
  CHECK(loaded.metadata == ckpt.metadata);

  std::stringstream second;
  save_checkpoint(second, loaded);
  CHECK(first.str() == second.str());
}

TEST_CASE("corrupt checkpoints are rejected") {
  std::stringstream in("definitely not a checkpoint");
  CHECK_THROWS(load_checkpoint(in));
}
