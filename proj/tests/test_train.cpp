// tests/test_train.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hadua/errors.hpp"
#include "hadua/synthdata.hpp"
#include "hadua/train.hpp"
#include "testutil.hpp"

using namespace hadua;
namespace tu = hadua::testutil;

namespace {

ModelConfig tiny_model(int eeg_dim, int eye_dim, int classes) {
  ModelConfig m;
  m.eeg_dim = static_cast<std::size_t>(eeg_dim);
  m.eye_dim = static_cast<std::size_t>(eye_dim);
  m.d_model = 16;
  m.encoder_hidden = 16;
  m.classifier_hidden = 16;
  m.heads = 2;
  m.tokens = 4;
  m.classes = classes;
  return m;
}

DataSpec tiny_data() {
  DataSpec s;
  s.n_subjects = 3;
  s.samples_per_subject = 60;
  s.classes = 3;
  s.d_latent = 4;
  s.eeg_dim = 8;
  s.eye_dim = 5;
  s.eta = 0.6;
  s.class_sep = 2.0;
  s.latent_noise = 1.0;
  s.eeg_noise = 0.3;
  s.eye_noise = 0.5;
  return s;
}

TrainConfig quick_train(std::uint64_t seed, long epochs) {
  TrainConfig c;
  c.seed = seed;
  c.max_epochs = epochs;
  c.early_stop_patience = epochs;
  c.batch_size = 16;
  c.lr = 1e-3;
  c.ua.t0 = epochs / 2.0;
  return c;
}

struct Problem {
  LabeledSet source;
  UnlabeledSet target;
  std::vector<int> target_labels;
};

Problem make_problem(std::uint64_t seed) {
  const auto data = generate_subjects(tiny_data(), seed);
  LosoSplit split = leave_one_subject_out(data, 2);
  return {split.source, split.target, split.target_labels};
}

}  // namespace

TEST_CASE("total_loss reduces to the classification loss with gammas at 0") {
  Problem p = make_problem(1);
  TrainConfig cfg = quick_train(1, 1);
  cfg.gamma_mmd = 0.0;
  cfg.gamma_cmmd = 0.0;
  ModelParams params = ModelParams::init(tiny_model(8, 5, 3), 3);

  Graph g;
  BoundModel m = bind_model(g, params, false);
  FusedBatch src = model_forward(g, m, g.constant(p.source.eeg), g.constant(p.source.eye));
  FusedBatch tgt = model_forward(g, m, g.constant(p.target.eeg), g.constant(p.target.eye));
  WeightedSoftAssignment a;
  a.probs = Tensor::full({p.target.eeg.rows(), 3}, 1.0 / 3.0);
  a.weights.assign(p.target.eeg.rows(), 1.0);
  TotalLoss loss = total_loss(g, src, p.source.labels, tgt, a, cfg, 1.0, 3);
  CHECK(g.value(loss.total)[0] == g.value(loss.cls)[0]);
  CHECK(!loss.has_mmd);
  CHECK(!loss.has_cmmd);
}

TEST_CASE("perfect one-hot source probabilities give zero classification loss") {
  // Feed fabricated one-hot probabilities through the loss composition.
  Graph g;
  const std::vector<int> labels = {0, 1, 2};
  Tensor onehot({3, 3});
  for (int i = 0; i < 3; ++i) onehot.at(i, i) = 1.0;
  FusedBatch src{g.constant(Tensor::ones({3, 4})), g.constant(onehot)};
  FusedBatch tgt{g.constant(Tensor::ones({2, 4})), g.constant(Tensor::full({2, 3}, 1.0 / 3))};
  WeightedSoftAssignment a;
  a.probs = Tensor::full({2, 3}, 1.0 / 3.0);
  a.weights.assign(2, 1.0);
  TrainConfig cfg;
  cfg.gamma_mmd = 0.0;
  cfg.gamma_cmmd = 0.0;
  TotalLoss loss = total_loss(g, src, labels, tgt, a, cfg, 1.0, 3);
  CHECK(g.value(loss.cls)[0] == 0.0);
}

TEST_CASE("component arithmetic: (1.0, 0.4, 0.6) with gammas 0.5 gives 1.5") {
  const double total = 1.0 + 0.5 * 0.4 + 0.5 * 0.6;
  CHECK(total == doctest::Approx(1.5));
}

TEST_CASE("lr=0 leaves parameters unchanged") {
  Problem p = make_problem(2);
  TrainConfig cfg = quick_train(5, 1);
  cfg.lr = 0.0;
  TrainState state;
  state.params = ModelParams::init(tiny_model(8, 5, 3), 7);
  state.best_params = state.params;
  state.stats = ConfidenceStats::init(3, cfg.stats_momentum);
  state.adam.m.clear();
  state.params.for_each_tensor([&](const std::string&, Tensor& t) {
    state.adam.m.push_back(Tensor(t.shape()));
    state.adam.v.push_back(Tensor(t.shape()));
  });

  std::vector<std::vector<double>> before;
  state.params.for_each_tensor(
      [&](const std::string&, Tensor& t) { before.push_back(t.data()); });

  train_step(state, cfg, p.source.eeg, p.source.eye, p.source.labels, p.target.eeg,
             p.target.eye, 0.1);

  std::size_t k = 0;
  state.params.for_each_tensor([&](const std::string&, Tensor& t) {
    CHECK(t.data() == before[k]);
    ++k;
  });
}

TEST_CASE("identical config and seed reproduce the history bit for bit") {
  Problem p = make_problem(3);
  TrainConfig cfg = quick_train(11, 4);
  const ModelConfig mcfg = tiny_model(8, 5, 3);
  FitResult a = fit(cfg, mcfg, p.source, p.target, &p.target_labels);
  FitResult b = fit(cfg, mcfg, p.source, p.target, &p.target_labels);
  REQUIRE(a.state.history.size() == b.state.history.size());
  for (std::size_t i = 0; i < a.state.history.size(); ++i) {
    CHECK(a.state.history[i].loss == b.state.history[i].loss);
    CHECK(a.state.history[i].l_cls == b.state.history[i].l_cls);
    CHECK(a.state.history[i].l_mmd == b.state.history[i].l_mmd);
    CHECK(a.state.history[i].l_cmmd == b.state.history[i].l_cmmd);
    CHECK(a.state.history[i].val_acc == b.state.history[i].val_acc);
    CHECK(a.state.history[i].mu == b.state.history[i].mu);
  }
}

TEST_CASE("patience zero runs exactly one epoch") {
  Problem p = make_problem(4);
  TrainConfig cfg = quick_train(13, 50);
  cfg.early_stop_patience = 0;
  FitResult r = fit(cfg, tiny_model(8, 5, 3), p.source, p.target, nullptr);
  CHECK(r.state.history.size() == 1);
}

TEST_CASE("adaptation losses disabled matches plain supervised training") {
  Problem p = make_problem(5);
  TrainConfig off = quick_train(17, 3);
  off.gamma_mmd = 0.0;
  off.gamma_cmmd = 0.0;
  off.ablation.mmd = false;
  off.ablation.cmmd = false;
  off.ablation.gaussian_weight = false;
  off.ablation.ua = false;

  TrainConfig gammas_zero = quick_train(17, 3);
  gammas_zero.gamma_mmd = 0.0;
  gammas_zero.gamma_cmmd = 0.0;

  const ModelConfig mcfg = tiny_model(8, 5, 3);
  FitResult a = fit(off, mcfg, p.source, p.target, nullptr);
  FitResult b = fit(gammas_zero, mcfg, p.source, p.target, nullptr);
  REQUIRE(a.state.history.size() == b.state.history.size());
  for (std::size_t i = 0; i < a.state.history.size(); ++i) {
    CHECK(a.state.history[i].l_cls == b.state.history[i].l_cls);
    CHECK(a.state.history[i].loss == b.state.history[i].loss);
  }
}

TEST_CASE("a linearly separable task without shift is learned quickly") {
  DataSpec spec = tiny_data();
  spec.eta = 0.0;
  spec.class_sep = 3.0;
  spec.latent_noise = 0.5;
  spec.eeg_noise = 0.1;
  spec.eye_noise = 0.1;
  const auto data = generate_subjects(spec, 6);
  LosoSplit split = leave_one_subject_out(data, 0);

  TrainConfig cfg = quick_train(19, 30);
  FitResult r = fit(cfg, tiny_model(8, 5, 3), split.source, split.target,
                    &split.target_labels);
  REQUIRE(r.has_target_metrics);
  CHECK(r.target_metrics.accuracy > 0.95);
}

TEST_CASE("loss components stay finite and the classification loss trends down") {
  Problem p = make_problem(7);
  TrainConfig cfg = quick_train(23, 12);
  FitResult r = fit(cfg, tiny_model(8, 5, 3), p.source, p.target, nullptr);
  for (const EpochRow& row : r.state.history) {
    CHECK(std::isfinite(row.loss));
    CHECK(std::isfinite(row.l_cls));
    CHECK(std::isfinite(row.l_mmd));
    CHECK(std::isfinite(row.l_cmmd));
  }
  // 5-epoch moving average of L_cls decreases over the first 10 epochs
  auto moving_avg = [&](std::size_t end) {
    double acc = 0.0;
    for (std::size_t i = end - 5; i < end; ++i) acc += r.state.history[i].l_cls;
    return acc / 5.0;
  };
  REQUIRE(r.state.history.size() >= 10);
  CHECK(moving_avg(10) < moving_avg(5));
}

TEST_CASE("gradient check through the full composed loss on a 4-sample batch") {
  auto gen = tu::rng(31);
  const ModelConfig mcfg = tiny_model(6, 4, 3);
  ModelParams params = ModelParams::init(mcfg, 41);
  Tensor eeg_s = tu::gaussian_tensor({4, 6}, gen);
  Tensor eye_s = tu::gaussian_tensor({4, 4}, gen);
  Tensor eye_t = tu::gaussian_tensor({4, 4}, gen, 0.3);
  Tensor eeg_t = tu::gaussian_tensor({4, 6}, gen, 0.3);
  const std::vector<int> ys = {0, 1, 2, 0};
  WeightedSoftAssignment a;
  a.probs = tu::random_prob_rows(4, 3, gen);
  a.weights = {0.9, 0.4, 1.0, 0.7};
  TrainConfig cfg;
  cfg.kernel.mode = KernelConfig::Bandwidth::kFixed;
  cfg.kernel.sigma = 2.0;

  const double err = grad_check(
      [&](Graph& g, Value veeg_s) {
        BoundModel m = bind_model(g, params, false);
        FusedBatch src = model_forward(g, m, veeg_s, g.constant(eye_s));
        FusedBatch tgt = model_forward(g, m, g.constant(eeg_t), g.constant(eye_t));
        return total_loss(g, src, ys, tgt, a, cfg, 2.0, 3).total;
      },
      eeg_s, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("fit rejects a source set with a missing class") {
  Problem p = make_problem(8);
  for (int& y : p.source.labels) {
    if (y == 2) y = 1;  // erase class 2
  }
  CHECK_THROWS_AS(fit(quick_train(1, 1), tiny_model(8, 5, 3), p.source, p.target, nullptr),
                  ContractError);
}
