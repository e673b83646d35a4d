// tests/test_model.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "hadua/errors.hpp"
#include "hadua/model.hpp"
#include "testutil.hpp"

using namespace hadua;
namespace tu = hadua::testutil;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.eeg_dim = 10;
  c.eye_dim = 6;
  c.d_model = 16;
  c.encoder_hidden = 12;
  c.classifier_hidden = 8;
  c.heads = 2;
  c.tokens = 4;  // token width 4
  c.classes = 3;
  return c;
}

}  // namespace

TEST_CASE("forward produces probability rows of the right shape") {
  auto gen = tu::rng(1);
  ModelParams p = ModelParams::init(small_config(), 7);
  Graph g;
  BoundModel m = bind_model(g, p, false);
  FusedBatch out = model_forward(g, m, g.input(tu::gaussian_tensor({4, 10}, gen)),
                                 g.input(tu::gaussian_tensor({4, 6}, gen)));
  const Tensor& probs = g.value(out.probs);
  CHECK(probs.rows() == 4);
  CHECK(probs.cols() == 3);
  for (std::size_t r = 0; r < 4; ++r) {
    double sum = 0;
    for (std::size_t c = 0; c < 3; ++c) sum += probs.at(r, c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(g.value(out.features).cols() == small_config().fused_dim());
}

TEST_CASE("duplicated rows produce duplicated outputs") {
  auto gen = tu::rng(2);
  ModelParams p = ModelParams::init(small_config(), 8);
  Tensor eeg_row = tu::gaussian_tensor({1, 10}, gen);
  Tensor eye_row = tu::gaussian_tensor({1, 6}, gen);
  Tensor eeg({3, 10}), eye({3, 6});
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 10; ++c) eeg.at(r, c) = eeg_row.at(0, c);
    for (std::size_t c = 0; c < 6; ++c) eye.at(r, c) = eye_row.at(0, c);
  }
  Graph g;
  BoundModel m = bind_model(g, p, false);
  FusedBatch out = model_forward(g, m, g.input(eeg), g.input(eye));
  const Tensor& probs = g.value(out.probs);
  for (std::size_t r = 1; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(probs.at(r, c) == probs.at(0, c));
    }
  }
}

TEST_CASE("permuting batch rows permutes outputs identically") {
  auto gen = tu::rng(3);
  ModelParams p = ModelParams::init(small_config(), 9);
  Tensor eeg = tu::gaussian_tensor({4, 10}, gen);
  Tensor eye = tu::gaussian_tensor({4, 6}, gen);
  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  Tensor eeg_p({4, 10}), eye_p({4, 6});
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 10; ++c) eeg_p.at(r, c) = eeg.at(perm[r], c);
    for (std::size_t c = 0; c < 6; ++c) eye_p.at(r, c) = eye.at(perm[r], c);
  }
  Graph g1, g2;
  BoundModel m1 = bind_model(g1, p, false);
  BoundModel m2 = bind_model(g2, p, false);
  const Tensor& a = g1.value(model_forward(g1, m1, g1.input(eeg), g1.input(eye)).probs);
  const Tensor& b = g2.value(model_forward(g2, m2, g2.input(eeg_p), g2.input(eye_p)).probs);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(b.at(r, c) == a.at(perm[r], c));
    }
  }
}

TEST_CASE("fixed seed and inputs give bit-identical outputs across runs") {
  auto gen = tu::rng(4);
  Tensor eeg = tu::gaussian_tensor({4, 10}, gen);
  Tensor eye = tu::gaussian_tensor({4, 6}, gen);
  std::vector<double> first;
  for (int run = 0; run < 2; ++run) {
    ModelParams p = ModelParams::init(small_config(), 42);
    Graph g;
    BoundModel m = bind_model(g, p, false);
    const Tensor& probs = g.value(model_forward(g, m, g.input(eeg), g.input(eye)).probs);
    if (run == 0) {
      first = probs.data();
    } else {
      CHECK(probs.data() == first);
    }
  }
}

TEST_CASE("init determinism and seed sensitivity") {
  ModelParams a = ModelParams::init(small_config(), 5);
  ModelParams b = ModelParams::init(small_config(), 5);
  ModelParams c = ModelParams::init(small_config(), 6);
  bool all_equal = true;
  bool any_differs = false;
  a.for_each_tensor([&](const std::string& name, Tensor& t) {
    b.for_each_tensor([&](const std::string& name_b, Tensor& tb) {
      if (name == name_b && t.data() != tb.data()) all_equal = false;
    });
    c.for_each_tensor([&](const std::string& name_c, Tensor& tc) {
      if (name == name_c && t.data() != tc.data()) any_differs = true;
    });
  });
  CHECK(all_equal);
  CHECK(any_differs);
}

TEST_CASE("initial weights honor the fan-in bound") {
  ModelConfig cfg = small_config();
  cfg.eeg_dim = 16;  // fan_in 16 -> bound 0.25 on the first eeg layer
  ModelParams p = ModelParams::init(cfg, 11);
  for (double v : p.eeg_encoder.l1.w.data()) {
    CHECK(std::abs(v) <= 0.25);
  }
}

TEST_CASE("row-count mismatch is a contract error") {
  auto gen = tu::rng(5);
  ModelParams p = ModelParams::init(small_config(), 12);
  Graph g;
  BoundModel m = bind_model(g, p, false);
  CHECK_THROWS_AS(model_forward(g, m, g.input(tu::gaussian_tensor({4, 10}, gen)),
                                g.input(tu::gaussian_tensor({3, 6}, gen))),
                  ContractError);
}

TEST_CASE("indivisible head configuration is a config error") {
  ModelConfig cfg = small_config();
  cfg.heads = 3;  // token width 4 not divisible by 3
  CHECK_THROWS_AS(ModelParams::init(cfg, 0), ConfigError);
}

TEST_CASE("cross attention queries with the EEG side") {
  CHECK(std::string(kCrossAttentionQueryModality) == "eeg");
}

TEST_CASE("no-attention ablation still fuses both modalities") {
  ModelConfig cfg = small_config();
  cfg.use_attention = false;
  auto gen = tu::rng(6);
  ModelParams p = ModelParams::init(cfg, 13);
  Graph g;
  BoundModel m = bind_model(g, p, false);
  FusedBatch out = model_forward(g, m, g.input(tu::gaussian_tensor({2, 10}, gen)),
                                 g.input(tu::gaussian_tensor({2, 6}, gen)));
  CHECK(g.value(out.features).cols() == 2 * cfg.d_model);
}

TEST_CASE("grad_check through the full model with cross-entropy") {
  auto gen = tu::rng(7);
  ModelParams p = ModelParams::init(small_config(), 21);
  Tensor eye = tu::gaussian_tensor({4, 6}, gen);
  Tensor eeg = tu::gaussian_tensor({4, 10}, gen);
  const std::vector<int> labels = {0, 1, 2, 1};

  const double err = grad_check(
      [&](Graph& g, Value veeg) {
        BoundModel m = bind_model(g, p, false);
        FusedBatch out = model_forward(g, m, veeg, g.input(eye));
        Tensor onehot({4, 3});
        for (int i = 0; i < 4; ++i) onehot.at(i, labels[i]) = 1.0;
        return g.mul_scalar(
            g.reduce_sum(g.mul(g.log(out.probs), g.constant(onehot))), -0.25);
      },
      eeg, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("checkpoint round-trips bit-exactly and is byte-stable") {
  ModelParams p = ModelParams::init(small_config(), 33);
  const std::string path = "test_checkpoint.json";
  save_checkpoint(p, path);
  ModelParams q = load_checkpoint(path);

  std::vector<std::pair<std::string, std::vector<double>>> original;
  p.for_each_tensor([&](const std::string& name, Tensor& t) {
    original.emplace_back(name, t.data());
  });
  std::size_t idx = 0;
  q.for_each_tensor([&](const std::string& name, Tensor& t) {
    REQUIRE(idx < original.size());
    CHECK(name == original[idx].first);
    CHECK(t.data() == original[idx].second);  // exact bits
    ++idx;
  });

  const std::string path2 = "test_checkpoint2.json";
  save_checkpoint(q, path2);
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}
