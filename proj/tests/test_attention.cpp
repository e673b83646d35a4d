// tests/test_attention.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hadua/attention.hpp"
#include "hadua/errors.hpp"
#include "hadua/graph.hpp"
#include "testutil.hpp"

using namespace hadua;
namespace tu = hadua::testutil;

namespace {

// Independent re-implementation of softmax(QK^T/sqrt(d))V with plain loops.
std::vector<std::vector<double>> sda_oracle(const Tensor& q, const Tensor& k, const Tensor& v) {
  const std::size_t nq = q.rows(), nk = k.rows(), d = q.cols(), dv = v.cols();
  std::vector<std::vector<double>> out(nq, std::vector<double>(dv, 0.0));
  for (std::size_t i = 0; i < nq; ++i) {
    std::vector<double> logits(nk, 0.0);
    for (std::size_t j = 0; j < nk; ++j) {
      for (std::size_t l = 0; l < d; ++l) logits[j] += q.at(i, l) * k.at(j, l);
      logits[j] /= std::sqrt(static_cast<double>(d));
    }
    double mx = logits[0];
    for (double l : logits) mx = std::max(mx, l);
    double z = 0.0;
    std::vector<double> w(nk);
    for (std::size_t j = 0; j < nk; ++j) {
      w[j] = std::exp(logits[j] - mx);
      z += w[j];
    }
    for (std::size_t j = 0; j < nk; ++j) {
      for (std::size_t l = 0; l < dv; ++l) out[i][l] += (w[j] / z) * v.at(j, l);
    }
  }
  return out;
}

Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t l = 0; l < a.cols(); ++l) out.at(i, j) += a.at(i, l) * b.at(l, j);
  return out;
}

}  // namespace

TEST_CASE("single key/value pair returns V regardless of Q") {
  auto gen = tu::rng(1);
  Graph g;
  Value q = g.input(tu::random_tensor({3, 4}, gen));
  Value k = g.input(tu::random_tensor({1, 4}, gen));
  Tensor vt = tu::random_tensor({1, 6}, gen);
  Value v = g.input(vt);
  const Tensor& out = g.value(scaled_dot_attention(g, q, k, v));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      CHECK(out.at(i, j) == doctest::Approx(vt.at(0, j)).epsilon(1e-15));
}

TEST_CASE("orthogonal query gives the column mean of V") {
  Graph g;
  Value q = g.input(Tensor({1, 2}, {0, 0}));
  auto gen = tu::rng(2);
  Value k = g.input(tu::random_tensor({4, 2}, gen));
  Tensor vt = tu::random_tensor({4, 3}, gen);
  Value v = g.input(vt);
  const Tensor& out = g.value(scaled_dot_attention(g, q, k, v));
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < 4; ++r) mean += vt.at(r, j);
    mean /= 4.0;
    CHECK(out.at(0, j) == doctest::Approx(mean).epsilon(1e-14));
  }
}

TEST_CASE("2x2 attention matches the direct formula to 1e-12") {
  Tensor qt({2, 2}, {1.0, 0.5, -0.3, 0.8});
  Tensor kt({2, 2}, {0.2, -1.0, 0.7, 0.1});
  Tensor vt({2, 2}, {1.0, 2.0, 3.0, 4.0});
  Graph g;
  const Tensor& out =
      g.value(scaled_dot_attention(g, g.input(qt), g.input(kt), g.input(vt)));
  const auto oracle = sda_oracle(qt, kt, vt);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(std::abs(out.at(i, j) - oracle[i][j]) < 1e-12);
}

TEST_CASE("attention weight rows are a distribution") {
  // Passing the identity as V exposes the attention weights themselves.
  auto gen = tu::rng(3);
  Graph g;
  Value q = g.input(tu::random_tensor({5, 4}, gen, -2, 2));
  Value k = g.input(tu::random_tensor({6, 4}, gen, -2, 2));
  Tensor eye({6, 6});
  for (std::size_t i = 0; i < 6; ++i) eye.at(i, i) = 1.0;
  const Tensor& w = g.value(scaled_dot_attention(g, q, k, g.input(eye)));
  for (std::size_t i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(w.at(i, j) >= 0.0);
      sum += w.at(i, j);
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("query/key width mismatch is a shape error") {
  Graph g;
  auto gen = tu::rng(4);
  Value q = g.input(tu::random_tensor({2, 3}, gen));
  Value k = g.input(tu::random_tensor({2, 4}, gen));
  Value v = g.input(tu::random_tensor({2, 4}, gen));
  CHECK_THROWS_AS(scaled_dot_attention(g, q, k, v), ShapeError);
}

TEST_CASE("H=1 with identity W^O reduces to scaled dot attention of projections") {
  auto gen = tu::rng(5);
  AttentionParams p = AttentionParams::init(4, 1, gen);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) p.wo.at(i, j) = i == j ? 1.0 : 0.0;

  Tensor x = tu::random_tensor({3, 4}, gen);
  Graph g;
  Value vx = g.input(x);
  BoundAttention b = bind_attention(g, p, false);
  const Tensor& mha = g.value(multi_head_attention(g, b, vx, vx));

  Graph g2;
  Value q = g2.matmul(g2.input(x), g2.constant(p.wq[0]));
  Value k = g2.matmul(g2.input(x), g2.constant(p.wk[0]));
  Value v = g2.matmul(g2.input(x), g2.constant(p.wv[0]));
  const Tensor& direct = g2.value(scaled_dot_attention(g2, q, k, v));
  for (std::size_t i = 0; i < mha.size(); ++i) {
    CHECK(mha[i] == doctest::Approx(direct[i]).epsilon(1e-13));
  }
}

TEST_CASE("jointly permuting key/value rows leaves outputs unchanged") {
  auto gen = tu::rng(6);
  AttentionParams p = AttentionParams::init(6, 2, gen);
  Tensor qx = tu::random_tensor({4, 6}, gen);
  Tensor kv = tu::random_tensor({5, 6}, gen);
  Tensor kv_perm({5, 6});
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 6; ++c) kv_perm.at(r, c) = kv.at(perm[r], c);

  Graph g;
  BoundAttention b = bind_attention(g, p, false);
  const Tensor& out = g.value(multi_head_attention(g, b, g.input(qx), g.input(kv)));
  Graph g2;
  BoundAttention b2 = bind_attention(g2, p, false);
  const Tensor& out2 =
      g2.value(multi_head_attention(g2, b2, g2.input(qx), g2.input(kv_perm)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] == doctest::Approx(out2[i]).epsilon(1e-12));
  }
}

TEST_CASE("multi-head output matches a step-by-step oracle (B=2, width=4, H=2)") {
  auto gen = tu::rng(7);
  AttentionParams p = AttentionParams::init(4, 2, gen);
  Tensor x = tu::random_tensor({2, 4}, gen);

  Graph g;
  BoundAttention b = bind_attention(g, p, false);
  const Tensor& got = g.value(multi_head_attention(g, b, g.input(x), g.input(x)));

  // Oracle: project per head, attend, concatenate, apply W^O; plain loops.
  Tensor cat({2, 4});
  for (std::size_t h = 0; h < 2; ++h) {
    const Tensor qh = matmul_oracle(x, p.wq[h]);
    const Tensor kh = matmul_oracle(x, p.wk[h]);
    const Tensor vh = matmul_oracle(x, p.wv[h]);
    const auto head = sda_oracle(qh, kh, vh);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) cat.at(r, h * 2 + c) = head[r][c];
  }
  const Tensor expected = matmul_oracle(cat, p.wo);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(std::abs(got[i] - expected[i]) < 1e-12);
  }
}

TEST_CASE("width not divisible by heads is a config error") {
  auto gen = tu::rng(8);
  CHECK_THROWS_AS(AttentionParams::init(6, 4, gen), ConfigError);
}

TEST_CASE("grad_check through multi-head attention") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto gen = tu::rng(100 + seed);
    AttentionParams p = AttentionParams::init(4, 2, gen);
    Tensor x = tu::random_tensor({3, 4}, gen);
    const double err = grad_check(
        [&](Graph& g, Value vx) {
          BoundAttention b = bind_attention(g, p, false);
          return g.reduce_mean(multi_head_attention(g, b, vx, vx));
        },
        x, 1e-6);
    CHECK_MESSAGE(err < 1e-4, "seed ", seed, " err ", err);
  }
}

TEST_CASE("grad_check with respect to attention weights") {
  auto gen = tu::rng(200);
  AttentionParams p = AttentionParams::init(4, 2, gen);
  Tensor x = tu::random_tensor({3, 4}, gen);
  // Pack W^O into the checked point; the rest stay constant.
  const double err = grad_check(
      [&](Graph& g, Value wo) {
        BoundAttention b = bind_attention(g, p, false);
        b.wo = wo;
        return g.reduce_mean(multi_head_attention(g, b, g.constant(x), g.constant(x)));
      },
      p.wo, 1e-6);
  CHECK(err < 1e-4);
}
