#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "framemine/nn/layers.hpp"
#include "oracles.hpp"

using namespace fm;
using nn::Graph;
using nn::GradBuffer;
using nn::Mat;
using nn::NodeId;
using nn::ParamStore;

namespace {

Mat random_mat(Rng& rng, int r, int c, double scale = 1.0) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

// scalar loss: fixed random projection of the output
double weighted_sum(const Mat& out, const Mat& w) {
  return out.cwiseProduct(w).sum();
}

}  // namespace

TEST_CASE("elementary op gradients vs finite differences") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore ps;
    const int a = ps.add("a", random_mat(rng, 3, 4));
    const int b = ps.add("b", random_mat(rng, 4, 5));
    const int c = ps.add("c", random_mat(rng, 3, 5));
    const int v = ps.add("v", random_mat(rng, 1, 5));
    const Mat w = random_mat(rng, 3, 5);

    const auto loss_fn = [&]() {
      Graph g(&ps);
      NodeId x = g.matmul(g.param(a), g.param(b));
      x = g.add(x, g.param(c));
      x = g.relu(x);
      x = g.add_broadcast(x, g.param(v));
      x = g.mul_broadcast(x, g.param(v));
      NodeId y = g.exp(g.scale(x, 0.1));
      y = g.mul(y, g.clip(x, -0.5, 0.8));
      y = g.min(y, g.square(x));
      return weighted_sum(g.value(y), w);
    };

    GradBuffer grads(ps);
    {
      Graph g(&ps, &grads);
      NodeId x = g.matmul(g.param(a), g.param(b));
      x = g.add(x, g.param(c));
      x = g.relu(x);
      x = g.add_broadcast(x, g.param(v));
      x = g.mul_broadcast(x, g.param(v));
      NodeId y = g.exp(g.scale(x, 0.1));
      y = g.mul(y, g.clip(x, -0.5, 0.8));
      y = g.min(y, g.square(x));
      g.backward(g.sum(g.mul(y, g.input(w))));
    }
    const auto rep = oracle::fd_check_params(ps, grads, loss_fn, rng, 6);
    CHECK(rep.worst_rel < 1e-4);
  }
}

TEST_CASE("softmax, layer norm, segmented max, concat, slice gradients") {
  Rng rng(103);
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore ps;
    const int a = ps.add("a", random_mat(rng, 6, 4));
    const int gain = ps.add("g", random_mat(rng, 1, 4, 0.3));
    const int bias = ps.add("b", random_mat(rng, 1, 4, 0.3));
    const Mat w = random_mat(rng, 2, 4);
    const std::vector<int> bounds = {0, 3, 6};

    const auto build = [&](Graph& g) {
      NodeId x = g.layer_norm(g.param(a), g.param(gain), g.param(bias));
      x = g.softmax_rows(x);
      NodeId top = g.slice_cols(g.concat_cols({x, g.square(x)}), 2, 4);
      return g.segmented_max(top, bounds);
    };
    const auto loss_fn = [&]() {
      Graph g(&ps);
      return weighted_sum(g.value(build(g)), w);
    };
    GradBuffer grads(ps);
    {
      Graph g(&ps, &grads);
      g.backward(g.sum(g.mul(build(g), g.input(w))));
    }
    const auto rep = oracle::fd_check_params(ps, grads, loss_fn, rng, 8);
    CHECK(rep.worst_rel < 1e-4);
  }
}

TEST_CASE("softmax_expert_blocks columns sum to one and grads check") {
  Rng rng(105);
  ParamStore ps;
  const int n = 3, m = 4;
  const int logits = ps.add("w", random_mat(rng, 5, n * m));
  const Mat w = random_mat(rng, 5, n * m);

  Graph probe(&ps);
  const Mat sm = probe.value(
      probe.softmax_expert_blocks(probe.param(logits), n, m));
  for (int r = 0; r < 5; ++r) {
    for (int j = 0; j < m; ++j) {
      double col = 0.0;
      for (int f = 0; f < n; ++f) col += sm(r, f * m + j);
      CHECK(std::abs(col - 1.0) < 1e-9);
      for (int f = 0; f < n; ++f) CHECK(sm(r, f * m + j) > 0.0);
    }
  }

  const auto loss_fn = [&]() {
    Graph g(&ps);
    return weighted_sum(
        g.value(g.softmax_expert_blocks(g.param(logits), n, m)), w);
  };
  GradBuffer grads(ps);
  {
    Graph g(&ps, &grads);
    g.backward(g.sum(
        g.mul(g.softmax_expert_blocks(g.param(logits), n, m), g.input(w))));
  }
  const auto rep = oracle::fd_check_params(ps, grads, loss_fn, rng, 12);
  CHECK(rep.worst_rel < 1e-4);
}

TEST_CASE("cross3 and pow gradients") {
  Rng rng(107);
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore ps;
    const int a = ps.add("a", random_mat(rng, 1, 3));
    const int b = ps.add("b", random_mat(rng, 1, 3));
    const Mat w = random_mat(rng, 1, 3);
    const auto build = [&](Graph& g) {
      const NodeId n2 = g.add_scalar(g.rowwise_sum(g.square(g.param(a))), 0.3);
      const NodeId an = g.mul_broadcast(g.param(a), g.pow_scalar(n2, -0.5));
      return g.cross3(an, g.param(b));
    };
    const auto loss_fn = [&]() {
      Graph g(&ps);
      return weighted_sum(g.value(build(g)), w);
    };
    GradBuffer grads(ps);
    {
      Graph g(&ps, &grads);
      g.backward(g.sum(g.mul(build(g), g.input(w))));
    }
    const auto rep = oracle::fd_check_params(ps, grads, loss_fn, rng, 3);
    CHECK(rep.worst_rel < 1e-4);
  }
}

TEST_CASE("mlp: zero final layer, identity layer, gradient check") {
  Rng rng(109);
  {
    ParamStore ps;
    Rng init(1);
    const nn::Mlp mlp = nn::add_mlp(ps, "m", 6, {8, 4}, init, true);
    Graph g(&ps);
    const NodeId out = nn::forward(g, mlp, g.input(random_mat(rng, 3, 6)));
    CHECK(g.value(out).cwiseAbs().maxCoeff() == 0.0);
  }
  {
    // single identity-sized layer with identity weights reproduces the input
    ParamStore ps;
    Rng init(1);
    nn::Mlp mlp = nn::add_mlp(ps, "m", 4, {4}, init, false);
    ps.at(mlp.layers[0].w).value = Mat::Identity(4, 4);
    ps.at(mlp.layers[0].b).value = Mat::Zero(1, 4);
    const Mat x = random_mat(rng, 2, 4);
    Graph g(&ps);
    CHECK((g.value(nn::forward(g, mlp, g.input(x))) - x).cwiseAbs()
              .maxCoeff() == 0.0);
  }
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore ps;
    Rng init(trial + 2);
    const nn::Mlp mlp = nn::add_mlp(ps, "m", 5, {16, 8, 3}, init, false);
    const Mat x = random_mat(rng, 4, 5);
    const Mat w = random_mat(rng, 4, 3);
    const auto loss_fn = [&]() {
      Graph g(&ps);
      return weighted_sum(g.value(nn::forward(g, mlp, g.input(x))), w);
    };
    GradBuffer grads(ps);
    {
      Graph g(&ps, &grads);
      g.backward(g.sum(g.mul(nn::forward(g, mlp, g.input(x)), g.input(w))));
    }
    const auto rep = oracle::fd_check_params(ps, grads, loss_fn, rng, 6);
    CHECK(rep.worst_rel < 1e-6);
  }
  {
    ParamStore ps;
    Rng init(3);
    const nn::Mlp mlp = nn::add_mlp(ps, "m", 4, {8, 2}, init, false);
    Graph g(&ps);
    CHECK_THROWS(nn::forward(g, mlp, g.input(random_mat(rng, 2, 5))));
  }
}

TEST_CASE("pointnet: duplication and permutation invariance are bitwise") {
  Rng rng(113);
  ParamStore ps;
  Rng init(5);
  const nn::PointNet pn = nn::add_pointnet(ps, "pn", 10, {}, init);

  const Mat pts = random_mat(rng, 24, 10);
  Graph g(&ps);
  const Mat base = g.value(nn::forward(g, pn, g.input(pts), {0, 24}));

  // duplicate every point
  Mat dup(48, 10);
  dup.topRows(24) = pts;
  dup.bottomRows(24) = pts;
  Graph g2(&ps);
  const Mat dup_out = g2.value(nn::forward(g2, pn, g2.input(dup), {0, 48}));
  CHECK((dup_out - base).cwiseAbs().maxCoeff() == 0.0);

  // random permutation
  std::vector<int> perm(24);
  for (int i = 0; i < 24; ++i) perm[i] = i;
  for (int i = 23; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  Mat shuffled(24, 10);
  for (int i = 0; i < 24; ++i) shuffled.row(i) = pts.row(perm[i]);
  Graph g3(&ps);
  const Mat perm_out =
      g3.value(nn::forward(g3, pn, g3.input(shuffled), {0, 24}));
  CHECK((perm_out - base).cwiseAbs().maxCoeff() == 0.0);

  // pooling is monotone: adding a point cannot lower any coordinate
  Mat plus(25, 10);
  plus.topRows(24) = pts;
  plus.row(24) = random_mat(rng, 1, 10);
  Graph g4(&ps);
  const Mat plus_out = g4.value(nn::forward(g4, pn, g4.input(plus), {0, 25}));
  CHECK(((plus_out - base).array() >= 0.0).all());
}

TEST_CASE("pointnet batched segments equal per-sample forwards") {
  Rng rng(115);
  ParamStore ps;
  Rng init(6);
  const nn::PointNet pn = nn::add_pointnet(ps, "pn", 10, {}, init);
  const Mat a = random_mat(rng, 7, 10);
  const Mat b = random_mat(rng, 12, 10);
  Mat both(19, 10);
  both.topRows(7) = a;
  both.bottomRows(12) = b;
  Graph g(&ps);
  const Mat batched = g.value(nn::forward(g, pn, g.input(both), {0, 7, 19}));
  Graph ga(&ps), gb(&ps);
  const Mat fa = ga.value(nn::forward(ga, pn, ga.input(a), {0, 7}));
  const Mat fb = gb.value(nn::forward(gb, pn, gb.input(b), {0, 12}));
  CHECK((batched.row(0) - fa.row(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((batched.row(1) - fb.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pointnet gradient finite differences") {
  Rng rng(117);
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore ps;
    Rng init(trial + 10);
    nn::PointNetConfig cfg;
    cfg.widths = {8, 12, 6};  // desk-sized probe; widths are configuration
    const nn::PointNet pn = nn::add_pointnet(ps, "pn", 10, cfg, init);
    const Mat pts = random_mat(rng, 9, 10);
    const Mat w = random_mat(rng, 2, 6);
    const std::vector<int> bounds = {0, 4, 9};
    const auto loss_fn = [&]() {
      Graph g(&ps);
      return weighted_sum(g.value(nn::forward(g, pn, g.input(pts), bounds)), w);
    };
    GradBuffer grads(ps);
    {
      Graph g(&ps, &grads);
      g.backward(
          g.sum(g.mul(nn::forward(g, pn, g.input(pts), bounds), g.input(w))));
    }
    const auto rep = oracle::fd_check_params(ps, grads, loss_fn, rng, 8);
    CHECK(rep.worst_rel < 1e-6);
  }
}

TEST_CASE("pointnet rejects empty input") {
  ParamStore ps;
  Rng init(7);
  const nn::PointNet pn = nn::add_pointnet(ps, "pn", 10, {}, init);
  Graph g(&ps);
  CHECK_THROWS(g.segmented_max(g.input(Mat::Zero(3, 2)), {0, 0, 3}));
}

TEST_CASE("transformer: single token finite, permutation equivariance") {
  Rng rng(119);
  ParamStore ps;
  Rng init(8);
  nn::TransformerConfig cfg = nn::TransformerConfig::desk();
  cfg.hidden = 16;
  cfg.ff = 32;
  cfg.heads = 4;
  const nn::Transformer tr = nn::add_transformer(ps, "t", cfg, init);

  Graph g1(&ps);
  const Mat one = g1.value(nn::forward(g1, tr, g1.input(random_mat(rng, 1, 16))));
  CHECK(one.allFinite());

  const Mat tokens = random_mat(rng, 5, 16);
  Graph g2(&ps);
  const Mat out = g2.value(nn::forward(g2, tr, g2.input(tokens)));
  std::vector<int> perm = {3, 0, 4, 1, 2};
  Mat shuffled(5, 16);
  for (int i = 0; i < 5; ++i) shuffled.row(i) = tokens.row(perm[i]);
  Graph g3(&ps);
  const Mat out_p = g3.value(nn::forward(g3, tr, g3.input(shuffled)));
  for (int i = 0; i < 5; ++i) {
    CHECK((out_p.row(i) - out.row(perm[i])).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("transformer gradient finite differences") {
  Rng rng(121);
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore ps;
    Rng init(trial + 20);
    nn::TransformerConfig cfg;
    cfg.layers = 2;
    cfg.hidden = 8;
    cfg.ff = 16;
    cfg.heads = 2;
    const nn::Transformer tr = nn::add_transformer(ps, "t", cfg, init);
    const Mat tokens = random_mat(rng, 4, 8, 0.5);
    const Mat w = random_mat(rng, 4, 8);
    const auto loss_fn = [&]() {
      Graph g(&ps);
      return weighted_sum(g.value(nn::forward(g, tr, g.input(tokens))), w);
    };
    GradBuffer grads(ps);
    {
      Graph g(&ps, &grads);
      g.backward(g.sum(g.mul(nn::forward(g, tr, g.input(tokens)), g.input(w))));
    }
    const auto rep = oracle::fd_check_params(ps, grads, loss_fn, rng, 4);
    CHECK(rep.worst_rel < 1e-5);
  }
}

TEST_CASE("gaussian head: analytic log prob, entropy, sampling limits") {
  ParamStore ps;
  const int m = 6;
  const nn::GaussianHead head = nn::add_gaussian_head(ps, "g", m);
  Rng rng(123);

  // log prob at the mean with log_std = 0
  Eigen::VectorXd mean(m);
  for (int i = 0; i < m; ++i) mean(i) = rng.normal();
  const double lp = nn::gaussian_log_prob_value(ps, head, mean, mean);
  CHECK(lp == doctest::Approx(-0.5 * m * std::log(2.0 * M_PI)).epsilon(1e-12));

  // generic point matches the closed form with a nonzero log_std
  for (int i = 0; i < m; ++i) ps.at(head.log_std).value(0, i) = 0.2 * rng.normal();
  Eigen::VectorXd action(m);
  for (int i = 0; i < m; ++i) action(i) = rng.normal();
  double expect = -0.5 * m * std::log(2.0 * M_PI);
  for (int i = 0; i < m; ++i) {
    const double s = std::exp(ps.at(head.log_std).value(0, i));
    const double z = (action(i) - mean(i)) / s;
    expect += -0.5 * z * z - std::log(s);
  }
  CHECK(nn::gaussian_log_prob_value(ps, head, mean, action) ==
        doctest::Approx(expect).epsilon(1e-12));

  // log_std -> -inf limit: samples collapse onto the mean
  ps.at(head.log_std).value.setConstant(-40.0);
  const Eigen::VectorXd s = nn::gaussian_sample(ps, head, mean, rng);
  CHECK((s - mean).cwiseAbs().maxCoeff() < 1e-12);

  // Monte-Carlo entropy vs analytic
  ps.at(head.log_std).value.setZero();
  for (int i = 0; i < m; ++i) ps.at(head.log_std).value(0, i) = 0.1 * i - 0.2;
  const double analytic = nn::gaussian_entropy_value(ps, head);
  double mc = 0.0;
  const int samples = 1000000;
  for (int k = 0; k < samples; ++k) {
    const Eigen::VectorXd x = nn::gaussian_sample(ps, head, mean, rng);
    mc += -nn::gaussian_log_prob_value(ps, head, mean, x);
  }
  mc /= samples;
  CHECK(std::abs(mc - analytic) < 1e-2);

  // gradient of batched log prob w.r.t. mean path and log_std
  ParamStore ps2;
  const int w = ps2.add("w", random_mat(rng, 3, m));
  const nn::GaussianHead head2 = nn::add_gaussian_head(ps2, "g", m);
  const Mat actions = random_mat(rng, 3, m);
  const auto loss_fn = [&]() {
    Graph g(&ps2);
    return g.value(nn::gaussian_log_prob(g, head2, g.param(w), actions)).sum();
  };
  GradBuffer grads(ps2);
  {
    Graph g(&ps2, &grads);
    g.backward(g.sum(nn::gaussian_log_prob(g, head2, g.param(w), actions)));
  }
  const auto rep = oracle::fd_check_params(ps2, grads, loss_fn, rng, 8);
  CHECK(rep.worst_rel < 1e-6);
}

TEST_CASE("forward and backward are deterministic across rebuilds") {
  Rng rng(127);
  ParamStore ps;
  Rng init(30);
  const nn::Mlp mlp = nn::add_mlp(ps, "m", 8, {16, 4}, init, false);
  const Mat x = random_mat(rng, 5, 8);
  const Mat w = random_mat(rng, 5, 4);
  Mat out1, out2;
  GradBuffer g1(ps), g2(ps);
  {
    Graph g(&ps, &g1);
    const NodeId y = nn::forward(g, mlp, g.input(x));
    out1 = g.value(y);
    g.backward(g.sum(g.mul(y, g.input(w))));
  }
  {
    Graph g(&ps, &g2);
    const NodeId y = nn::forward(g, mlp, g.input(x));
    out2 = g.value(y);
    g.backward(g.sum(g.mul(y, g.input(w))));
  }
  CHECK((out1 - out2).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < ps.size(); ++i) {
    CHECK((g1.at(i) - g2.at(i)).cwiseAbs().maxCoeff() == 0.0);
  }
}
