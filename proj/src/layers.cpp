#include "framemine/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace fm::nn {

Linear add_linear(ParamStore& ps, const std::string& name, int in, int out,
                  Rng& rng, bool zero_init) {
  Linear l;
  l.in = in;
  l.out = out;
  Mat w = Mat::Zero(in, out);
  if (!zero_init) {
    const double bound = kaiming_bound(in);
    for (int r = 0; r < in; ++r) {
      for (int c = 0; c < out; ++c) w(r, c) = rng.uniform(-bound, bound);
    }
  }
  l.w = ps.add(name + ".w", std::move(w));
  l.b = ps.add(name + ".b", Mat::Zero(1, out));
  return l;
}

NodeId forward(Graph& g, const Linear& l, NodeId x) {
  return g.add_broadcast(g.matmul(x, g.param(l.w)), g.param(l.b));
}

Mlp add_mlp(ParamStore& ps, const std::string& name, int in,
            const std::vector<int>& widths, Rng& rng, bool zero_init_last) {
  if (widths.empty()) throw std::invalid_argument("add_mlp: empty widths");
  Mlp m;
  int d = in;
  for (size_t i = 0; i < widths.size(); ++i) {
    const bool last = i + 1 == widths.size();
    m.layers.push_back(add_linear(ps, name + ".l" + std::to_string(i), d,
                                  widths[i], rng, last && zero_init_last));
    d = widths[i];
  }
  return m;
}

NodeId forward(Graph& g, const Mlp& m, NodeId x) {
  NodeId h = x;
  for (size_t i = 0; i < m.layers.size(); ++i) {
    h = forward(g, m.layers[i], h);
    if (i + 1 != m.layers.size()) h = g.relu(h);
  }
  return h;
}

PointNet add_pointnet(ParamStore& ps, const std::string& name, int in_dim,
                      const PointNetConfig& cfg, Rng& rng) {
  PointNet p;
  p.in_dim = in_dim;
  p.feature_dim = cfg.feature_dim();
  p.mlp = add_mlp(ps, name, in_dim, cfg.widths, rng, false);
  return p;
}

NodeId forward(Graph& g, const PointNet& p, NodeId points,
               const std::vector<int>& bounds) {
  if (g.value(points).rows() < 1) {
    throw std::invalid_argument("pointnet: empty input");
  }
  NodeId h = points;
  for (const auto& l : p.mlp.layers) {
    // pointwise path keeps per-point outputs independent of batch shape
    h = g.relu(g.linear_pointwise(h, g.param(l.w), g.param(l.b)));
  }
  return g.segmented_max(h, bounds);
}

Transformer add_transformer(ParamStore& ps, const std::string& name,
                            const TransformerConfig& cfg, Rng& rng) {
  if (cfg.hidden % cfg.heads != 0) {
    throw std::invalid_argument("transformer: hidden not divisible by heads");
  }
  Transformer t;
  t.hidden = cfg.hidden;
  t.heads = cfg.heads;
  for (int i = 0; i < cfg.layers; ++i) {
    const std::string ln = name + ".layer" + std::to_string(i);
    TransformerLayer layer;
    layer.ln1_g = ps.add(ln + ".ln1.g", Mat::Ones(1, cfg.hidden));
    layer.ln1_b = ps.add(ln + ".ln1.b", Mat::Zero(1, cfg.hidden));
    layer.wq = add_linear(ps, ln + ".wq", cfg.hidden, cfg.hidden, rng);
    layer.wk = add_linear(ps, ln + ".wk", cfg.hidden, cfg.hidden, rng);
    layer.wv = add_linear(ps, ln + ".wv", cfg.hidden, cfg.hidden, rng);
    layer.wo = add_linear(ps, ln + ".wo", cfg.hidden, cfg.hidden, rng);
    layer.ln2_g = ps.add(ln + ".ln2.g", Mat::Ones(1, cfg.hidden));
    layer.ln2_b = ps.add(ln + ".ln2.b", Mat::Zero(1, cfg.hidden));
    layer.ff1 = add_linear(ps, ln + ".ff1", cfg.hidden, cfg.ff, rng);
    layer.ff2 = add_linear(ps, ln + ".ff2", cfg.ff, cfg.hidden, rng);
    t.layers.push_back(layer);
  }
  t.lnf_g = ps.add(name + ".lnf.g", Mat::Ones(1, cfg.hidden));
  t.lnf_b = ps.add(name + ".lnf.b", Mat::Zero(1, cfg.hidden));
  return t;
}

NodeId forward(Graph& g, const Transformer& t, NodeId tokens) {
  if (g.value(tokens).cols() != t.hidden) {
    throw std::invalid_argument("transformer: token dim mismatch");
  }
  const int dk = t.hidden / t.heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  NodeId x = tokens;
  for (const auto& layer : t.layers) {
    NodeId n1 = g.layer_norm(x, g.param(layer.ln1_g), g.param(layer.ln1_b));
    NodeId q = forward(g, layer.wq, n1);
    NodeId k = forward(g, layer.wk, n1);
    NodeId v = forward(g, layer.wv, n1);
    std::vector<NodeId> heads;
    heads.reserve(t.heads);
    for (int h = 0; h < t.heads; ++h) {
      NodeId qh = g.slice_cols(q, h * dk, dk);
      NodeId kh = g.slice_cols(k, h * dk, dk);
      NodeId vh = g.slice_cols(v, h * dk, dk);
      NodeId scores = g.scale(g.matmul_t(qh, kh), inv_sqrt_dk);
      NodeId attn = g.softmax_rows(scores);
      heads.push_back(g.matmul(attn, vh));
    }
    NodeId mha = forward(g, layer.wo, g.concat_cols(heads));
    x = g.add(x, mha);
    NodeId n2 = g.layer_norm(x, g.param(layer.ln2_g), g.param(layer.ln2_b));
    NodeId ff = forward(g, layer.ff2, g.relu(forward(g, layer.ff1, n2)));
    x = g.add(x, ff);
  }
  return g.layer_norm(x, g.param(t.lnf_g), g.param(t.lnf_b));
}

GaussianHead add_gaussian_head(ParamStore& ps, const std::string& name,
                               int dim) {
  GaussianHead h;
  h.dim = dim;
  h.log_std = ps.add(name + ".log_std", Mat::Zero(1, dim));
  return h;
}

NodeId gaussian_log_prob(Graph& g, const GaussianHead& h, NodeId mean,
                         const Mat& actions) {
  const NodeId ls = g.param(h.log_std);
  const NodeId a = g.input(actions);
  const NodeId inv_std = g.exp(g.scale(ls, -1.0));            // 1 x m
  const NodeId z = g.mul_broadcast(g.sub(a, mean), inv_std);  // B x m
  const NodeId quad = g.scale(g.rowwise_sum(g.square(z)), -0.5);
  const NodeId log_det = g.scale(g.sum(ls), -1.0);  // -sum(log_std)
  NodeId lp = g.add_broadcast(quad, log_det);
  lp = g.add_scalar(lp, -0.5 * h.dim * std::log(2.0 * M_PI));
  return lp;
}

NodeId gaussian_entropy(Graph& g, const GaussianHead& h) {
  NodeId s = g.sum(g.param(h.log_std));
  return g.add_scalar(s, 0.5 * h.dim * (1.0 + std::log(2.0 * M_PI)));
}

Eigen::VectorXd gaussian_sample(const ParamStore& ps, const GaussianHead& h,
                                const Eigen::VectorXd& mean, Rng& rng) {
  const Mat& ls = ps.at(h.log_std).value;
  Eigen::VectorXd out(h.dim);
  for (int j = 0; j < h.dim; ++j) {
    out(j) = mean(j) + std::exp(ls(0, j)) * rng.normal();
  }
  return out;
}

double gaussian_log_prob_value(const ParamStore& ps, const GaussianHead& h,
                               const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& action) {
  const Mat& ls = ps.at(h.log_std).value;
  double lp = -0.5 * h.dim * std::log(2.0 * M_PI);
  for (int j = 0; j < h.dim; ++j) {
    const double z = (action(j) - mean(j)) * std::exp(-ls(0, j));
    lp += -0.5 * z * z - ls(0, j);
  }
  return lp;
}

double gaussian_entropy_value(const ParamStore& ps, const GaussianHead& h) {
  return ps.at(h.log_std).value.sum() +
         0.5 * h.dim * (1.0 + std::log(2.0 * M_PI));
}

}  // namespace fm::nn
