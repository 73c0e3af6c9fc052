#pragma once

#include <string>
#include <vector>

#include "framemine/nn/graph.hpp"
#include "framemine/rng.hpp"

namespace fm::nn {

struct Linear {
  int w = -1;
  int b = -1;
  int in = 0;
  int out = 0;
};

Linear add_linear(ParamStore& ps, const std::string& name, int in, int out,
                  Rng& rng, bool zero_init = false);
NodeId forward(Graph& g, const Linear& l, NodeId x);

// Affine stack with ReLU between layers, final layer linear.
struct Mlp {
  std::vector<Linear> layers;
};

Mlp add_mlp(ParamStore& ps, const std::string& name, int in,
            const std::vector<int>& widths, Rng& rng,
            bool zero_init_last = false);
NodeId forward(Graph& g, const Mlp& m, NodeId x);

struct PointNetConfig {
  std::vector<int> widths{64, 128, 300};  // per-point MLP, max-pooled after

  int feature_dim() const { return widths.back(); }
};

// Shared per-point MLP (ReLU after every layer) followed by a coordinate-wise
// max over each cloud segment. Input is the row-concatenation of B clouds;
// bounds give the per-cloud row ranges; output is B x feature_dim.
struct PointNet {
  Mlp mlp;
  int in_dim = 0;
  int feature_dim = 0;
};

PointNet add_pointnet(ParamStore& ps, const std::string& name, int in_dim,
                      const PointNetConfig& cfg, Rng& rng);
NodeId forward(Graph& g, const PointNet& p, NodeId points,
               const std::vector<int>& bounds);

struct TransformerConfig {
  int layers = 2;
  int hidden = 128;
  int ff = 256;
  int heads = 4;

  static TransformerConfig paper() { return {3, 300, 1024, 6}; }
  static TransformerConfig desk() { return {2, 128, 256, 4}; }
};

// Pre-norm self-attention encoder; no positional encoding.
struct TransformerLayer {
  int ln1_g = -1, ln1_b = -1;
  Linear wq, wk, wv, wo;
  int ln2_g = -1, ln2_b = -1;
  Linear ff1, ff2;
};

struct Transformer {
  std::vector<TransformerLayer> layers;
  int lnf_g = -1, lnf_b = -1;
  int hidden = 0;
  int heads = 0;
};

Transformer add_transformer(ParamStore& ps, const std::string& name,
                            const TransformerConfig& cfg, Rng& rng);
NodeId forward(Graph& g, const Transformer& t, NodeId tokens);

// Diagonal Gaussian over actions; one state-independent learned log-std
// vector, initialized to zero.
struct GaussianHead {
  int log_std = -1;
  int dim = 0;
};

GaussianHead add_gaussian_head(ParamStore& ps, const std::string& name,
                               int dim);
// mean is B x m; returns B x 1 log-probabilities of `actions` (B x m const).
NodeId gaussian_log_prob(Graph& g, const GaussianHead& h, NodeId mean,
                         const Mat& actions);
NodeId gaussian_entropy(Graph& g, const GaussianHead& h);  // 1x1
Eigen::VectorXd gaussian_sample(const ParamStore& ps, const GaussianHead& h,
                                const Eigen::VectorXd& mean, Rng& rng);
double gaussian_log_prob_value(const ParamStore& ps, const GaussianHead& h,
                               const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& action);
double gaussian_entropy_value(const ParamStore& ps, const GaussianHead& h);

}  // namespace fm::nn
