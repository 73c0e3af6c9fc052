#include "framemine/policy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fm::policy {

using nn::Graph;
using nn::Mat;
using nn::NodeId;

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

uint64_t fnv1a(const std::string& s) {
  uint64_t h = kFnvOffset;
  for (const char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

std::vector<int> mlp_widths_with_out(int out) { return {192, 128, out}; }

}  // namespace

std::string arch_name(Arch a) {
  switch (a) {
    case Arch::SingleFrame:
      return "single";
    case Arch::FmFc:
      return "fm-fc";
    case Arch::FmMa:
      return "fm-ma";
    case Arch::FmMaMw:
      return "fm-ma-mw";
    case Arch::FmTg:
      return "fm-tg";
    case Arch::LearnedSe3:
      return "learned-se3";
  }
  throw std::logic_error("arch_name: bad arch");
}

std::string ArchConfig::describe() const {
  std::ostringstream os;
  os << arch_name(arch) << "|frames:";
  for (const auto& f : frames) os << f.to_string() << ",";
  os << "|pn:";
  for (int w : pointnet.widths) os << w << ",";
  os << "|m:" << action_dim << "|p:" << proprio_dim;
  if (arch == Arch::FmTg) {
    os << "|tg:" << transformer.layers << "/" << transformer.hidden << "/"
       << transformer.ff << "/" << transformer.heads << "|groups:";
    for (const auto& [s, l] : action_groups) os << s << "+" << l << ",";
    os << "|emb:" << frame_embed_dim;
  }
  return os.str();
}

Policy::Policy(ArchConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.frames.empty()) {
    throw std::invalid_argument("Policy: frame list must be non-empty");
  }
  if ((cfg_.arch == Arch::SingleFrame || cfg_.arch == Arch::LearnedSe3) &&
      cfg_.n_frames() != 1) {
    throw std::invalid_argument("Policy: " + arch_name(cfg_.arch) +
                                " takes exactly one frame");
  }
  const int n = cfg_.n_frames();
  const int fdim = cfg_.pointnet.feature_dim();
  const int m = cfg_.action_dim;
  const int p = cfg_.proprio_dim;
  Rng rng(cfg_.init_seed);

  for (int f = 0; f < n; ++f) {
    backbones_.push_back(nn::add_pointnet(
        ps_, "backbone" + std::to_string(f), 10, cfg_.pointnet, rng));
  }

  switch (cfg_.arch) {
    case Arch::SingleFrame:
    case Arch::LearnedSe3:
      expert_mlps_.push_back(nn::add_mlp(ps_, "policy", fdim + p,
                                         mlp_widths_with_out(m), rng, true));
      break;
    case Arch::FmFc:
      expert_mlps_.push_back(nn::add_mlp(ps_, "policy", n * fdim + p,
                                         mlp_widths_with_out(m), rng, true));
      break;
    case Arch::FmMa:
    case Arch::FmMaMw:
      for (int f = 0; f < n; ++f) {
        expert_mlps_.push_back(nn::add_mlp(ps_, "expert" + std::to_string(f),
                                           fdim + p, mlp_widths_with_out(m),
                                           rng, true));
      }
      weight_mlp_ = nn::add_mlp(ps_, "weight", n * fdim + p, {192, n * m},
                                rng, true);
      break;
    case Arch::FmTg: {
      if (cfg_.action_groups.empty()) {
        throw std::invalid_argument("Policy: fm-tg needs action groups");
      }
      int covered = 0;
      for (const auto& [s, l] : cfg_.action_groups) {
        if (s != covered || l <= 0) {
          throw std::invalid_argument(
              "Policy: groups must partition the action dims in order");
        }
        covered += l;
      }
      if (covered != m) {
        throw std::invalid_argument("Policy: groups do not cover action dims");
      }
      const int h = cfg_.transformer.hidden;
      token_proj_ = nn::add_linear(ps_, "token_proj",
                                   fdim + cfg_.frame_embed_dim + p, h, rng);
      for (int f = 0; f < n; ++f) {
        Mat e(1, cfg_.frame_embed_dim);
        for (int i = 0; i < cfg_.frame_embed_dim; ++i) {
          e(0, i) = rng.uniform(-0.5, 0.5);
        }
        frame_embeds_.push_back(
            ps_.add("frame_embed" + std::to_string(f), std::move(e)));
      }
      for (size_t gi = 0; gi < cfg_.action_groups.size(); ++gi) {
        Mat q(1, h);
        const double bound = nn::kaiming_bound(h);
        for (int i = 0; i < h; ++i) q(0, i) = rng.uniform(-bound, bound);
        query_tokens_.push_back(
            ps_.add("query" + std::to_string(gi), std::move(q)));
      }
      transformer_ = nn::add_transformer(ps_, "encoder", cfg_.transformer, rng);
      for (size_t gi = 0; gi < cfg_.action_groups.size(); ++gi) {
        group_mlps_.push_back(nn::add_mlp(
            ps_, "group" + std::to_string(gi), h,
            mlp_widths_with_out(cfg_.action_groups[gi].second), rng, true));
      }
      break;
    }
  }

  if (cfg_.arch == Arch::LearnedSe3) {
    aux_backbone_ = nn::add_pointnet(ps_, "aux_backbone", 10, cfg_.pointnet, rng);
    aux_head_ = nn::add_mlp(ps_, "aux_head", fdim, {192, 128, 9}, rng, true);
  }

  value_mlp_ = nn::add_mlp(ps_, "value", n * fdim + p,
                           mlp_widths_with_out(1), rng, false);
  head_ = nn::add_gaussian_head(ps_, "gaussian", m);
}

BatchInput Policy::assemble(
    const std::vector<const env::Observation*>& batch) const {
  if (batch.empty()) throw std::invalid_argument("assemble: empty batch");
  const int n = cfg_.n_frames();
  BatchInput in;
  in.batch = static_cast<int>(batch.size());
  in.bounds.resize(batch.size() + 1);
  in.bounds[0] = 0;
  Eigen::Index total = 0;
  for (size_t s = 0; s < batch.size(); ++s) {
    total += batch[s]->cloud.size();
    in.bounds[s + 1] = static_cast<int>(total);
  }
  in.frame_clouds.assign(n, Mat(total, 10));
  in.proprio.resize(batch.size(), cfg_.proprio_dim);
  for (size_t s = 0; s < batch.size(); ++s) {
    const env::Observation& obs = *batch[s];
    if (obs.proprio.size() != cfg_.proprio_dim) {
      throw std::invalid_argument("assemble: proprio dim mismatch");
    }
    in.proprio.row(s) = obs.proprio.transpose();
    const int r0 = in.bounds[s];
    const int len = obs.cloud.size();
    for (int f = 0; f < n; ++f) {
      const geom::Pose& pose = obs.frames.pose_of(cfg_.frames[f]);
      Mat& dst = in.frame_clouds[f];
      if (cfg_.frames[f] == geom::FrameId::world()) {
        dst.block(r0, 0, len, 3) = obs.cloud.positions;
      } else {
        const geom::Pose inv = geom::inverse(pose);
        const Eigen::Matrix3d r = inv.rotation.toRotationMatrix();
        dst.block(r0, 0, len, 3) =
            (obs.cloud.positions * r.transpose()).rowwise() +
            inv.translation.transpose();
      }
      dst.block(r0, 3, len, 3) = obs.cloud.colors;
      dst.block(r0, 6, len, geom::kNumSegCategories) = obs.cloud.seg;
    }
  }
  return in;
}

NodeId Policy::build_tg_sample(Graph& g, const std::vector<NodeId>& feats,
                               NodeId proprio, int sample) const {
  const int n = cfg_.n_frames();
  const NodeId prop_s = g.slice_rows(proprio, sample, 1);
  std::vector<NodeId> tokens;
  tokens.reserve(n + query_tokens_.size());
  for (int f = 0; f < n; ++f) {
    const NodeId feat_s = g.slice_rows(feats[f], sample, 1);
    const NodeId tok_in =
        g.concat_cols({feat_s, g.param(frame_embeds_[f]), prop_s});
    tokens.push_back(nn::forward(g, token_proj_, tok_in));
  }
  for (const int q : query_tokens_) tokens.push_back(g.param(q));
  const NodeId encoded = nn::forward(g, transformer_, g.concat_rows(tokens));
  std::vector<NodeId> parts;
  for (size_t gi = 0; gi < group_mlps_.size(); ++gi) {
    const NodeId q_out = g.slice_rows(encoded, n + static_cast<int>(gi), 1);
    parts.push_back(nn::forward(g, group_mlps_[gi], q_out));
  }
  return g.concat_cols(parts);
}

NodeId Policy::build_se3_positions(Graph& g, NodeId aux_out, NodeId positions,
                                   const std::vector<int>& bounds) const {
  const int batch = static_cast<int>(bounds.size()) - 1;
  Mat e1(1, 3), e2(1, 3), eye(3, 3);
  e1 << 1.0, 0.0, 0.0;
  e2 << 0.0, 1.0, 0.0;
  eye.setIdentity();
  std::vector<NodeId> rows;
  rows.reserve(batch);
  for (int s = 0; s < batch; ++s) {
    const NodeId d = g.slice_rows(aux_out, s, 1);
    // 6D rotation as a residual around identity: zero aux output is exact
    // identity and still differentiable
    const NodeId a1 = g.add(g.slice_cols(d, 0, 3), g.input(e1));
    const NodeId a2 = g.add(g.slice_cols(d, 3, 3), g.input(e2));
    const NodeId t = g.slice_cols(d, 6, 3);

    NodeId rot_t;  // 3x3, rows are the orthonormal basis (equals R^T)
    const NodeId n1 = g.rowwise_sum(g.square(a1));
    bool degenerate = g.value(n1)(0, 0) < 1e-12;
    if (!degenerate) {
      const NodeId b1 = g.mul_broadcast(a1, g.pow_scalar(n1, -0.5));
      const NodeId dot = g.rowwise_sum(g.mul(b1, a2));
      const NodeId u2 = g.sub(a2, g.mul_broadcast(b1, dot));
      const NodeId n2 = g.rowwise_sum(g.square(u2));
      if (g.value(n2)(0, 0) < 1e-12) {
        degenerate = true;
      } else {
        const NodeId b2 = g.mul_broadcast(u2, g.pow_scalar(n2, -0.5));
        const NodeId b3 = g.cross3(b1, b2);
        rot_t = g.concat_rows({b1, b2, b3});
      }
    }
    if (degenerate) rot_t = g.input(eye);  // identity rotation fallback

    const int r0 = bounds[s];
    const int len = bounds[s + 1] - r0;
    const NodeId xs = g.slice_rows(positions, r0, len);
    rows.push_back(g.add_broadcast(g.matmul(xs, rot_t), t));
  }
  return g.concat_rows(rows);
}

ForwardNodes Policy::build(Graph& g, const BatchInput& in) const {
  const int n = cfg_.n_frames();
  const int m = cfg_.action_dim;
  const NodeId prop = g.input(in.proprio);

  std::vector<NodeId> feats(n);
  if (cfg_.arch == Arch::LearnedSe3) {
    const NodeId cloud = g.input(in.frame_clouds[0]);
    const NodeId aux_feat =
        nn::forward(g, aux_backbone_, cloud, in.bounds);
    const NodeId aux_out = nn::forward(g, aux_head_, aux_feat);
    const NodeId pos = g.slice_cols(cloud, 0, 3);
    const NodeId rest = g.slice_cols(cloud, 3, 7);
    const NodeId pos_t = build_se3_positions(g, aux_out, pos, in.bounds);
    const NodeId transformed = g.concat_cols({pos_t, rest});
    feats[0] = nn::forward(g, backbones_[0], transformed, in.bounds);
  } else {
    for (int f = 0; f < n; ++f) {
      feats[f] = nn::forward(g, backbones_[f], g.input(in.frame_clouds[f]),
                             in.bounds);
    }
  }

  ForwardNodes out;
  out.features = n == 1 ? feats[0] : g.concat_cols(feats);
  const NodeId shared_in = g.concat_cols({out.features, prop});
  out.value = nn::forward(g, value_mlp_, shared_in);

  switch (cfg_.arch) {
    case Arch::SingleFrame:
    case Arch::LearnedSe3:
      out.mean = nn::forward(g, expert_mlps_[0],
                             g.concat_cols({feats[0], prop}));
      break;
    case Arch::FmFc:
      out.mean = nn::forward(g, expert_mlps_[0], shared_in);
      break;
    case Arch::FmMa:
    case Arch::FmMaMw: {
      std::vector<NodeId> proposals(n);
      for (int f = 0; f < n; ++f) {
        proposals[f] = nn::forward(g, expert_mlps_[f],
                                   g.concat_cols({feats[f], prop}));
      }
      out.proposals = n == 1 ? proposals[0] : g.concat_cols(proposals);
      const NodeId logits = nn::forward(g, weight_mlp_, shared_in);
      out.weights = g.softmax_expert_blocks(logits, n, m);
      if (cfg_.arch == Arch::FmMa) {
        NodeId fused = g.mul(proposals[0], g.slice_cols(out.weights, 0, m));
        for (int f = 1; f < n; ++f) {
          fused = g.add(fused,
                        g.mul(proposals[f], g.slice_cols(out.weights, f * m, m)));
        }
        out.mean = fused;
      } else {
        // hard per-joint selection; the weight net gets no gradient
        const Mat& w = g.value(out.weights);
        Mat mask = Mat::Zero(w.rows(), w.cols());
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
          for (int j = 0; j < m; ++j) {
            int best = 0;
            double bv = w(r, j);
            for (int f = 1; f < n; ++f) {
              if (w(r, f * m + j) > bv) {  // ties keep the lowest frame index
                bv = w(r, f * m + j);
                best = f;
              }
            }
            mask(r, best * m + j) = 1.0;
          }
        }
        const NodeId mask_in = g.input(std::move(mask));
        NodeId fused = g.mul(g.slice_cols(out.proposals, 0, m),
                             g.slice_cols(mask_in, 0, m));
        for (int f = 1; f < n; ++f) {
          fused = g.add(fused, g.mul(g.slice_cols(out.proposals, f * m, m),
                                     g.slice_cols(mask_in, f * m, m)));
        }
        out.mean = fused;
      }
      break;
    }
    case Arch::FmTg: {
      std::vector<NodeId> sample_means;
      sample_means.reserve(in.batch);
      for (int s = 0; s < in.batch; ++s) {
        sample_means.push_back(build_tg_sample(g, feats, prop, s));
      }
      out.mean = in.batch == 1 ? sample_means[0] : g.concat_rows(sample_means);
      break;
    }
  }
  return out;
}

PolicyOutput Policy::evaluate(const env::Observation& obs) const {
  Graph g(&ps_);
  const BatchInput in = assemble({&obs});
  const ForwardNodes nodes = build(g, in);

  PolicyOutput out;
  out.action_mean = g.value(nodes.mean).row(0).transpose();
  out.value = g.value(nodes.value)(0, 0);
  const int fdim = feature_dim();
  const int n = cfg_.n_frames();
  out.frame_features.resize(n, fdim);
  for (int f = 0; f < n; ++f) {
    out.frame_features.row(f) = g.value(nodes.features).row(0).segment(f * fdim, fdim);
  }
  if (nodes.proposals >= 0) {
    const int m = cfg_.action_dim;
    Eigen::MatrixXd a(n, m), w(n, m);
    for (int f = 0; f < n; ++f) {
      a.row(f) = g.value(nodes.proposals).row(0).segment(f * m, m);
      w.row(f) = g.value(nodes.weights).row(0).segment(f * m, m);
    }
    out.proposals = a;
    out.weights = w;
  }
  return out;
}

uint64_t Policy::fingerprint() const {
  std::ostringstream os;
  os << cfg_.describe() << "|params:";
  for (int i = 0; i < ps_.size(); ++i) {
    os << ps_.at(i).name << ":" << ps_.at(i).value.rows() << "x"
       << ps_.at(i).value.cols() << ",";
  }
  return fnv1a(os.str());
}

std::vector<int> Policy::value_param_indices() const {
  std::vector<int> out;
  for (int i = 0; i < ps_.size(); ++i) {
    if (ps_.at(i).name.rfind("value.", 0) == 0) out.push_back(i);
  }
  return out;
}

ArchConfig make_arch_config(const std::string& arch,
                            const std::vector<std::string>& frames,
                            const env::Env& env_meta, const std::string& preset,
                            uint64_t init_seed) {
  ArchConfig cfg;
  cfg.action_dim = env_meta.action_dim();
  cfg.proprio_dim = env_meta.proprio_dim();
  cfg.action_groups = env_meta.action_groups();
  cfg.init_seed = init_seed;
  cfg.transformer = preset == "paper" ? nn::TransformerConfig::paper()
                                      : nn::TransformerConfig::desk();

  std::vector<std::string> frame_strs = frames;
  if (arch.rfind("single:", 0) == 0) {
    cfg.arch = Arch::SingleFrame;
    frame_strs = {arch.substr(7)};
  } else if (arch == "single") {
    cfg.arch = Arch::SingleFrame;
  } else if (arch == "fm-fc") {
    cfg.arch = Arch::FmFc;
  } else if (arch == "fm-ma") {
    cfg.arch = Arch::FmMa;
  } else if (arch == "fm-ma-mw") {
    cfg.arch = Arch::FmMaMw;
  } else if (arch == "fm-tg") {
    cfg.arch = Arch::FmTg;
  } else if (arch == "learned-se3") {
    cfg.arch = Arch::LearnedSe3;
  } else {
    throw std::invalid_argument("unknown architecture '" + arch + "'");
  }

  const auto available = env_meta.frame_ids();
  for (const auto& s : frame_strs) {
    const geom::FrameId id = geom::FrameId::parse(s);
    bool found = false;
    for (const auto& a : available) found = found || a == id;
    if (!found) {
      throw std::invalid_argument("frame '" + s + "' not offered by task");
    }
    cfg.frames.push_back(id);
  }
  if (cfg.frames.empty()) {
    throw std::invalid_argument("frame list must be non-empty");
  }
  return cfg;
}

std::unique_ptr<Policy> make_policy(const std::string& arch,
                                    const std::vector<std::string>& frames,
                                    const env::Env& env_meta,
                                    const std::string& preset,
                                    uint64_t init_seed) {
  return std::make_unique<Policy>(
      make_arch_config(arch, frames, env_meta, preset, init_seed));
}

std::vector<WeightTraceRow> weight_trace_rows(
    const std::vector<Eigen::MatrixXd>& per_step_weights,
    const std::vector<std::pair<int, int>>& groups) {
  std::vector<WeightTraceRow> rows;
  for (size_t t = 0; t < per_step_weights.size(); ++t) {
    const Eigen::MatrixXd& w = per_step_weights[t];
    for (int f = 0; f < w.rows(); ++f) {
      for (size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& [start, len] = groups[gi];
        rows.push_back({static_cast<int>(t), f, static_cast<int>(gi),
                        w.row(f).segment(start, len).mean()});
      }
    }
  }
  return rows;
}

}  // namespace fm::policy
