#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "framemine/env.hpp"
#include "framemine/geometry.hpp"
#include "framemine/nn/layers.hpp"

namespace fm::policy {

enum class Arch : int {
  SingleFrame = 0,
  FmFc = 1,
  FmMa = 2,
  FmMaMw = 3,
  FmTg = 4,
  LearnedSe3 = 5,
};

std::string arch_name(Arch a);

struct ArchConfig {
  Arch arch = Arch::SingleFrame;
  std::vector<geom::FrameId> frames;
  nn::PointNetConfig pointnet;
  nn::TransformerConfig transformer = nn::TransformerConfig::desk();
  std::vector<std::pair<int, int>> action_groups;  // FM-TG partition
  int action_dim = 0;
  int proprio_dim = 0;
  int frame_embed_dim = 16;
  uint64_t init_seed = 0;

  int n_frames() const { return static_cast<int>(frames.size()); }
  // architecture descriptor; hashed into the checkpoint fingerprint
  std::string describe() const;
};

struct PolicyOutput {
  Eigen::VectorXd action_mean;      // m
  double value = 0.0;
  Eigen::MatrixXd frame_features;   // n x feature_dim
  std::optional<Eigen::MatrixXd> proposals;  // A, n x m (FM-MA variants)
  std::optional<Eigen::MatrixXd> weights;    // softmaxed W, n x m
};

// Pre-assembled minibatch: per candidate frame the row-concatenated
// transformed clouds, shared segment bounds, and the proprio rows.
struct BatchInput {
  std::vector<nn::Mat> frame_clouds;  // n entries, (sum N_i) x 10
  std::vector<int> bounds;            // B + 1
  nn::Mat proprio;                    // B x P
  int batch = 0;
};

// Node handles of a batched forward pass.
struct ForwardNodes {
  nn::NodeId mean = -1;       // B x m
  nn::NodeId value = -1;      // B x 1
  nn::NodeId features = -1;   // B x (n*F)
  nn::NodeId proposals = -1;  // B x (n*m), FM-MA variants only
  nn::NodeId weights = -1;    // B x (n*m), softmaxed, FM-MA variants only
};

class Policy {
 public:
  explicit Policy(ArchConfig cfg);

  BatchInput assemble(const std::vector<const env::Observation*>& batch) const;
  ForwardNodes build(nn::Graph& g, const BatchInput& in) const;

  PolicyOutput evaluate(const env::Observation& obs) const;

  const ArchConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return ps_; }
  const nn::ParamStore& params() const { return ps_; }
  const nn::GaussianHead& head() const { return head_; }
  int feature_dim() const { return cfg_.pointnet.feature_dim(); }

  uint64_t fingerprint() const;
  // parameter indices belonging to the value head (separate learning rate)
  std::vector<int> value_param_indices() const;

 private:
  nn::NodeId build_tg_sample(nn::Graph& g, const std::vector<nn::NodeId>& feats,
                             nn::NodeId proprio, int sample) const;
  nn::NodeId build_se3_positions(nn::Graph& g, nn::NodeId aux_out,
                                 nn::NodeId positions,
                                 const std::vector<int>& bounds) const;

  ArchConfig cfg_;
  nn::ParamStore ps_;
  std::vector<nn::PointNet> backbones_;
  std::vector<nn::Mlp> expert_mlps_;  // FM-MA: one per frame; else single head
  nn::Mlp weight_mlp_;                // FM-MA variants
  nn::Mlp value_mlp_;
  nn::GaussianHead head_;
  // FM-TG
  nn::Transformer transformer_;
  nn::Linear token_proj_;
  std::vector<int> frame_embeds_;
  std::vector<int> query_tokens_;
  std::vector<nn::Mlp> group_mlps_;
  // learned SE(3)
  nn::PointNet aux_backbone_;
  nn::Mlp aux_head_;
};

// Builds the config from harness-facing strings. `arch` accepts
// "single:<frame>", "fm-fc", "fm-ma", "fm-ma-mw", "fm-tg", "learned-se3";
// `frames` uses the frame list for the non-single architectures.
ArchConfig make_arch_config(const std::string& arch,
                            const std::vector<std::string>& frames,
                            const env::Env& env_meta, const std::string& preset,
                            uint64_t init_seed);

std::unique_ptr<Policy> make_policy(const std::string& arch,
                                    const std::vector<std::string>& frames,
                                    const env::Env& env_meta,
                                    const std::string& preset,
                                    uint64_t init_seed);

// Per-group averages of logged softmaxed weights (FM-MA tracing).
// Returns rows (step, frame_index, group_index, mean_weight).
struct WeightTraceRow {
  int step;
  int frame;
  int group;
  double mean_weight;
};
std::vector<WeightTraceRow> weight_trace_rows(
    const std::vector<Eigen::MatrixXd>& per_step_weights,
    const std::vector<std::pair<int, int>>& groups);

}  // namespace fm::policy
