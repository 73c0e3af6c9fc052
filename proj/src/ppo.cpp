#include <cmath>
#include <numeric>
#include <stdexcept>

#include "framemine/parallel.hpp"
#include "framemine/rl.hpp"

namespace fm::rl {

void AdamOptimizer::step(nn::ParamStore& ps, const nn::GradBuffer& grads) {
  ++t_;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (const int i : indices_) {
    nn::Param& p = ps.at(i);
    const nn::Mat& g = grads.at(i);
    p.adam_m = beta1 * p.adam_m + (1.0 - beta1) * g;
    p.adam_v = beta2 * p.adam_v + (1.0 - beta2) * g.cwiseProduct(g);
    const nn::Mat m_hat = p.adam_m / bc1;
    const nn::Mat v_hat = p.adam_v / bc2;
    p.value.array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps);
  }
}

namespace {

struct FlatBatch {
  std::vector<const Step*> steps;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

FlatBatch flatten(const TrajectoryBatch& batch, const PpoConfig& cfg) {
  FlatBatch fb;
  compute_gae(batch, cfg.gamma, cfg.gae_lambda, fb.advantages, fb.returns);
  fb.steps.reserve(batch.total_steps());
  for (const auto& ep : batch.episodes) {
    for (const auto& s : ep.steps) fb.steps.push_back(&s);
  }
  if (cfg.normalize_advantages) {
    const double mu = fb.advantages.mean();
    const double sigma = std::sqrt(
        (fb.advantages.array() - mu).square().mean());
    fb.advantages =
        (fb.advantages.array() - mu) / std::max(sigma, 1e-8);
  }
  return fb;
}

struct ChunkResult {
  double kl_sum = 0.0;
  double pg_sum = 0.0;
  double v_sum = 0.0;
  int clip_count = 0;
  bool nan = false;
};

}  // namespace

UpdateStats ppo_update(policy::Policy& pol, const TrajectoryBatch& batch,
                       const PpoConfig& cfg, AdamOptimizer& policy_opt,
                       AdamOptimizer& value_opt, Rng& shuffle_rng) {
  cfg.validate();
  const FlatBatch fb = flatten(batch, cfg);
  const int total = static_cast<int>(fb.steps.size());
  if (total < cfg.minibatch) {
    throw std::invalid_argument("ppo_update: batch smaller than one minibatch");
  }

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);

  UpdateStats stats;
  double entropy = nn::gaussian_entropy_value(pol.params(), pol.head());
  stats.entropy = entropy;

  nn::GradBuffer total_grads(pol.params());
  const int threads = std::max(1, cfg.update_threads);
  std::vector<nn::GradBuffer> chunk_grads;
  chunk_grads.reserve(threads);
  for (int t = 0; t < threads; ++t) chunk_grads.emplace_back(pol.params());

  double pg_loss_accum = 0.0, v_loss_accum = 0.0, kl_accum = 0.0;
  double clip_frac_accum = 0.0;

  for (int epoch = 0; epoch < cfg.epochs && !stats.kl_stopped; ++epoch) {
    // Fisher-Yates with the caller's stream
    for (int i = total - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);
    }
    for (int start = 0; start < total && !stats.kl_stopped;
         start += cfg.minibatch) {
      const int mb = std::min(cfg.minibatch, total - start);
      std::vector<ChunkResult> results(threads);
      for (auto& gbuf : chunk_grads) gbuf.zero();

      parallel_chunks(mb, threads, [&](int chunk, int begin, int end) {
        nn::Graph g(&pol.params(), &chunk_grads[chunk]);
        ChunkResult& res = results[chunk];
        const int len = end - begin;
        std::vector<const env::Observation*> obs(len);
        nn::Mat actions(len, pol.config().action_dim);
        nn::Mat logp_old(len, 1), adv(len, 1), ret(len, 1);
        for (int i = 0; i < len; ++i) {
          const int idx = order[start + begin + i];
          obs[i] = &fb.steps[idx]->obs;
          actions.row(i) = fb.steps[idx]->action.transpose();
          logp_old(i, 0) = fb.steps[idx]->log_prob;
          adv(i, 0) = fb.advantages(idx);
          ret(i, 0) = fb.returns(idx);
        }
        const policy::BatchInput bi = pol.assemble(obs);
        const policy::ForwardNodes fn = pol.build(g, bi);
        const nn::NodeId logp_new =
            nn::gaussian_log_prob(g, pol.head(), fn.mean, actions);
        const nn::NodeId log_ratio = g.sub(logp_new, g.input(logp_old));
        const nn::NodeId ratio = g.exp(log_ratio);
        const nn::NodeId adv_in = g.input(adv);
        const nn::NodeId surr1 = g.mul(ratio, adv_in);
        const nn::NodeId surr2 =
            g.mul(g.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip), adv_in);
        const nn::NodeId pg_sum = g.scale(g.sum(g.min(surr1, surr2)), -1.0);
        const nn::NodeId v_sum =
            g.sum(g.square(g.sub(fn.value, g.input(ret))));
        nn::NodeId loss =
            g.scale(g.add(pg_sum, v_sum), 1.0 / static_cast<double>(mb));
        if (cfg.entropy_term_enabled) {
          const nn::NodeId ent = nn::gaussian_entropy(g, pol.head());
          loss = g.add(loss, g.scale(ent, -cfg.entropy_coef *
                                              static_cast<double>(len) / mb));
        }
        const double loss_v = g.scalar(loss);
        if (!std::isfinite(loss_v)) {
          res.nan = true;
          return;
        }
        res.pg_sum = g.scalar(pg_sum);
        res.v_sum = g.scalar(v_sum);
        res.kl_sum = -g.value(log_ratio).sum();  // mean(logp_old - logp_new)
        for (int i = 0; i < len; ++i) {
          if (std::abs(g.value(ratio)(i, 0) - 1.0) > cfg.clip) ++res.clip_count;
        }
        g.backward(loss);
      });

      ChunkResult agg;
      for (const auto& r : results) {
        agg.kl_sum += r.kl_sum;
        agg.pg_sum += r.pg_sum;
        agg.v_sum += r.v_sum;
        agg.clip_count += r.clip_count;
        agg.nan = agg.nan || r.nan;
      }
      if (agg.nan) {
        stats.nan_aborted = true;
        stats.diagnostic = "non-finite loss in minibatch; update aborted";
        return stats;
      }
      const double kl = agg.kl_sum / mb;
      if (kl > cfg.max_kl) {
        stats.kl_stopped = true;  // this minibatch is not applied
        stats.kl = kl;
        break;
      }

      total_grads.zero();
      for (const auto& gbuf : chunk_grads) total_grads.add(gbuf);
      const double norm = total_grads.global_norm();
      if (norm > cfg.grad_clip && norm > 0.0) {
        total_grads.scale(cfg.grad_clip / norm);
      }
      policy_opt.step(pol.params(), total_grads);
      value_opt.step(pol.params(), total_grads);

      pg_loss_accum += agg.pg_sum / mb;
      v_loss_accum += agg.v_sum / mb;
      kl_accum = kl;
      clip_frac_accum += static_cast<double>(agg.clip_count) / mb;
      ++stats.minibatches_done;
    }
  }

  if (stats.minibatches_done > 0) {
    stats.policy_loss = pg_loss_accum / stats.minibatches_done;
    stats.value_loss = v_loss_accum / stats.minibatches_done;
    stats.clip_fraction = clip_frac_accum / stats.minibatches_done;
    if (!stats.kl_stopped) stats.kl = kl_accum;
  }
  return stats;
}

}  // namespace fm::rl
