#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

#include "framemine/harness.hpp"
#include "framemine/io.hpp"
#include "framemine/parallel.hpp"

namespace fm::harness {

using nlohmann::json;

namespace {

constexpr uint64_t kEvalSeedTag = 0xE7A1ull;
constexpr uint64_t kShuffleSeedTag = 0x5AFFull;
const char* kBuildVersion = "framemine-0.1.0";

std::vector<uint64_t> to_u64(const json& arr) {
  std::vector<uint64_t> out;
  for (const auto& v : arr) out.push_back(v.get<uint64_t>());
  return out;
}

}  // namespace

env::EnvConfig ExperimentConfig::env_config() const {
  env::EnvConfig e = env::EnvConfig::defaults(task);
  e.points_per_cloud =
      points_per_cloud > 0 ? points_per_cloud : (preset == "paper" ? 512 : 64);
  return e;
}

rl::PpoConfig ExperimentConfig::ppo_config() const {
  rl::PpoConfig p =
      preset == "paper" ? rl::PpoConfig::paper() : rl::PpoConfig::desk();
  if (arch == "fm-tg") p.policy_lr = 1e-4;
  p.update_threads = std::min(4, hardware_threads());
  return p;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be >= 1");
  if (preset != "paper" && preset != "desk") {
    throw std::invalid_argument("config: preset must be paper or desk");
  }
  if (eval_episodes < 1) {
    throw std::invalid_argument("config: eval_episodes must be >= 1");
  }
  if (arch.rfind("single", 0) != 0 && arch != "learned-se3" && frames.empty()) {
    throw std::invalid_argument("config: frame list must be non-empty");
  }
  env_config().validate();
}

std::string ExperimentConfig::to_json() const {
  json j = {
      {"task", env::task_name(task)},
      {"arch", arch},
      {"frames", frames},
      {"seeds", seeds},
      {"preset", preset},
      {"total_env_steps", total_env_steps},
      {"eval_episodes", eval_episodes},
      {"curve_eval_episodes", curve_eval_episodes},
      {"eval_every_updates", eval_every_updates},
      {"checkpoint_every_updates", checkpoint_every_updates},
      {"remove_robot_points", remove_robot_points},
      {"points_per_cloud", points_per_cloud},
      {"out_dir", out_dir},
      {"build", kBuildVersion},
  };
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_file(
    const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path.string());
  json j;
  is >> j;
  ExperimentConfig c;
  if (j.contains("task")) c.task = env::parse_task(j["task"].get<std::string>());
  if (j.contains("arch")) c.arch = j["arch"].get<std::string>();
  if (j.contains("frames"))
    c.frames = j["frames"].get<std::vector<std::string>>();
  if (j.contains("seeds")) c.seeds = to_u64(j["seeds"]);
  if (j.contains("preset")) c.preset = j["preset"].get<std::string>();
  if (j.contains("total_env_steps"))
    c.total_env_steps = j["total_env_steps"].get<int64_t>();
  if (j.contains("eval_episodes"))
    c.eval_episodes = j["eval_episodes"].get<int>();
  if (j.contains("curve_eval_episodes"))
    c.curve_eval_episodes = j["curve_eval_episodes"].get<int>();
  if (j.contains("eval_every_updates"))
    c.eval_every_updates = j["eval_every_updates"].get<int>();
  if (j.contains("checkpoint_every_updates"))
    c.checkpoint_every_updates = j["checkpoint_every_updates"].get<int>();
  if (j.contains("remove_robot_points"))
    c.remove_robot_points = j["remove_robot_points"].get<bool>();
  if (j.contains("points_per_cloud"))
    c.points_per_cloud = j["points_per_cloud"].get<int>();
  if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
  return c;
}

EvalResult evaluate(const policy::Policy& pol, const env::EnvConfig& env_cfg,
                    int episodes, uint64_t eval_seed, bool remove_robot_points,
                    int workers) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes >= 1");
  std::vector<double> success(episodes, 0.0), ret(episodes, 0.0);
  parallel_chunks(episodes, std::max(1, workers), [&](int, int begin, int end) {
    auto e = env::make_env(env_cfg);
    for (int i = begin; i < end; ++i) {
      env::Observation obs = e->reset(Rng::mix(eval_seed, i));
      if (remove_robot_points) {
        obs.cloud =
            geom::remove_points_by_label(obs.cloud, geom::SegLabel::Robot);
      }
      while (true) {
        const Eigen::VectorXd mean = pol.evaluate(obs).action_mean;
        env::Transition tr = e->step(mean);
        ret[i] += tr.reward;
        if (tr.done) {
          success[i] = tr.success ? 1.0 : 0.0;
          break;
        }
        obs = std::move(tr.obs);
        if (remove_robot_points) {
          obs.cloud =
              geom::remove_points_by_label(obs.cloud, geom::SegLabel::Robot);
        }
      }
    }
  });
  EvalResult r;
  r.episodes = episodes;
  r.success_rate =
      std::accumulate(success.begin(), success.end(), 0.0) / episodes;
  r.mean_return = std::accumulate(ret.begin(), ret.end(), 0.0) / episodes;
  return r;
}

void save_policy_checkpoint(
    const std::filesystem::path& path, const policy::Policy& pol,
    const std::vector<std::pair<std::string, nn::Mat>>& extras) {
  std::vector<std::pair<std::string, nn::Mat>> arrays;
  const nn::ParamStore& ps = pol.params();
  for (int i = 0; i < ps.size(); ++i) {
    arrays.emplace_back(ps.at(i).name, ps.at(i).value);
    arrays.emplace_back(ps.at(i).name + "#adam_m", ps.at(i).adam_m);
    arrays.emplace_back(ps.at(i).name + "#adam_v", ps.at(i).adam_v);
  }
  for (const auto& e : extras) arrays.push_back(e);
  io::save_checkpoint(path, pol.fingerprint(), arrays);
}

void load_policy_checkpoint(
    const std::filesystem::path& path, policy::Policy& pol,
    std::vector<std::pair<std::string, nn::Mat>>* extras) {
  const auto arrays = io::load_checkpoint(path, pol.fingerprint());
  nn::ParamStore& ps = pol.params();
  if (extras) extras->clear();
  for (const auto& [name, mat] : arrays) {
    const auto hash_pos = name.find('#');
    if (hash_pos == std::string::npos) {
      const int idx = ps.index_of(name);
      if (idx < 0) {
        if (extras) extras->emplace_back(name, mat);
        continue;
      }
      if (ps.at(idx).value.rows() != mat.rows() ||
          ps.at(idx).value.cols() != mat.cols()) {
        throw std::runtime_error("checkpoint: shape mismatch for " + name);
      }
      ps.at(idx).value = mat;
    } else {
      const std::string base = name.substr(0, hash_pos);
      const std::string kind = name.substr(hash_pos + 1);
      const int idx = ps.index_of(base);
      if (idx < 0) {
        if (extras) extras->emplace_back(name, mat);
        continue;
      }
      if (kind == "adam_m") {
        ps.at(idx).adam_m = mat;
      } else if (kind == "adam_v") {
        ps.at(idx).adam_v = mat;
      } else if (extras) {
        extras->emplace_back(name, mat);
      }
    }
  }
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

struct TrainerState {
  int update = 0;
  int64_t env_steps = 0;
  uint64_t episode_start = 0;
  Rng shuffle_rng;
};

nn::Mat rng_to_mat(const Rng& rng) {
  const auto s = rng.serialize();
  nn::Mat m(1, 6);
  for (int i = 0; i < 6; ++i) {
    m(0, i) = std::bit_cast<double>(s[i]);
  }
  return m;
}

Rng mat_to_rng(const nn::Mat& m) {
  std::array<uint64_t, 6> s{};
  for (int i = 0; i < 6; ++i) s[i] = std::bit_cast<uint64_t>(m(0, i));
  return Rng::deserialize(s);
}

SeedReport train_seed(const ExperimentConfig& config, uint64_t seed,
                      const std::filesystem::path& seed_dir) {
  std::filesystem::create_directories(seed_dir);
  const env::EnvConfig env_cfg = config.env_config();
  const auto meta = env::make_env(env_cfg);
  auto pol = policy::make_policy(config.arch, config.frames, *meta,
                                 config.preset, seed);
  rl::PpoConfig ppo = config.ppo_config();
  ppo.validate();

  const std::vector<int> value_idx = pol->value_param_indices();
  std::vector<int> policy_idx;
  for (int i = 0; i < pol->params().size(); ++i) {
    if (std::find(value_idx.begin(), value_idx.end(), i) == value_idx.end()) {
      policy_idx.push_back(i);
    }
  }
  rl::AdamOptimizer policy_opt(policy_idx, ppo.policy_lr);
  rl::AdamOptimizer value_opt(value_idx, ppo.value_lr);
  rl::RewardNormalizer rnorm(ppo.gamma);

  TrainerState st;
  st.shuffle_rng = Rng(Rng::mix(seed, kShuffleSeedTag));

  const std::filesystem::path ckpt = seed_dir / "last.ckpt";
  const std::filesystem::path metrics_path = seed_dir / "metrics.csv";
  const std::filesystem::path eval_path = seed_dir / "eval.csv";
  const std::filesystem::path timing_path = seed_dir / "timing.log";

  SeedReport report;
  report.seed = seed;

  bool resumed = false;
  if (io::checkpoint_exists(ckpt)) {
    std::vector<std::pair<std::string, nn::Mat>> extras;
    load_policy_checkpoint(ckpt, *pol, &extras);
    for (const auto& [name, mat] : extras) {
      if (name == "trainer#progress") {
        st.update = static_cast<int>(mat(0, 0));
        st.env_steps = static_cast<int64_t>(mat(0, 1));
        st.episode_start = static_cast<uint64_t>(mat(0, 2));
        policy_opt.set_steps_taken(static_cast<int64_t>(mat(0, 3)));
        value_opt.set_steps_taken(static_cast<int64_t>(mat(0, 4)));
      } else if (name == "trainer#reward_norm") {
        std::array<double, 5> s{};
        for (int i = 0; i < 5; ++i) s[i] = mat(0, i);
        rnorm = rl::RewardNormalizer::deserialize(s);
      } else if (name == "trainer#shuffle_rng") {
        st.shuffle_rng = mat_to_rng(mat);
      }
    }
    resumed = st.update > 0;
  }

  std::ofstream metrics(metrics_path, resumed ? std::ios::app : std::ios::out);
  std::ofstream evalcsv(eval_path, resumed ? std::ios::app : std::ios::out);
  std::ofstream timing(timing_path, std::ios::app);
  if (!resumed) {
    metrics << "update,env_steps,episodes,rollout_return,rollout_success,"
               "policy_loss,value_loss,kl,clip_fraction,minibatches,"
               "kl_stopped\n";
    evalcsv << "update,env_steps,episodes,success_rate,mean_return\n";
  }

  const auto save_state = [&]() {
    nn::Mat progress(1, 5);
    progress << static_cast<double>(st.update),
        static_cast<double>(st.env_steps),
        static_cast<double>(st.episode_start),
        static_cast<double>(policy_opt.steps_taken()),
        static_cast<double>(value_opt.steps_taken());
    const auto rn = rnorm.serialize();
    nn::Mat rn_mat(1, 5);
    for (int i = 0; i < 5; ++i) rn_mat(0, i) = rn[i];
    save_policy_checkpoint(ckpt, *pol,
                           {{"trainer#progress", progress},
                            {"trainer#reward_norm", rn_mat},
                            {"trainer#shuffle_rng", rng_to_mat(st.shuffle_rng)}});
  };

  const auto run_eval = [&](int episodes) {
    return evaluate(*pol, env_cfg, episodes, Rng::mix(seed, kEvalSeedTag),
                    config.remove_robot_points, ppo.workers);
  };

  while (st.env_steps < config.total_env_steps) {
    const auto t0 = std::chrono::steady_clock::now();
    rl::RolloutOptions opt;
    opt.n_samples = ppo.samples_per_update;
    opt.workers = ppo.workers;
    opt.run_seed = seed;
    opt.episode_start = st.episode_start;
    opt.remove_robot_points = config.remove_robot_points;
    rl::TrajectoryBatch batch = rl::collect_rollouts(
        *pol, env_cfg, opt, ppo.normalize_rewards ? &rnorm : nullptr);
    st.episode_start += batch.episodes.size();
    st.env_steps += batch.total_steps();

    double ret_sum = 0.0, succ_sum = 0.0;
    for (const auto& ep : batch.episodes) {
      ret_sum += ep.raw_return;
      succ_sum += ep.success ? 1.0 : 0.0;
    }
    const double n_eps = static_cast<double>(batch.episodes.size());

    const rl::UpdateStats stats =
        rl::ppo_update(*pol, batch, ppo, policy_opt, value_opt, st.shuffle_rng);
    if (stats.nan_aborted) {
      timing << "update " << st.update << ": " << stats.diagnostic << "\n";
    }
    ++st.update;

    metrics << st.update << "," << st.env_steps << ","
            << batch.episodes.size() << "," << io::format_double(ret_sum / n_eps)
            << "," << io::format_double(succ_sum / n_eps) << ","
            << io::format_double(stats.policy_loss) << ","
            << io::format_double(stats.value_loss) << ","
            << io::format_double(stats.kl) << ","
            << io::format_double(stats.clip_fraction) << ","
            << stats.minibatches_done << "," << (stats.kl_stopped ? 1 : 0)
            << "\n";
    metrics.flush();

    const bool last = st.env_steps >= config.total_env_steps;
    if (!last && config.eval_every_updates > 0 &&
        st.update % config.eval_every_updates == 0) {
      const EvalResult ev = run_eval(config.curve_eval_episodes);
      evalcsv << st.update << "," << st.env_steps << "," << ev.episodes << ","
              << io::format_double(ev.success_rate) << ","
              << io::format_double(ev.mean_return) << "\n";
      evalcsv.flush();
      report.curve.push_back(
          {st.update, st.env_steps, ev.success_rate, ev.mean_return});
    }
    if (config.checkpoint_every_updates > 0 &&
        st.update % config.checkpoint_every_updates == 0) {
      save_state();
    }
    const auto t1 = std::chrono::steady_clock::now();
    timing << "update " << st.update << " wall_s "
           << std::chrono::duration<double>(t1 - t0).count() << "\n";
    timing.flush();
  }

  save_state();
  const EvalResult final_eval = run_eval(config.eval_episodes);
  evalcsv << st.update << "," << st.env_steps << "," << final_eval.episodes
          << "," << io::format_double(final_eval.success_rate) << ","
          << io::format_double(final_eval.mean_return) << "\n";
  report.curve.push_back({st.update, st.env_steps, final_eval.success_rate,
                          final_eval.mean_return});
  report.final_success = final_eval.success_rate;
  report.final_return = final_eval.mean_return;
  report.env_steps = st.env_steps;
  return report;
}

json report_to_json(const RunReport& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    json curve = json::array();
    for (const auto& c : s.curve) {
      curve.push_back({{"update", c.update},
                       {"env_steps", c.env_steps},
                       {"success_rate", c.success_rate},
                       {"mean_return", c.mean_return}});
    }
    seeds.push_back({{"seed", s.seed},
                     {"final_success", s.final_success},
                     {"final_return", s.final_return},
                     {"env_steps", s.env_steps},
                     {"curve", curve}});
  }
  return {{"config", json::parse(r.config.to_json())},
          {"seeds", seeds},
          {"mean_success", r.mean_success},
          {"std_success", r.std_success},
          {"median_success", r.median_success}};
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::filesystem::path out(config.out_dir.empty() ? "runs/experiment"
                                                         : config.out_dir);
  std::filesystem::create_directories(out);
  {
    std::ofstream cfg(out / "config.json");
    cfg << config.to_json() << "\n";
  }

  RunReport report;
  report.config = config;
  std::vector<double> finals;
  for (const uint64_t seed : config.seeds) {
    const std::filesystem::path seed_dir =
        out / ("seed_" + std::to_string(seed));
    report.seeds.push_back(train_seed(config, seed, seed_dir));
    finals.push_back(report.seeds.back().final_success);
  }
  const double mean =
      std::accumulate(finals.begin(), finals.end(), 0.0) / finals.size();
  double var = 0.0;
  for (const double f : finals) var += (f - mean) * (f - mean);
  report.mean_success = mean;
  report.std_success = std::sqrt(var / finals.size());
  report.median_success = median(finals);

  std::ofstream rep(out / "report.json");
  rep << report_to_json(report).dump(2) << "\n";
  return report;
}

CompareResult compare_frames(const ExperimentConfig& base,
                             const std::vector<CompareCondition>& conditions) {
  if (conditions.size() < 2) {
    throw std::invalid_argument("compare_frames: need at least two conditions");
  }
  CompareResult result;
  const std::filesystem::path out(base.out_dir.empty() ? "runs/compare"
                                                       : base.out_dir);
  std::filesystem::create_directories(out);

  for (const auto& cond : conditions) {
    ExperimentConfig cfg = base;
    cfg.arch = cond.arch;
    cfg.frames = cond.frames;
    cfg.remove_robot_points = cond.remove_robot_points;
    cfg.out_dir = (out / cond.label).string();
    try {
      result.runs.emplace_back(cond, run_experiment(cfg));
    } catch (const std::exception& e) {
      result.errors.push_back(cond.label + ": " + e.what());
    }
  }

  std::ofstream csv(out / "comparison.csv");
  csv << "condition,arch,frames,remove_robot_points,mean_success,std_success,"
         "median_success\n";
  json merged = json::array();
  for (const auto& [cond, rep] : result.runs) {
    std::string frames;
    for (const auto& f : cond.frames) frames += (frames.empty() ? "" : "+") + f;
    csv << cond.label << "," << cond.arch << "," << frames << ","
        << (cond.remove_robot_points ? 1 : 0) << ","
        << io::format_double(rep.mean_success) << ","
        << io::format_double(rep.std_success) << ","
        << io::format_double(rep.median_success) << "\n";
    merged.push_back({{"label", cond.label},
                      {"report", report_to_json(rep)}});
  }
  std::ofstream js(out / "comparison.json");
  json top = {{"runs", merged}, {"errors", result.errors}};
  js << top.dump(2) << "\n";

  // learning curves, long format
  std::ofstream curves(out / "curves.csv");
  curves << "condition,seed,update,env_steps,success_rate,mean_return\n";
  for (const auto& [cond, rep] : result.runs) {
    for (const auto& s : rep.seeds) {
      for (const auto& c : s.curve) {
        curves << cond.label << "," << s.seed << "," << c.update << ","
               << c.env_steps << "," << io::format_double(c.success_rate) << ","
               << io::format_double(c.mean_return) << "\n";
      }
    }
  }
  return result;
}

CompareResult diagnose_robot_removal(const ExperimentConfig& base) {
  std::vector<CompareCondition> conditions = {
      {"with-robot-points", base.arch, base.frames, false},
      {"without-robot-points", base.arch, base.frames, true},
  };
  return compare_frames(base, conditions);
}

BcReport run_bc_experiment(const BcExperimentConfig& cfg,
                           const il::DemoSet& demos) {
  if (demos.episodes.empty()) {
    throw std::invalid_argument("bc experiment: empty demo set");
  }
  const std::filesystem::path out(cfg.base.out_dir.empty()
                                      ? "runs/bc"
                                      : cfg.base.out_dir);
  std::filesystem::create_directories(out);

  // held-out split by episode
  const int holdout =
      std::max(1, static_cast<int>(std::floor(demos.episodes.size() *
                                              cfg.holdout_fraction)));
  il::DemoSet train_set, hold_set;
  train_set.env_cfg = demos.env_cfg;
  hold_set.env_cfg = demos.env_cfg;
  for (size_t i = 0; i < demos.episodes.size(); ++i) {
    if (static_cast<int>(i) < holdout) {
      hold_set.episodes.push_back(demos.episodes[i]);
    } else {
      train_set.episodes.push_back(demos.episodes[i]);
    }
  }
  std::vector<const env::Observation*> hold_obs;
  std::vector<const Eigen::VectorXd*> hold_acts;
  for (const auto& ep : hold_set.episodes) {
    for (size_t t = 0; t < ep.actions.size(); ++t) {
      hold_obs.push_back(&ep.observations[t]);
      hold_acts.push_back(&ep.actions[t]);
    }
  }

  const auto meta = env::make_env(demos.env_cfg);
  BcReport report;
  std::vector<double> finals;
  std::ofstream csv(out / "bc.csv");
  csv << "seed,final_success,final_train_loss\n";
  for (const uint64_t seed : cfg.base.seeds) {
    auto pol = policy::make_policy(cfg.base.arch, cfg.base.frames, *meta,
                                   cfg.base.preset, seed);
    il::BcConfig bc = cfg.bc;
    bc.shuffle_seed = Rng::mix(seed, 0xBC0Full);
    BcSeedReport sr;
    sr.seed = seed;
    // short held-out curve over the first epochs (trend diagnostics)
    const int probe_epochs = std::min(10, bc.epochs);
    il::BcConfig probe = bc;
    probe.epochs = 1;
    for (int e = 0; e < probe_epochs; ++e) {
      il::bc_train(*pol, train_set, probe);
      sr.holdout_curve.push_back(il::bc_loss(*pol, hold_obs, hold_acts));
    }
    if (bc.epochs > probe_epochs) {
      il::BcConfig rest = bc;
      rest.epochs = bc.epochs - probe_epochs;
      const il::BcResult r = il::bc_train(*pol, train_set, rest);
      sr.final_train_loss = r.epoch_loss.back();
    } else {
      sr.final_train_loss = sr.holdout_curve.back();
    }
    const EvalResult ev =
        evaluate(*pol, demos.env_cfg, cfg.base.eval_episodes,
                 Rng::mix(seed, kEvalSeedTag), false, 4);
    sr.final_success = ev.success_rate;
    finals.push_back(ev.success_rate);
    csv << seed << "," << io::format_double(sr.final_success) << ","
        << io::format_double(sr.final_train_loss) << "\n";
    save_policy_checkpoint(out / ("bc_seed_" + std::to_string(seed) + ".ckpt"),
                           *pol);
    report.seeds.push_back(std::move(sr));
  }
  const double mean =
      std::accumulate(finals.begin(), finals.end(), 0.0) / finals.size();
  double var = 0.0;
  for (const double f : finals) var += (f - mean) * (f - mean);
  report.mean_success = mean;
  report.std_success = std::sqrt(var / finals.size());
  report.median_success = median(finals);
  return report;
}

void trace_weights(const policy::Policy& pol, const env::EnvConfig& env_cfg,
                   int episodes, uint64_t seed,
                   const std::filesystem::path& out_dir) {
  if (pol.config().arch != policy::Arch::FmMa &&
      pol.config().arch != policy::Arch::FmMaMw) {
    throw std::invalid_argument("trace_weights: policy is not FM-MA");
  }
  std::filesystem::create_directories(out_dir);
  auto e = env::make_env(env_cfg);
  const auto groups = e->action_groups();

  std::ofstream csv(out_dir / "weights.csv");
  csv << "episode,step,frame,frame_id,group,mean_weight\n";
  std::ofstream jsonl(out_dir / "weights.jsonl");

  for (int epi = 0; epi < episodes; ++epi) {
    env::Observation obs = e->reset(Rng::mix(seed, epi));
    std::vector<Eigen::MatrixXd> per_step;
    while (true) {
      const policy::PolicyOutput out = pol.evaluate(obs);
      per_step.push_back(*out.weights);
      json row = {{"episode", epi},
                  {"step", per_step.size() - 1},
                  {"weights", json::array()}};
      for (int f = 0; f < out.weights->rows(); ++f) {
        json wrow = json::array();
        for (int j = 0; j < out.weights->cols(); ++j) {
          wrow.push_back((*out.weights)(f, j));
        }
        row["weights"].push_back(wrow);
      }
      jsonl << row.dump() << "\n";
      env::Transition tr = e->step(out.action_mean);
      if (tr.done) break;
      obs = std::move(tr.obs);
    }
    const auto rows = policy::weight_trace_rows(per_step, groups);
    for (const auto& r : rows) {
      csv << epi << "," << r.step << "," << r.frame << ","
          << pol.config().frames[r.frame].to_string() << "," << r.group << ","
          << io::format_double(r.mean_weight) << "\n";
    }
  }
}

}  // namespace fm::harness
