#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "framemine/io.hpp"

namespace fm::io {

using nlohmann::json;

namespace {

void write_f32(std::ostream& os, const double* data, size_t n) {
  std::vector<float> buf(n);
  for (size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(data[i]);
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(n * sizeof(float)));
}

std::vector<float> read_f32(std::istream& is, size_t n) {
  std::vector<float> buf(n);
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (!is) throw std::runtime_error("record: truncated binary stream");
  return buf;
}

size_t step_record_floats(int n, int c, int f, int p, int m) {
  return static_cast<size_t>(n) * (3 + 3 + c) + static_cast<size_t>(f) * 7 +
         p + m;
}

void write_step(std::ostream& os, const env::Observation& obs,
                const Eigen::VectorXd* action) {
  const auto& cl = obs.cloud;
  // Eigen storage is column-major; records are row-major
  std::vector<double> tmp;
  tmp.reserve(cl.size() * 3);
  for (int i = 0; i < cl.size(); ++i) {
    tmp.push_back(cl.positions(i, 0));
    tmp.push_back(cl.positions(i, 1));
    tmp.push_back(cl.positions(i, 2));
  }
  write_f32(os, tmp.data(), tmp.size());
  tmp.clear();
  for (int i = 0; i < cl.size(); ++i) {
    tmp.push_back(cl.colors(i, 0));
    tmp.push_back(cl.colors(i, 1));
    tmp.push_back(cl.colors(i, 2));
  }
  write_f32(os, tmp.data(), tmp.size());
  tmp.clear();
  for (int i = 0; i < cl.size(); ++i) {
    for (int c = 0; c < geom::kNumSegCategories; ++c) {
      tmp.push_back(cl.seg(i, c));
    }
  }
  write_f32(os, tmp.data(), tmp.size());
  tmp.clear();
  for (int f = 0; f < obs.frames.size(); ++f) {
    const geom::Pose& pose = obs.frames.pose(f);
    tmp.push_back(pose.rotation.w());
    tmp.push_back(pose.rotation.x());
    tmp.push_back(pose.rotation.y());
    tmp.push_back(pose.rotation.z());
    tmp.push_back(pose.translation.x());
    tmp.push_back(pose.translation.y());
    tmp.push_back(pose.translation.z());
  }
  write_f32(os, tmp.data(), tmp.size());
  write_f32(os, obs.proprio.data(), obs.proprio.size());
  if (action != nullptr) write_f32(os, action->data(), action->size());
}

}  // namespace

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void write_trajectory_dump(const std::filesystem::path& stem,
                           const std::vector<EpisodeRecord>& episodes) {
  std::ofstream hdr(stem.string() + ".jsonl");
  std::ofstream bin(stem.string() + ".bin", std::ios::binary);
  if (!hdr || !bin) {
    throw std::runtime_error("write_trajectory_dump: cannot open output");
  }
  uint64_t offset = 0;
  for (size_t e = 0; e < episodes.size(); ++e) {
    const auto& ep = episodes[e];
    if (ep.observations.empty()) {
      throw std::invalid_argument("write_trajectory_dump: empty episode");
    }
    const int n = ep.observations.front().cloud.size();
    const int p = static_cast<int>(ep.observations.front().proprio.size());
    const int f = ep.observations.front().frames.size();
    const int m = ep.actions.empty()
                      ? 0
                      : static_cast<int>(ep.actions.front().size());
    if (!ep.actions.empty() && ep.actions.size() != ep.observations.size()) {
      throw std::invalid_argument(
          "write_trajectory_dump: action/observation count mismatch");
    }
    json frames = json::array();
    for (int i = 0; i < f; ++i) {
      frames.push_back(ep.observations.front().frames.id(i).to_string());
    }
    const size_t bytes_per_step =
        step_record_floats(n, geom::kNumSegCategories, f, p, m) * sizeof(float);
    json h = {
        {"episode", e},
        {"seed", ep.seed},
        {"success", ep.success},
        {"steps", ep.observations.size()},
        {"points", n},
        {"categories", geom::kNumSegCategories},
        {"proprio_dim", p},
        {"action_dim", m},
        {"frame_ids", frames},
        {"bin_offset", offset},
        {"bytes_per_step", bytes_per_step},
    };
    hdr << h.dump() << "\n";
    for (size_t t = 0; t < ep.observations.size(); ++t) {
      const auto& obs = ep.observations[t];
      if (obs.cloud.size() != n) {
        throw std::invalid_argument(
            "write_trajectory_dump: point count varies within episode");
      }
      write_step(bin, obs, ep.actions.empty() ? nullptr : &ep.actions[t]);
    }
    offset += bytes_per_step * ep.observations.size();
  }
}

std::vector<EpisodeRecord> read_trajectory_dump(
    const std::filesystem::path& stem) {
  std::ifstream hdr(stem.string() + ".jsonl");
  std::ifstream bin(stem.string() + ".bin", std::ios::binary);
  if (!hdr || !bin) {
    throw std::runtime_error("read_trajectory_dump: cannot open input");
  }
  std::vector<EpisodeRecord> out;
  std::string line;
  while (std::getline(hdr, line)) {
    if (line.empty()) continue;
    const json h = json::parse(line);
    EpisodeRecord ep;
    ep.seed = h.at("seed").get<uint64_t>();
    ep.success = h.at("success").get<bool>();
    const int steps = h.at("steps").get<int>();
    const int n = h.at("points").get<int>();
    const int c = h.at("categories").get<int>();
    const int p = h.at("proprio_dim").get<int>();
    const int m = h.at("action_dim").get<int>();
    std::vector<std::string> frame_ids =
        h.at("frame_ids").get<std::vector<std::string>>();
    const int f = static_cast<int>(frame_ids.size());
    if (c != geom::kNumSegCategories) {
      throw std::runtime_error("read_trajectory_dump: category mismatch");
    }
    bin.seekg(static_cast<std::streamoff>(h.at("bin_offset").get<uint64_t>()));
    for (int t = 0; t < steps; ++t) {
      const auto buf = read_f32(bin, step_record_floats(n, c, f, p, m));
      size_t k = 0;
      Eigen::Matrix<double, Eigen::Dynamic, 3> pos(n, 3), col(n, 3);
      Eigen::MatrixXd seg(n, c);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) pos(i, j) = buf[k++];
      }
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) col(i, j) = buf[k++];
      }
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < c; ++j) seg(i, j) = buf[k++];
      }
      std::vector<std::pair<geom::FrameId, geom::Pose>> frames;
      for (int i = 0; i < f; ++i) {
        const double qw = buf[k++], qx = buf[k++], qy = buf[k++], qz = buf[k++];
        const double tx = buf[k++], ty = buf[k++], tz = buf[k++];
        geom::Quat q(qw, qx, qy, qz);
        q.normalize();
        frames.emplace_back(geom::FrameId::parse(frame_ids[i]),
                            geom::Pose(q, geom::Vec3(tx, ty, tz)));
      }
      env::Observation obs;
      obs.cloud = geom::PointCloud(std::move(pos), std::move(col), std::move(seg));
      obs.proprio.resize(p);
      for (int i = 0; i < p; ++i) obs.proprio(i) = buf[k++];
      obs.frames = geom::FrameSet(std::move(frames));
      ep.observations.push_back(std::move(obs));
      if (m > 0) {
        Eigen::VectorXd a(m);
        for (int i = 0; i < m; ++i) a(i) = buf[k++];
        ep.actions.push_back(std::move(a));
      }
    }
    out.push_back(std::move(ep));
  }
  return out;
}

void save_demo_set(const std::filesystem::path& dir, const il::DemoSet& demos) {
  std::filesystem::create_directories(dir);
  json manifest = {
      {"task", env::task_name(demos.env_cfg.task)},
      {"points_per_cloud", demos.env_cfg.points_per_cloud},
      {"max_steps", demos.env_cfg.max_steps},
      {"hold_steps", demos.env_cfg.hold_steps},
      {"rng_seed", demos.env_cfg.rng_seed},
      {"count", demos.episodes.size()},
  };
  std::vector<EpisodeRecord> records;
  json eps = json::array();
  for (size_t i = 0; i < demos.episodes.size(); ++i) {
    const auto& d = demos.episodes[i];
    char name[32];
    std::snprintf(name, sizeof(name), "ep_%05zu", i);
    eps.push_back({{"seed", d.seed},
                   {"steps", d.actions.size()},
                   {"file", std::string(name)}});
    EpisodeRecord r;
    r.seed = d.seed;
    r.success = d.success;
    r.observations = d.observations;
    r.actions = d.actions;
    write_trajectory_dump(dir / name, {r});
  }
  manifest["episodes"] = eps;
  std::ofstream mf(dir / "manifest.json");
  mf << manifest.dump(2) << "\n";
}

il::DemoSet load_demo_set(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("load_demo_set: missing manifest");
  json manifest;
  mf >> manifest;
  il::DemoSet set;
  set.env_cfg = env::EnvConfig::defaults(
      env::parse_task(manifest.at("task").get<std::string>()));
  set.env_cfg.points_per_cloud = manifest.at("points_per_cloud").get<int>();
  set.env_cfg.max_steps = manifest.at("max_steps").get<int>();
  set.env_cfg.hold_steps = manifest.at("hold_steps").get<int>();
  set.env_cfg.rng_seed = manifest.at("rng_seed").get<uint64_t>();
  for (const auto& e : manifest.at("episodes")) {
    const auto records =
        read_trajectory_dump(dir / e.at("file").get<std::string>());
    if (records.size() != 1) {
      throw std::runtime_error("load_demo_set: malformed episode file");
    }
    il::DemoEpisode d;
    d.seed = records[0].seed;
    d.success = records[0].success;
    d.observations = records[0].observations;
    d.actions = records[0].actions;
    set.episodes.push_back(std::move(d));
  }
  return set;
}

namespace {
constexpr uint32_t kCheckpointMagic = 0x464D434Bu;  // "FMCK"
constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}
}  // namespace

void save_checkpoint(
    const std::filesystem::path& path, uint64_t fingerprint,
    const std::vector<std::pair<std::string, nn::Mat>>& arrays) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open file");
    write_pod(os, kCheckpointMagic);
    write_pod(os, kCheckpointVersion);
    write_pod(os, fingerprint);
    write_pod(os, static_cast<uint32_t>(arrays.size()));
    for (const auto& [name, mat] : arrays) {
      write_pod(os, static_cast<uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_pod(os, static_cast<uint32_t>(mat.rows()));
      write_pod(os, static_cast<uint32_t>(mat.cols()));
      os.write(reinterpret_cast<const char*>(mat.data()),
               static_cast<std::streamsize>(mat.size() * sizeof(double)));
    }
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::pair<std::string, nn::Mat>> load_checkpoint(
    const std::filesystem::path& path, uint64_t expect_fingerprint) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open file");
  if (read_pod<uint32_t>(is) != kCheckpointMagic) {
    throw std::runtime_error("load_checkpoint: bad magic");
  }
  if (read_pod<uint32_t>(is) != kCheckpointVersion) {
    throw std::runtime_error("load_checkpoint: unsupported version");
  }
  const uint64_t fp = read_pod<uint64_t>(is);
  if (fp != expect_fingerprint) {
    throw std::runtime_error(
        "load_checkpoint: architecture fingerprint mismatch");
  }
  const uint32_t count = read_pod<uint32_t>(is);
  std::vector<std::pair<std::string, nn::Mat>> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t len = read_pod<uint32_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    const uint32_t rows = read_pod<uint32_t>(is);
    const uint32_t cols = read_pod<uint32_t>(is);
    nn::Mat mat(rows, cols);
    is.read(reinterpret_cast<char*>(mat.data()),
            static_cast<std::streamsize>(mat.size() * sizeof(double)));
    if (!is) throw std::runtime_error("load_checkpoint: truncated file");
    out.emplace_back(std::move(name), std::move(mat));
  }
  return out;
}

bool checkpoint_exists(const std::filesystem::path& path) {
  return std::filesystem::exists(path);
}

}  // namespace fm::io
