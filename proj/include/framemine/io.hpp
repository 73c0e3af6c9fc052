#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "framemine/env.hpp"
#include "framemine/il.hpp"
#include "framemine/nn/graph.hpp"

namespace fm::io {

// Step record for trajectory dumps and demo episodes (little-endian f32):
//   positions N*3 | colors N*3 | seg N*C | frame poses F*7 (qw qx qy qz t)
//   | proprio P | action m
// Layout constants come from the episode header; see docs/formats.md.
struct EpisodeRecord {
  uint64_t seed = 0;
  bool success = false;
  std::vector<env::Observation> observations;
  std::vector<Eigen::VectorXd> actions;  // may be empty for pure cloud dumps
};

// Writes `<stem>.jsonl` (one header line per episode) plus `<stem>.bin`.
void write_trajectory_dump(const std::filesystem::path& stem,
                           const std::vector<EpisodeRecord>& episodes);
std::vector<EpisodeRecord> read_trajectory_dump(
    const std::filesystem::path& stem);

// DemoSet directory: manifest.json + ep_NNNNN.bin (same step layout).
void save_demo_set(const std::filesystem::path& dir, const il::DemoSet& demos);
il::DemoSet load_demo_set(const std::filesystem::path& dir);

// Versioned binary checkpoint: header (magic, version, architecture
// fingerprint), then named f64 arrays. Loading checks the fingerprint.
void save_checkpoint(
    const std::filesystem::path& path, uint64_t fingerprint,
    const std::vector<std::pair<std::string, nn::Mat>>& arrays);
std::vector<std::pair<std::string, nn::Mat>> load_checkpoint(
    const std::filesystem::path& path, uint64_t expect_fingerprint);
bool checkpoint_exists(const std::filesystem::path& path);

// deterministic float -> text (round-trips exactly; used by all CSV output)
std::string format_double(double v);

}  // namespace fm::io
