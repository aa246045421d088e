#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ggode/datagen.hpp"
#include "ggode/tensor.hpp"

namespace ggode {

// Binary container: 8-byte magic "GGODEBIN", little-endian u64 header
// length, UTF-8 JSON header, then raw little-endian float64 payload.
// The header's "kind" field distinguishes datasets, checkpoints and
// rollout exports; offsets are relative to the payload start.

struct Dataset {
    std::vector<TrajectoryRecord> records;
    NormStats stats;
};

void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

void write_env_catalog(const std::string& path, const std::vector<EnvironmentSpec>& envs);
std::vector<EnvironmentSpec> read_env_catalog(const std::string& path);

// Named-tensor container used for parameter checkpoints. `meta` is an
// arbitrary JSON object string stored alongside the tensors.
void write_tensors(const std::string& path, const std::vector<std::pair<std::string, Tensor>>& tensors,
                   const std::string& meta_json);
std::pair<std::vector<std::pair<std::string, Tensor>>, std::string> read_tensors(const std::string& path);

// Rollout export: decoded predictions for one trajectory.
struct RolloutExport {
    int env_id = 0;
    int traj = 0;
    int obs_len = 0;
    int N = 0, D = 0;
    std::vector<double> times;   // predicted timestamps (step offsets)
    std::vector<double> values;  // |times| x N x D
};
void write_rollout(const std::string& path, const RolloutExport& r);
RolloutExport read_rollout(const std::string& path);

// FNV-1a over a file's bytes; used to detect dataset/split mismatches.
std::uint64_t file_hash(const std::string& path);

}  // namespace ggode
