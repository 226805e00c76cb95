#pragma once

// Checkpoint file: a short text manifest followed by a raw payload.
//
//   syncmatch-checkpoint
//   version 1
//   config {...single-line JSON...}
//   array <name> <d0>x<d1>x... <byte offset> <element count>
//   ...
//   payload <byte count>
//   <little-endian float64 values, arrays back to back>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "syncmatch/ndgrad.hpp"

namespace syncmatch {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointArray {
  std::string name;
  ndgrad::Shape shape;
  std::vector<double> values;

  bool operator==(const CheckpointArray&) const = default;
};

struct Checkpoint {
  int version = kCheckpointVersion;
  nlohmann::json config = nlohmann::json::object();
  std::vector<CheckpointArray> arrays;

  const CheckpointArray* find(const std::string& name) const;
};

Checkpoint make_checkpoint(nlohmann::json config, std::span<const ndgrad::Parameter* const> params);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies stored arrays into the parameters by name. Missing arrays and
/// shape differences are refused.
void restore_parameters(const Checkpoint& ckpt, std::span<ndgrad::Parameter* const> params);

/// Refuses (CheckpointError) unless ckpt.config[key] equals `expected`; the
/// message carries both configurations.
void require_config(const Checkpoint& ckpt, const std::string& key, const nlohmann::json& expected);

}  // namespace syncmatch
