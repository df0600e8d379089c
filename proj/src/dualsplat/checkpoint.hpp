// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

// Binary training checkpoints. Everything a step depends on is stored, so a
// resumed run is bitwise identical to an uninterrupted one.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dualsplat/train.hpp"

namespace dualsplat {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainerState state;
  std::string config_text;  // effective config that produced the state
};

// Little-endian; starts with "DSCK" and a version word. Written to a
// temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws kParse, kUnknownVersion or kTruncatedPayload.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path checkpoint_path(const std::filesystem::path& run_dir, int iteration);
// Iterations of every ckpt_<k>.bin in `run_dir`, ascending.
std::vector<int> list_checkpoints(const std::filesystem::path& run_dir);

}  // namespace dualsplat
