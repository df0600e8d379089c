// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

// Flat key = value serialization of TrainConfig. Keys mirror the field names;
// '#' starts a comment. Milestones are written as "fraction:ratio,..." and
// "fraction:orbit+orbit,...".

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dualsplat/train.hpp"

namespace dualsplat {

// Every key in serialization order.
const std::vector<std::string>& config_keys();

// Throws kConfig for unknown keys or unparsable values.
void set_config_value(TrainConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const TrainConfig& config, const std::string& key);

std::string config_to_string(const TrainConfig& config);
// Applies every assignment in `text` on top of `base`.
TrainConfig parse_config(const std::string& text, TrainConfig base = {});

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});
void save_config(const std::filesystem::path& path, const TrainConfig& config);

}  // namespace dualsplat
