// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "dualsplat/error.hpp"
#include "dualsplat/io.hpp"

namespace dualsplat {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

// Shortest representation that reads back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const std::string t = trim(text);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
    fail(ErrorCode::kConfig, "config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  fail(ErrorCode::kConfig, "config key '" + key + "': expected true or false, got '" + text + "'");
}

std::string format_resolution(const std::vector<ResolutionMilestone>& ms) {
  std::string out;
  for (const auto& m : ms)
    out += (out.empty() ? "" : ",") + format_double(m.fraction) + ":" + format_double(m.ratio);
  return out;
}

std::vector<ResolutionMilestone> parse_resolution(const std::string& key, const std::string& text) {
  std::vector<ResolutionMilestone> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2)
      fail(ErrorCode::kConfig, "config key '" + key + "': expected fraction:ratio, got '" + item + "'");
    out.push_back({parse_number<double>(key, parts[0]), parse_number<double>(key, parts[1])});
  }
  return out;
}

std::string format_elevation(const std::vector<ElevationMilestone>& ms) {
  std::string out;
  for (const auto& m : ms) {
    out += (out.empty() ? "" : ",") + format_double(m.fraction) + ":";
    for (std::size_t i = 0; i < m.orbits.size(); ++i)
      out += (i ? "+" : "") + std::to_string(m.orbits[i]);
  }
  return out;
}

std::vector<ElevationMilestone> parse_elevation(const std::string& key, const std::string& text) {
  std::vector<ElevationMilestone> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2)
      fail(ErrorCode::kConfig,
           "config key '" + key + "': expected fraction:orbit+orbit, got '" + item + "'");
    ElevationMilestone m;
    m.fraction = parse_number<double>(key, parts[0]);
    for (const auto& o : split(parts[1], '+')) m.orbits.push_back(parse_number<int>(key, o));
    out.push_back(m);
  }
  return out;
}

struct Entry {
  std::string key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <typename T>
Entry number_entry(std::string key, T TrainConfig::*field) {
  return {key,
          [field](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(c.*field);
            else
              return std::to_string(c.*field);
          },
          [key, field](TrainConfig& c, const std::string& v) { c.*field = parse_number<T>(key, v); }};
}

Entry bool_entry(std::string key, bool TrainConfig::*field) {
  return {key, [field](const TrainConfig& c) { return std::string(c.*field ? "true" : "false"); },
          [key, field](TrainConfig& c, const std::string& v) { c.*field = parse_bool(key, v); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    using C = TrainConfig;
    std::vector<Entry> t;
    t.push_back(number_entry("total_iters", &C::total_iters));
    t.push_back(number_entry("lambda", &C::lambda));
    t.push_back(number_entry("lambda_s", &C::lambda_s));
    t.push_back(number_entry("lambda_l", &C::lambda_l));
    t.push_back(bool_entry("detach_uncertainty_weight", &C::detach_uncertainty_weight));
    t.push_back(number_entry("lr_position_init", &C::lr_position_init));
    t.push_back(number_entry("lr_position_final", &C::lr_position_final));
    t.push_back(number_entry("lr_color", &C::lr_color));
    t.push_back(number_entry("lr_opacity", &C::lr_opacity));
    t.push_back(number_entry("lr_scale", &C::lr_scale));
    t.push_back(number_entry("lr_rotation", &C::lr_rotation));
    t.push_back(number_entry("lr_variance", &C::lr_variance));
    t.push_back(number_entry("adam_beta1", &C::adam_beta1));
    t.push_back(number_entry("adam_beta2", &C::adam_beta2));
    t.push_back(number_entry("adam_eps", &C::adam_eps));
    t.push_back(number_entry("densify_interval", &C::densify_interval));
    t.push_back(number_entry("densify_start", &C::densify_start));
    t.push_back({"densify_stop",
                 [](const C& c) {
                   return c.densify_stop < 0 ? std::string("auto") : std::to_string(c.densify_stop);
                 },
                 [](C& c, const std::string& v) {
                   c.densify_stop = trim(v) == "auto" ? -1 : parse_number<int>("densify_stop", v);
                 }});
    t.push_back(number_entry("densify_grad_threshold", &C::densify_grad_threshold));
    t.push_back(number_entry("prune_opacity_threshold", &C::prune_opacity_threshold));
    t.push_back(number_entry("opacity_reset_interval", &C::opacity_reset_interval));
    t.push_back(number_entry("opacity_reset_value", &C::opacity_reset_value));
    t.push_back(number_entry("split_scale_divisor", &C::split_scale_divisor));
    t.push_back(number_entry("percent_dense", &C::percent_dense));
    t.push_back(number_entry("max_points", &C::max_points));
    t.push_back({"scene_extent",
                 [](const C& c) {
                   return c.scene_extent == 0.0 ? std::string("auto") : format_double(c.scene_extent);
                 },
                 [](C& c, const std::string& v) {
                   c.scene_extent = trim(v) == "auto" ? 0.0 : parse_number<double>("scene_extent", v);
                 }});
    t.push_back({"resolution_milestones",
                 [](const C& c) { return format_resolution(c.resolution_milestones); },
                 [](C& c, const std::string& v) {
                   c.resolution_milestones = parse_resolution("resolution_milestones", v);
                 }});
    t.push_back({"elevation_milestones",
                 [](const C& c) { return format_elevation(c.elevation_milestones); },
                 [](C& c, const std::string& v) {
                   c.elevation_milestones = parse_elevation("elevation_milestones", v);
                 }});
    t.push_back(number_entry("seed1", &C::seed1));
    t.push_back(number_entry("seed2", &C::seed2));
    t.push_back(number_entry("sample_seed", &C::sample_seed));
    t.push_back(number_entry("init_points", &C::init_points));
    t.push_back(number_entry("init_radius", &C::init_radius));
    t.push_back(number_entry("init_opacity", &C::init_opacity));
    t.push_back(number_entry("init_color", &C::init_color));
    t.push_back(bool_entry("random_background", &C::random_background));
    t.push_back({"ablation_mode",
                 [](const C& c) { return std::string(ablation_mode_name(c.ablation_mode)); },
                 [](C& c, const std::string& v) { c.ablation_mode = parse_ablation_mode(trim(v)); }});
    t.push_back(number_entry("ensemble_k", &C::ensemble_k));
    t.push_back(number_entry("init_log_variance", &C::init_log_variance));
    t.push_back(number_entry("checkpoint_interval", &C::checkpoint_interval));
    return t;
  }();
  return table;
}

const Entry& find_entry(const std::string& key) {
  for (const auto& e : entries())
    if (e.key == key) return e;
  fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void set_config_value(TrainConfig& config, const std::string& key, const std::string& value) {
  find_entry(trim(key)).set(config, value);
}

std::string get_config_value(const TrainConfig& config, const std::string& key) {
  return find_entry(trim(key)).get(config);
}

std::string config_to_string(const TrainConfig& config) {
  std::string out;
  for (const auto& e : entries()) out += e.key + " = " + e.get(config) + "\n";
  return out;
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::kConfig,
           "config line " + std::to_string(line_no) + ": expected key = value, got '" + line + "'");
    set_config_value(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  if (!std::filesystem::exists(path))
    fail(ErrorCode::kConfig, "config file " + path.string() + " does not exist");
  try {
    return parse_config(read_text_file(path), std::move(base));
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

void save_config(const std::filesystem::path& path, const TrainConfig& config) {
  write_text_file(path, config_to_string(config));
}

}  // namespace dualsplat
