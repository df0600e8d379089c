// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <regex>

#include "dualsplat/error.hpp"
#include "dualsplat/io.hpp"

namespace dualsplat {

namespace {

class Writer {
 public:
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out_.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_ += s;
  }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  template <typename V>
  void vectors(const std::vector<V>& v) {
    u64(v.size());
    for (const auto& x : v)
      for (int i = 0; i < x.size(); ++i) f64(x[i]);
  }
  void cloud(const GaussianCloud& c) {
    vectors(c.positions);
    vectors(c.log_scales);
    vectors(c.rotations);
    vectors(c.colors_dc);
    doubles(c.opacity_logits);
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& data, std::size_t pos, std::string name)
      : data_(data), pos_(pos), name_(std::move(name)) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    pos_ += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t count(std::size_t element_bytes) {
    const std::uint64_t n = u64();
    if (element_bytes && n > (data_.size() - pos_) / element_bytes) truncated();
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const std::size_t n = count(1);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    std::vector<double> v(count(8));
    for (double& x : v) x = f64();
    return v;
  }
  template <typename V>
  std::vector<V> vectors() {
    std::vector<V> v(count(8 * V::RowsAtCompileTime));
    for (auto& x : v)
      for (int i = 0; i < x.size(); ++i) x[i] = f64();
    return v;
  }
  GaussianCloud cloud() {
    GaussianCloud c;
    c.positions = vectors<Vec3>();
    c.log_scales = vectors<Vec3>();
    c.rotations = vectors<Vec4>();
    c.colors_dc = vectors<Vec3>();
    c.opacity_logits = doubles();
    const std::size_t n = c.positions.size();
    if (c.log_scales.size() != n || c.rotations.size() != n || c.colors_dc.size() != n ||
        c.opacity_logits.size() != n)
      fail(ErrorCode::kParse, name_ + ": inconsistent cloud array lengths");
    return c;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n) truncated();
  }
  [[noreturn]] void truncated() const {
    fail(ErrorCode::kTruncatedPayload, name_ + ": checkpoint payload is truncated");
  }

  const std::string& data_;
  std::size_t pos_;
  std::string name_;
};

Rng rng_from(const std::string& state) {
  Rng r;
  r.deserialize(state);
  return r;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Writer w;
  w.bytes() = "DSCK";
  w.u64(kCheckpointVersion);
  const TrainerState& s = ckpt.state;
  w.str(ckpt.config_text);
  w.i64(s.iteration);
  w.i64(s.adam_step);
  w.f64(s.scene_extent);
  w.str(s.view_rng.serialize());
  w.str(s.background_rng.serialize());
  w.u64(s.models.size());
  for (const auto& m : s.models) {
    w.cloud(m.cloud);
    w.cloud(m.moments.m);
    w.cloud(m.moments.v);
    w.doubles(m.moments.variance_m);
    w.doubles(m.moments.variance_v);
    w.doubles(m.log_variance);
    w.doubles(m.grad_accum);
    w.u64(m.grad_count.size());
    for (int c : m.grad_count) w.i64(c);
    w.str(m.densify_rng.serialize());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  write_text_file(tmp, w.bytes());
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string data = read_text_file(path);
  if (data.size() < 12 || data.compare(0, 4, "DSCK") != 0)
    fail(ErrorCode::kParse, path.string() + ": not a checkpoint file");
  Reader r(data, 4, path.string());
  const std::uint64_t version = r.u64();
  if (version != kCheckpointVersion)
    fail(ErrorCode::kUnknownVersion,
         path.string() + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  TrainerState& s = ckpt.state;
  ckpt.config_text = r.str();
  s.iteration = static_cast<int>(r.i64());
  s.adam_step = r.i64();
  s.scene_extent = r.f64();
  try {
    s.view_rng = rng_from(r.str());
    s.background_rng = rng_from(r.str());
    const std::size_t models = r.count(1);
    for (std::size_t i = 0; i < models; ++i) {
      ModelState m;
      m.cloud = r.cloud();
      m.moments.m = r.cloud();
      m.moments.v = r.cloud();
      m.moments.variance_m = r.doubles();
      m.moments.variance_v = r.doubles();
      m.log_variance = r.doubles();
      m.grad_accum = r.doubles();
      m.grad_count.resize(r.count(8));
      for (int& c : m.grad_count) c = static_cast<int>(r.i64());
      m.densify_rng = rng_from(r.str());
      s.models.push_back(std::move(m));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kTruncatedPayload) throw;
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  if (!r.at_end()) fail(ErrorCode::kParse, path.string() + ": trailing bytes after checkpoint");
  return ckpt;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& run_dir, int iteration) {
  return run_dir / ("ckpt_" + std::to_string(iteration) + ".bin");
}

std::vector<int> list_checkpoints(const std::filesystem::path& run_dir) {
  std::vector<int> out;
  if (!std::filesystem::is_directory(run_dir)) return out;
  static const std::regex pattern("ckpt_([0-9]+)\\.bin");
  for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) out.push_back(std::stoi(m[1]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dualsplat
