// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "dualsplat/error.hpp"
#include "dualsplat/log.hpp"

namespace dualsplat {

using nlohmann::json;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

// ---- PLY -------------------------------------------------------------------

namespace {

constexpr std::array<const char*, 14> kPlyFields = {
    "x",       "y",       "z",       "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
    "scale_0", "scale_1", "scale_2", "rot_0",  "rot_1",  "rot_2",  "rot_3"};

void put_f32(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double get_le(const unsigned char* p, int size, bool floating) {
  std::uint64_t bits = 0;
  for (int b = 0; b < size; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  if (floating && size == 4) return std::bit_cast<float>(static_cast<std::uint32_t>(bits));
  if (floating && size == 8) return std::bit_cast<double>(bits);
  return static_cast<double>(bits);
}

int ply_type_size(const std::string& t) {
  static const std::map<std::string, int> sizes = {
      {"char", 1},   {"uchar", 1},   {"int8", 1},  {"uint8", 1},  {"short", 2},
      {"ushort", 2}, {"int16", 2},   {"uint16", 2}, {"int", 4},   {"uint", 4},
      {"int32", 4},  {"uint32", 4},  {"float", 4}, {"float32", 4}, {"double", 8},
      {"float64", 8}};
  const auto it = sizes.find(t);
  return it == sizes.end() ? 0 : it->second;
}

bool ply_is_float(const std::string& t) {
  return t == "float" || t == "float32" || t == "double" || t == "float64";
}

}  // namespace

void save_cloud(const fs::path& path, const GaussianCloud& cloud) {
  cloud.validate();
  std::string out;
  out += "ply\nformat binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  for (const char* f : kPlyFields) out += std::string("property float ") + f + "\n";
  out += "end_header\n";
  out.reserve(out.size() + cloud.size() * kPlyFields.size() * 4);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) put_f32(out, static_cast<float>(cloud.positions[i][a]));
    for (int a = 0; a < 3; ++a)
      put_f32(out, static_cast<float>((cloud.colors_dc[i][a] - 0.5) / kShC0));
    put_f32(out, static_cast<float>(cloud.opacity_logits[i]));
    for (int a = 0; a < 3; ++a) put_f32(out, static_cast<float>(cloud.log_scales[i][a]));
    for (int a = 0; a < 4; ++a) put_f32(out, static_cast<float>(cloud.rotations[i][a]));
  }
  write_text_file(path, out);
}

GaussianCloud load_cloud(const fs::path& path) {
  const std::string bytes = read_text_file(path);
  const std::size_t end = bytes.find("end_header\n");
  if (bytes.rfind("ply\n", 0) != 0 || end == std::string::npos)
    fail(ErrorCode::kParse, path.string() + ": not a PLY file (missing magic or end_header)");
  std::istringstream header(bytes.substr(0, end));

  struct Property {
    std::string name;
    int offset;
    int size;
    bool floating;
  };
  std::vector<Property> props;
  long long count = -1;
  int stride = 0;
  bool format_seen = false;
  std::string line;
  std::getline(header, line);  // "ply"
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt != "binary_little_endian")
        fail(ErrorCode::kParse, path.string() + ": unsupported PLY format '" + fmt + "'");
      if (version != "1.0")
        fail(ErrorCode::kUnknownVersion, path.string() + ": unknown PLY version '" + version + "'");
      format_seen = true;
    } else if (keyword == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex" || !ls || count < 0)
        fail(ErrorCode::kParse, path.string() + ": expected a single 'element vertex N'");
      if (!props.empty()) fail(ErrorCode::kParse, path.string() + ": multiple elements");
    } else if (keyword == "property") {
      if (count < 0) fail(ErrorCode::kParse, path.string() + ": property before element");
      std::string type, name;
      ls >> type >> name;
      const int size = ply_type_size(type);
      if (type == "list" || size == 0)
        fail(ErrorCode::kParse, path.string() + ": unsupported property type '" + type + "'");
      props.push_back({name, stride, size, ply_is_float(type)});
      stride += size;
    } else {
      fail(ErrorCode::kParse, path.string() + ": unexpected header line '" + line + "'");
    }
  }
  if (!format_seen || count < 0) fail(ErrorCode::kParse, path.string() + ": incomplete header");

  std::array<const Property*, kPlyFields.size()> field{};
  for (std::size_t f = 0; f < kPlyFields.size(); ++f) {
    for (const auto& p : props)
      if (p.name == kPlyFields[f]) field[f] = &p;
    if (field[f] == nullptr || !field[f]->floating)
      fail(ErrorCode::kParse,
           path.string() + ": missing float property '" + kPlyFields[f] + "'");
  }

  const std::size_t payload = bytes.size() - (end + std::strlen("end_header\n"));
  const std::size_t expected = static_cast<std::size_t>(count) * stride;
  if (payload != expected)
    fail(ErrorCode::kTruncatedPayload, path.string() + ": header declares " +
                                           std::to_string(count) + " vertices (" +
                                           std::to_string(expected) + " bytes) but payload has " +
                                           std::to_string(payload) + " bytes");

  const auto* data =
      reinterpret_cast<const unsigned char*>(bytes.data()) + end + std::strlen("end_header\n");
  GaussianCloud cloud;
  cloud.resize(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    const unsigned char* rec = data + i * stride;
    auto value = [&](std::size_t f) {
      return get_le(rec + field[f]->offset, field[f]->size, field[f]->floating);
    };
    cloud.positions[i] = Vec3(value(0), value(1), value(2));
    cloud.colors_dc[i] =
        Vec3(0.5 + kShC0 * value(3), 0.5 + kShC0 * value(4), 0.5 + kShC0 * value(5));
    cloud.opacity_logits[i] = value(6);
    cloud.log_scales[i] = Vec3(value(7), value(8), value(9));
    cloud.rotations[i] = Vec4(value(10), value(11), value(12), value(13));
  }
  return cloud;
}

// ---- PNG -------------------------------------------------------------------

void save_image(const fs::path& path, const ImageBuffer& img, const std::vector<double>* alpha) {
  require(img.channels == 1 || img.channels == 3, "save_image: 1 or 3 channels supported");
  require(img.width >= 1 && img.height >= 1, "save_image: empty image");
  if (alpha) require(alpha->size() == img.pixel_count(), "save_image: alpha size mismatch");
  const int out_channels = img.channels + (alpha ? 1 : 0);
  std::vector<png_byte> buf(img.pixel_count() * out_channels);
  auto quantize = [](double v) {
    return static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    for (int c = 0; c < img.channels; ++c)
      buf[p * out_channels + c] = quantize(img.data[p * img.channels + c]);
    if (alpha) buf[p * out_channels + img.channels] = quantize((*alpha)[p]);
  }

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  if (img.channels == 1)
    image.format = alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY;
  else
    image.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::kIo, "cannot write PNG " + path.string() + ": " + msg);
  }
}

LoadedImage load_image(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    fail(ErrorCode::kParse, "cannot decode PNG " + path.string() + ": " + image.message);
  const bool has_alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  image.format = PNG_FORMAT_RGBA;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::kParse, "cannot decode PNG " + path.string() + ": " + msg);
  }
  LoadedImage out;
  out.rgb = ImageBuffer(static_cast<int>(image.width), static_cast<int>(image.height), 3);
  std::vector<double> alpha(out.rgb.pixel_count());
  for (std::size_t p = 0; p < out.rgb.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) out.rgb.data[p * 3 + c] = buf[p * 4 + c] / 255.0;
    alpha[p] = buf[p * 4 + 3] / 255.0;
  }
  if (has_alpha) out.alpha = std::move(alpha);
  return out;
}

// ---- JSON helpers ----------------------------------------------------------

namespace {

template <typename T>
T field(const json& j, const char* name, const char* context) {
  if (!j.is_object() || !j.contains(name))
    fail(ErrorCode::kConfig, std::string(context) + ": missing field '" + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kConfig, std::string(context) + ": field '" + name + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& j, const char* name, T fallback, const char* context) {
  return j.contains(name) ? field<T>(j, name, context) : fallback;
}

Vec3 vec3_field(const json& j, const char* name, const char* context) {
  const auto v = field<std::vector<double>>(j, name, context);
  if (v.size() != 3)
    fail(ErrorCode::kConfig, std::string(context) + ": field '" + name + "' needs 3 values");
  return {v[0], v[1], v[2]};
}

}  // namespace

json camera_to_json(const Camera& c) {
  return {{"azimuth", c.azimuth}, {"elevation", c.elevation}, {"radius", c.radius},
          {"fov_y", c.fov_y},     {"width", c.width},         {"height", c.height}};
}

Camera camera_from_json(const json& j) {
  Camera c;
  c.azimuth = field<double>(j, "azimuth", "camera");
  c.elevation = field<double>(j, "elevation", "camera");
  c.radius = field<double>(j, "radius", "camera");
  c.fov_y = field<double>(j, "fov_y", "camera");
  c.width = field<int>(j, "width", "camera");
  c.height = field<int>(j, "height", "camera");
  return c;
}

json orbit_to_json(const OrbitSpec& o) {
  return {{"frames_per_orbit", o.frames_per_orbit},
          {"elevation_amplitude", o.elevation_amplitude},
          {"phase", o.phase},
          {"radius", o.radius},
          {"fov_y", o.fov_y},
          {"width", o.width},
          {"height", o.height}};
}

OrbitSpec orbit_from_json(const json& j) {
  OrbitSpec o;
  o.frames_per_orbit = field<int>(j, "frames_per_orbit", "orbit");
  o.elevation_amplitude = field<double>(j, "elevation_amplitude", "orbit");
  o.phase = field<double>(j, "phase", "orbit");
  o.radius = field<double>(j, "radius", "orbit");
  o.fov_y = field<double>(j, "fov_y", "orbit");
  o.width = field<int>(j, "width", "orbit");
  o.height = field<int>(j, "height", "orbit");
  return o;
}

json scene_spec_to_json(const SceneSpec& s) {
  json prims = json::array();
  for (const auto& p : s.primitives) {
    const char* kind = p.kind == PrimitiveKind::kSphere ? "sphere"
                       : p.kind == PrimitiveKind::kBox  ? "box"
                                                        : "blob";
    prims.push_back({{"kind", kind},
                     {"center", {p.center.x(), p.center.y(), p.center.z()}},
                     {"size", p.size},
                     {"color", {p.color.x(), p.color.y(), p.color.z()}}});
  }
  return {{"primitives", prims},
          {"gaussians_per_primitive", s.gaussians_per_primitive},
          {"texture_noise", s.texture_noise},
          {"gaussian_scale", s.gaussian_scale},
          {"opacity", s.opacity}};
}

SceneSpec scene_spec_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::kConfig, "scene spec: expected a JSON object");
  static const std::vector<std::string> known = {"primitives", "gaussians_per_primitive",
                                                 "texture_noise", "gaussian_scale", "opacity"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      fail(ErrorCode::kConfig, "scene spec: unknown field '" + key + "'");
  SceneSpec s;
  const json prims = field<json>(j, "primitives", "scene spec");
  if (!prims.is_array() || prims.empty())
    fail(ErrorCode::kConfig, "scene spec: field 'primitives' must be a nonempty array");
  for (const auto& pj : prims) {
    Primitive p;
    if (!pj.is_object()) fail(ErrorCode::kConfig, "scene spec: primitives must be JSON objects");
    for (const auto& [key, _] : pj.items())
      if (key != "kind" && key != "center" && key != "size" && key != "color")
        fail(ErrorCode::kConfig, "scene spec primitive: unknown field '" + key + "'");
    const auto kind = field<std::string>(pj, "kind", "scene spec primitive");
    if (kind == "sphere")
      p.kind = PrimitiveKind::kSphere;
    else if (kind == "box")
      p.kind = PrimitiveKind::kBox;
    else if (kind == "blob")
      p.kind = PrimitiveKind::kBlob;
    else
      fail(ErrorCode::kConfig, "scene spec primitive: field 'kind' must be sphere, box or blob");
    p.center = vec3_field(pj, "center", "scene spec primitive");
    p.size = field<double>(pj, "size", "scene spec primitive");
    p.color = vec3_field(pj, "color", "scene spec primitive");
    s.primitives.push_back(p);
  }
  s.gaussians_per_primitive =
      field_or<int>(j, "gaussians_per_primitive", s.gaussians_per_primitive, "scene spec");
  s.texture_noise = field_or<double>(j, "texture_noise", s.texture_noise, "scene spec");
  s.gaussian_scale = field_or<double>(j, "gaussian_scale", s.gaussian_scale, "scene spec");
  s.opacity = field_or<double>(j, "opacity", s.opacity, "scene spec");
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  return s;
}

SceneSpec load_scene_spec(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return scene_spec_from_json(j);
}

json eval_report_to_json(const EvalReport& r) {
  json cams = json::array();
  for (const auto& c : r.cameras) cams.push_back(camera_to_json(c));
  return {{"type", "eval_report"},
          {"cameras", cams},
          {"psnr", r.psnr},
          {"ssim", r.ssim},
          {"psnr_mean", r.psnr_mean},
          {"psnr_std", r.psnr_std},
          {"ssim_mean", r.ssim_mean},
          {"ssim_std", r.ssim_std},
          {"lpips", "not computed"},
          {"config_fingerprint", r.config_fingerprint},
          {"dataset_fingerprint", r.dataset_fingerprint}};
}

EvalReport eval_report_from_json(const json& j) {
  EvalReport r;
  try {
    for (const auto& c : j.at("cameras")) r.cameras.push_back(camera_from_json(c));
    r.psnr = j.at("psnr").get<std::vector<double>>();
    r.ssim = j.at("ssim").get<std::vector<double>>();
    r.psnr_mean = j.at("psnr_mean").get<double>();
    r.psnr_std = j.at("psnr_std").get<double>();
    r.ssim_mean = j.at("ssim_mean").get<double>();
    r.ssim_std = j.at("ssim_std").get<double>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("eval report: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::kParse, std::string("eval report: ") + e.what());
  }
  return r;
}

json ab_report_to_json(const AbReport& r) {
  return {{"type", "ab_report"},
          {"psnr_delta", r.psnr_delta},
          {"ssim_delta", r.ssim_delta},
          {"psnr_delta_mean", r.psnr_delta_mean},
          {"ssim_delta_mean", r.ssim_delta_mean},
          {"psnr_wins", r.psnr_wins},
          {"psnr_losses", r.psnr_losses},
          {"ssim_wins", r.ssim_wins},
          {"ssim_losses", r.ssim_losses},
          {"psnr_p_value", r.psnr_p_value},
          {"ssim_p_value", r.ssim_p_value}};
}

// ---- Dataset directory -----------------------------------------------------

namespace {

std::string numbered(const char* dir, const char* stem, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/%s_%03zu.png", dir, stem, i);
  return buf;
}

void require_integrity(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::kIntegrity, message);
}

}  // namespace

void save_dataset(const fs::path& dir, const PseudoDataset& ds, const json& extra) {
  fs::create_directories(dir / "frames");
  json manifest = json::object();
  manifest["schema_version"] = kDatasetSchemaVersion;
  json orbits = json::array();
  for (const auto& o : ds.orbits) orbits.push_back(orbit_to_json(o));
  manifest["orbits"] = orbits;
  manifest["inconsistency"] = {{"geometry_jitter", ds.inconsistency.geometry_jitter},
                               {"color_jitter", ds.inconsistency.color_jitter},
                               {"seed", ds.inconsistency.seed}};
  manifest["consistent"] = ds.inconsistency.consistent();
  manifest["scene_file"] = "scene.ply";
  json frames = json::array();
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    const Frame& f = ds.frames[i];
    const std::string file = numbered("frames", "frame", i);
    save_image(dir / file, f.image, &f.alpha);
    frames.push_back({{"file", file},
                      {"orbit", f.orbit},
                      {"index_in_orbit", f.index_in_orbit},
                      {"camera", camera_to_json(f.camera)}});
  }
  manifest["frames"] = frames;
  manifest["heldout_seed"] = ds.heldout_seed;
  json heldout = json::array();
  if (!ds.heldout.empty()) fs::create_directories(dir / "heldout");
  for (std::size_t i = 0; i < ds.heldout.size(); ++i) {
    const std::string file = numbered("heldout", "view", i);
    save_image(dir / file, ds.heldout_images.at(i));
    heldout.push_back({{"file", file}, {"camera", camera_to_json(ds.heldout[i])}});
  }
  manifest["heldout"] = heldout;
  for (const auto& [key, value] : extra.items()) manifest[key] = value;
  save_cloud(dir / "scene.ply", ds.scene);
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

json read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  if (!fs::exists(path)) fail(ErrorCode::kIntegrity, dir.string() + ": manifest.json is missing");
  json manifest;
  try {
    manifest = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("schema_version"))
    fail(ErrorCode::kParse, path.string() + ": missing schema_version");
  const int version = manifest["schema_version"].get<int>();
  if (version != kDatasetSchemaVersion)
    fail(ErrorCode::kUnknownVersion,
         path.string() + ": unsupported manifest schema version " + std::to_string(version));
  return manifest;
}

PseudoDataset load_dataset(const fs::path& dir) {
  const json manifest = read_manifest(dir);
  PseudoDataset ds;
  try {
    for (const auto& o : manifest.at("orbits")) ds.orbits.push_back(orbit_from_json(o));
    const json& inc = manifest.at("inconsistency");
    ds.inconsistency.geometry_jitter = inc.at("geometry_jitter").get<double>();
    ds.inconsistency.color_jitter = inc.at("color_jitter").get<double>();
    ds.inconsistency.seed = inc.at("seed").get<std::uint64_t>();
    ds.heldout_seed = manifest.at("heldout_seed").get<std::uint64_t>();

    std::vector<std::vector<Camera>> expected;
    for (const auto& o : ds.orbits) expected.push_back(orbit_cameras(o));
    std::size_t expected_total = 0;
    for (const auto& e : expected) expected_total += e.size();
    const json& frames = manifest.at("frames");
    require_integrity(frames.size() == expected_total,
                      "manifest lists " + std::to_string(frames.size()) + " frames but its orbits define " +
                          std::to_string(expected_total));

    for (const auto& fj : frames) {
      Frame f;
      const auto file = fj.at("file").get<std::string>();
      f.orbit = fj.at("orbit").get<int>();
      f.index_in_orbit = fj.at("index_in_orbit").get<int>();
      f.camera = camera_from_json(fj.at("camera"));
      require_integrity(f.orbit >= 0 && f.orbit < static_cast<int>(expected.size()) &&
                            f.index_in_orbit >= 0 &&
                            f.index_in_orbit < static_cast<int>(expected[f.orbit].size()),
                        "frame " + file + " references an unknown orbit slot");
      require_integrity(expected[f.orbit][f.index_in_orbit] == f.camera,
                        "frame " + file + " camera does not match its orbit formula");
      require_integrity(fs::exists(dir / file), "missing frame " + file);
      LoadedImage img = load_image(dir / file);
      require_integrity(img.rgb.width == f.camera.width && img.rgb.height == f.camera.height,
                        "frame " + file + " size does not match its camera");
      require_integrity(img.alpha.has_value(), "frame " + file + " has no alpha channel");
      f.image = std::move(img.rgb);
      f.alpha = std::move(*img.alpha);
      ds.frames.push_back(std::move(f));
    }

    const json& heldout = manifest.at("heldout");
    if (!heldout.empty()) {
      const OrbitSpec& ref = ds.orbits.front();
      const auto regenerated = heldout_cameras(static_cast<int>(heldout.size()), ds.heldout_seed,
                                               ref.radius, ref.fov_y, ref.width, ref.height);
      for (std::size_t i = 0; i < heldout.size(); ++i) {
        const auto file = heldout[i].at("file").get<std::string>();
        const Camera cam = camera_from_json(heldout[i].at("camera"));
        require_integrity(cam == regenerated[i], "held-out view " + file + " camera mismatch");
        require_integrity(fs::exists(dir / file), "missing held-out view " + file);
        ds.heldout.push_back(cam);
        ds.heldout_images.push_back(load_image(dir / file).rgb);
      }
    }
    const auto scene_file = manifest.at("scene_file").get<std::string>();
    require_integrity(fs::exists(dir / scene_file), "missing scene file " + scene_file);
    ds.scene = load_cloud(dir / scene_file);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, (dir / "manifest.json").string() + ": " + e.what());
  }
  return ds;
}

// ---- Metrics log -----------------------------------------------------------

json metrics_to_json(const MetricsRecord& r) {
  return {{"iteration", r.iteration},
          {"l1_u_model1", r.l1_u_model1},
          {"l1_u_model2", r.l1_u_model2},
          {"d_ssim", r.d_ssim},
          {"lpips", r.lpips},
          {"total", r.total},
          {"points", r.points},
          {"resolution_ratio", r.resolution_ratio},
          {"active_orbits", r.active_orbits},
          {"wall_ms", r.wall_ms}};
}

MetricsRecord metrics_from_json(const json& j) {
  MetricsRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.l1_u_model1 = j.at("l1_u_model1").get<double>();
  r.l1_u_model2 = j.at("l1_u_model2").get<double>();
  r.d_ssim = j.at("d_ssim").get<double>();
  r.lpips = j.at("lpips").get<double>();
  r.total = j.at("total").get<double>();
  r.points = j.at("points").get<std::vector<std::size_t>>();
  r.resolution_ratio = j.at("resolution_ratio").get<double>();
  r.active_orbits = j.at("active_orbits").get<std::vector<int>>();
  r.wall_ms = j.at("wall_ms").get<double>();
  return r;
}

void append_json_line(const fs::path& path, const json& record) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) fail(ErrorCode::kIo, "cannot append to " + path.string());
  out << record.dump() << '\n';
  out.flush();
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

void append_metrics(const fs::path& path, const MetricsRecord& record) {
  append_json_line(path, metrics_to_json(record));
}

std::vector<json> read_json_lines(const fs::path& path) {
  std::vector<json> out;
  if (!fs::exists(path)) return out;
  const std::string text = read_text_file(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      log_warning(path.string() + ": discarding partial trailing line " + std::to_string(line_no));
      break;
    }
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<MetricsRecord> read_metrics(const fs::path& path) {
  std::vector<MetricsRecord> out;
  std::size_t line = 0;
  for (const auto& j : read_json_lines(path)) {
    ++line;
    try {
      out.push_back(metrics_from_json(j));
    } catch (const json::exception& e) {
      fail(ErrorCode::kParse, path.string() + ": record " + std::to_string(line) + ": " + e.what());
    }
    if (out.size() > 1 && out.back().iteration <= out[out.size() - 2].iteration)
      fail(ErrorCode::kParse, path.string() + ": record " + std::to_string(line) +
                                  ": iteration is not strictly increasing");
  }
  return out;
}

void truncate_metrics(const fs::path& path, int limit) {
  if (!fs::exists(path)) return;
  std::string text;
  for (const auto& r : read_metrics(path))
    if (r.iteration < limit) text += metrics_to_json(r).dump() + "\n";
  write_text_file(path, text);
}

}  // namespace dualsplat
