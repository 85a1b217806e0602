#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccnn/error.hpp"
#include "ccnn/image_io.hpp"
#include "ccnn/parallel.hpp"
#include "ccnn/rng.hpp"
#include "ccnn/scattering.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn::synth {

namespace fs = std::filesystem;

// Per-image min-max normalization to [0,1]. Constant depth is rejected.
template <typename T>
Tensor<T> normalize_depth(const Tensor<T>& raw) {
  const auto [lo, hi] = std::minmax_element(raw.vec().begin(), raw.vec().end());
  const double mn = *lo, mx = *hi;
  if (!(mx > mn)) throw ParamError("normalize_depth: constant depth map (degenerate scene)");
  if (mn < 0.0) throw ParamError("normalize_depth: negative depth value");
  Tensor<T> out(raw.shape());
  const double inv = 1.0 / (mx - mn);
  for (std::size_t k = 0; k < raw.size(); ++k) out[k] = static_cast<T>((raw[k] - mn) * inv);
  return out;
}

// Bilinear resampling with half-pixel centers; source coordinates are
// clamped at the borders.
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& img, std::size_t out_h, std::size_t out_w) {
  if (out_h < 1 || out_w < 1) throw ParamError("resize_bilinear: output dims must be >= 1");
  const std::size_t in_h = img.h(), in_w = img.w();
  Tensor<T> out(img.n(), img.c(), out_h, out_w);
  auto axis = [](std::size_t dst, std::size_t in, std::size_t outn, std::size_t& i0, std::size_t& i1, double& f) {
    const double scale = static_cast<double>(in) / static_cast<double>(outn);
    double src = (static_cast<double>(dst) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    i0 = static_cast<std::size_t>(std::floor(src));
    i1 = std::min(i0 + 1, in - 1);
    f = src - static_cast<double>(i0);
  };
  std::vector<std::size_t> x0(out_w), x1(out_w);
  std::vector<double> fx(out_w);
  for (std::size_t x = 0; x < out_w; ++x) axis(x, in_w, out_w, x0[x], x1[x], fx[x]);
  for (std::size_t s = 0; s < img.n(); ++s)
    for (std::size_t ch = 0; ch < img.c(); ++ch) {
      auto src = img.plane(s, ch);
      auto dst = out.plane(s, ch);
      for (std::size_t y = 0; y < out_h; ++y) {
        std::size_t y0, y1;
        double fy;
        axis(y, in_h, out_h, y0, y1, fy);
        for (std::size_t x = 0; x < out_w; ++x) {
          const double top = src[y0 * in_w + x0[x]] * (1.0 - fx[x]) + src[y0 * in_w + x1[x]] * fx[x];
          const double bot = src[y1 * in_w + x0[x]] * (1.0 - fx[x]) + src[y1 * in_w + x1[x]] * fx[x];
          dst[y * out_w + x] = static_cast<T>(top * (1.0 - fy) + bot * fy);
        }
      }
    }
  return out;
}

struct ManifestEntry {
  std::string id;
  std::string clean;  // relative to the manifest directory
  std::string depth;
};

struct DatasetManifest {
  std::string split = "train";
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
  fs::path base_dir;  // directory the relative paths resolve against

  void validate() const {
    std::set<std::string> ids;
    for (const auto& e : entries)
      if (!ids.insert(e.id).second) throw ConfigError("manifest: duplicate id '" + e.id + "'");
  }
};

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) entries.push_back({{"id", e.id}, {"clean", e.clean}, {"depth", e.depth}});
  return {{"split", m.split}, {"seed", m.seed}, {"entries", entries}};
}

inline void save_manifest(const DatasetManifest& m, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write manifest '" + path.string() + "'");
  f << manifest_to_json(m).dump(2) << '\n';
}

inline DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open manifest '" + path.string() + "'");
  DatasetManifest m;
  try {
    const auto j = nlohmann::json::parse(f);
    m.split = j.at("split").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("entries"))
      m.entries.push_back({e.at("id").get<std::string>(), e.at("clean").get<std::string>(), e.at("depth").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest '" + path.string() + "': " + e.what());
  }
  m.base_dir = path.parent_path();
  m.validate();
  return m;
}

struct SynthOptions {
  std::size_t per_image = 5;
  double beta_min = 0.6, beta_max = 2.8;
  double airlight_min = 0.7, airlight_max = 1.0;
  std::size_t width = 207, height = 154;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const {
    if (per_image < 1) throw ParamError("per_image must be >= 1");
    if (!(beta_min > 0.0 && beta_max >= beta_min)) throw ParamError("invalid beta range");
    if (!(airlight_min >= 0.0 && airlight_max <= 1.0 && airlight_max >= airlight_min))
      throw ParamError("invalid airlight range");
    if (width < 1 || height < 1) throw ParamError("output size must be >= 1");
  }
};

template <typename T>
struct HazeSample {
  std::string sample_id;
  std::string source_id;
  std::size_t draw = 0;
  double beta = 0.0;
  double airlight = 0.0;
  Tensor<T> clean;         // (1,3,H,W)
  Tensor<T> depth;         // (1,1,H,W), normalized
  Tensor<T> transmission;  // (1,1,H,W)
  Tensor<T> hazy;          // (1,3,H,W)
};

inline std::string sample_id(const std::string& source, std::size_t draw) {
  return source + "_" + std::to_string(draw);
}

// Counter-based stream for one (image, draw) pair: order independent.
inline std::pair<double, double> draw_haze_params(const SynthOptions& opt, const std::string& id, std::size_t draw) {
  Rng rng(derive_seed(opt.seed, "haze:" + id, draw));
  const double beta = rng.uniform(opt.beta_min, opt.beta_max);
  const double airlight = rng.uniform(opt.airlight_min, opt.airlight_max);
  return {beta, airlight};
}

template <typename T>
std::vector<HazeSample<T>> expand_entry(const ManifestEntry& e, const fs::path& base, const SynthOptions& opt) {
  Tensor<T> clean, raw;
  try {
    clean = image::read_ppm<T>(base / e.clean);
    raw = image::read_pgm<T>(base / e.depth);
  } catch (const IoError& err) {
    throw IoError("entry '" + e.id + "': " + err.what());
  }
  if (!clean.shape().same_spatial(raw.shape()))
    throw ConfigError("entry '" + e.id + "': clean and depth sizes differ");
  clean = resize_bilinear(clean, opt.height, opt.width);
  Tensor<T> depth;
  try {
    depth = normalize_depth(resize_bilinear(raw, opt.height, opt.width));
  } catch (const ParamError& err) {
    throw ParamError("entry '" + e.id + "': " + err.what());
  }
  std::vector<HazeSample<T>> out;
  for (std::size_t d = 0; d < opt.per_image; ++d) {
    const auto [beta, airlight] = draw_haze_params(opt, e.id, d);
    HazeSample<T> s;
    s.sample_id = sample_id(e.id, d);
    s.source_id = e.id;
    s.draw = d;
    s.beta = beta;
    s.airlight = airlight;
    s.clean = clean;
    s.depth = depth;
    s.transmission = scattering::transmission_from_depth(depth, beta);
    s.hazy = scattering::synthesize_hazy(clean, s.transmission, airlight);
    out.push_back(std::move(s));
  }
  return out;
}

// per_image independent (beta, B) draws for every manifest entry, in
// manifest order.
template <typename T>
std::vector<HazeSample<T>> expand_samples(const DatasetManifest& m, const SynthOptions& opt) {
  opt.validate();
  m.validate();
  std::vector<std::vector<HazeSample<T>>> per(m.entries.size());
  parallel_for(m.entries.size(), opt.threads,
               [&](std::size_t i) { per[i] = expand_entry<T>(m.entries[i], m.base_dir, opt); });
  std::vector<HazeSample<T>> out;
  for (auto& v : per)
    for (auto& s : v) out.push_back(std::move(s));
  return out;
}

// ---- procedural RGB-D scenes ----

struct Shape2D {
  bool disk;
  double cx, cy, rx, ry;  // pixels
  double color[3];
  double stripe_freq, stripe_phase, stripe_amp;
  double depth;  // raw depth (metres)
};

namespace detail {

inline double channel_variance(std::span<const float> v) {
  double s = 0.0, ss = 0.0;
  for (float x : v) {
    s += x;
    ss += static_cast<double>(x) * x;
  }
  const double n = static_cast<double>(v.size());
  return ss / n - (s / n) * (s / n);
}

}  // namespace detail

// One indoor-like scene: a tilted background plane receding towards the top
// of the frame, with rectangles and disks placed in front of it. Returns the
// clean image (1,3,h,w) and raw depth in units of 10 m (so it fits a 16-bit
// PGM as a fraction).
inline std::pair<Tensor<float>, Tensor<float>> procedural_scene(std::size_t h, std::size_t w, std::uint64_t seed) {
  constexpr double kDepthUnit = 10.0;
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, "scene", attempt));
    Tensor<float> clean(1, 3, h, w), depth(1, 1, h, w);
    const double W = static_cast<double>(w), H = static_cast<double>(h);

    double base[3], gx[3], gy[3];
    for (int c = 0; c < 3; ++c) {
      base[c] = rng.uniform(0.15, 0.85);
      gx[c] = rng.uniform(-0.3, 0.3);
      gy[c] = rng.uniform(-0.3, 0.3);
    }
    const double near = rng.uniform(0.6, 1.8), far = rng.uniform(4.0, 9.5);
    const double wy = rng.uniform(0.5, 1.0);
    const bool flip_x = rng.uniform() < 0.5;
    auto background_depth = [&](double x, double y) {
      const double fx = flip_x ? 1.0 - x / W : x / W;
      return near + (far - near) * (wy * (1.0 - y / H) + (1.0 - wy) * fx);
    };
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double u = (x + 0.5) / W - 0.5, v = (y + 0.5) / H - 0.5;
        for (std::size_t c = 0; c < 3; ++c) clean(0, c, y, x) = static_cast<float>(std::clamp(base[c] + gx[c] * u + gy[c] * v, 0.0, 1.0));
        depth(0, 0, y, x) = static_cast<float>(background_depth(x + 0.5, y + 0.5) / kDepthUnit);
      }

    const std::size_t count = 4 + rng.below(7);
    std::vector<Shape2D> shapes;
    for (std::size_t k = 0; k < count; ++k) {
      Shape2D s{};
      s.disk = rng.uniform() < 0.4;
      s.cx = rng.uniform(0.0, W);
      s.cy = rng.uniform(0.15 * H, H);
      s.rx = rng.uniform(0.06, 0.25) * W;
      s.ry = s.disk ? s.rx : rng.uniform(0.06, 0.3) * H;
      for (double& c : s.color) c = rng.uniform(0.0, 1.0);
      s.stripe_freq = rng.uniform(0.05, 0.4);
      s.stripe_phase = rng.uniform(0.0, 6.283185307179586);
      s.stripe_amp = rng.uniform(0.0, 0.12);
      const double floor_y = std::min(H - 1.0, s.cy + s.ry);
      s.depth = background_depth(s.cx, floor_y) * rng.uniform(0.55, 0.95);
      shapes.push_back(s);
    }
    std::sort(shapes.begin(), shapes.end(), [](const Shape2D& a, const Shape2D& b) { return a.depth > b.depth; });
    for (const auto& s : shapes) {
      const auto y0 = static_cast<std::size_t>(std::max(0.0, std::floor(s.cy - s.ry)));
      const auto y1 = static_cast<std::size_t>(std::clamp(std::ceil(s.cy + s.ry), 0.0, H));
      const auto x0 = static_cast<std::size_t>(std::max(0.0, std::floor(s.cx - s.rx)));
      const auto x1 = static_cast<std::size_t>(std::clamp(std::ceil(s.cx + s.rx), 0.0, W));
      for (std::size_t y = y0; y < y1; ++y)
        for (std::size_t x = x0; x < x1; ++x) {
          const double dx = (x + 0.5 - s.cx) / s.rx, dy = (y + 0.5 - s.cy) / s.ry;
          if (s.disk ? dx * dx + dy * dy > 1.0 : std::abs(dx) > 1.0 || std::abs(dy) > 1.0) continue;
          const double tex = 1.0 + s.stripe_amp * std::sin(s.stripe_freq * (x + y) + s.stripe_phase);
          for (std::size_t c = 0; c < 3; ++c)
            clean(0, c, y, x) = static_cast<float>(std::clamp(s.color[c] * tex, 0.0, 1.0));
          depth(0, 0, y, x) = static_cast<float>(s.depth / kDepthUnit);
        }
    }

    bool ok = true;
    for (std::size_t c = 0; c < 3; ++c) ok = ok && detail::channel_variance(clean.plane(0, c)) > 1e-3;
    const auto [dlo, dhi] = std::minmax_element(depth.vec().begin(), depth.vec().end());
    ok = ok && *dhi - *dlo > 0.05;
    if (ok) return {std::move(clean), std::move(depth)};
  }
}

// Writes count scenes as <split>_NNNN.ppm / <split>_NNNN_depth.pgm plus
// manifest.json into out_dir.
inline DatasetManifest procedural_rgbd(std::size_t count, std::size_t h, std::size_t w, std::uint64_t seed,
                                       const fs::path& out_dir, const std::string& split = "train",
                                       std::size_t threads = 1) {
  if (count < 1) throw ParamError("procedural_rgbd: count must be >= 1");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory '" + out_dir.string() + "'");

  DatasetManifest m;
  m.split = split;
  m.seed = seed;
  m.base_dir = out_dir;
  for (std::size_t i = 0; i < count; ++i) {
    std::ostringstream id;
    id << split << '_' << std::setw(4) << std::setfill('0') << i;
    m.entries.push_back({id.str(), id.str() + ".ppm", id.str() + "_depth.pgm"});
  }
  parallel_for(count, threads, [&](std::size_t i) {
    const auto& e = m.entries[i];
    const auto [clean, depth] = procedural_scene(h, w, derive_seed(seed, "rgbd:" + e.id));
    image::write_ppm(out_dir / e.clean, clean);
    image::write_pgm16(out_dir / e.depth, depth);
  });
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

// ---- sample sets on disk ----

struct SampleRecord {
  std::string id;
  std::string source;
  std::size_t draw = 0;
  double beta = 0.0;
  double airlight = 0.0;
  std::string hazy, clean, transmission;  // relative to the set directory
};

struct SampleSet {
  std::string split;
  std::uint64_t seed = 0;
  std::size_t width = 0, height = 0;
  std::vector<SampleRecord> records;
  fs::path dir;
};

// Writes <id>_hazy.ppm, <id>_clean.ppm, <id>_trans.pgm for every sample and a
// samples.json index.
template <typename T>
SampleSet write_sample_set(const fs::path& dir, const std::vector<HazeSample<T>>& samples, const std::string& split,
                           const SynthOptions& opt) {
  fs::create_directories(dir);
  SampleSet set{split, opt.seed, opt.width, opt.height, {}, dir};
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : samples) {
    SampleRecord r{s.sample_id, s.source_id, s.draw, s.beta, s.airlight,
                   s.sample_id + "_hazy.ppm", s.sample_id + "_clean.ppm", s.sample_id + "_trans.pgm"};
    set.records.push_back(r);
    arr.push_back({{"id", r.id}, {"source", r.source}, {"draw", r.draw}, {"beta", r.beta}, {"airlight", r.airlight},
                   {"hazy", r.hazy}, {"clean", r.clean}, {"transmission", r.transmission}});
  }
  parallel_for(samples.size(), opt.threads, [&](std::size_t i) {
    const auto& s = samples[i];
    const auto& r = set.records[i];
    image::write_ppm(dir / r.hazy, s.hazy);
    image::write_ppm(dir / r.clean, s.clean);
    image::write_pgm16(dir / r.transmission, s.transmission);
  });
  const nlohmann::json meta{{"split", split},
                            {"seed", opt.seed},
                            {"width", opt.width},
                            {"height", opt.height},
                            {"per_image", opt.per_image},
                            {"beta_range", {opt.beta_min, opt.beta_max}},
                            {"airlight_range", {opt.airlight_min, opt.airlight_max}},
                            {"samples", arr}};
  std::ofstream f(dir / "samples.json");
  if (!f) throw IoError("cannot write '" + (dir / "samples.json").string() + "'");
  f << meta.dump(2) << '\n';
  return set;
}

inline SampleSet load_sample_set(const fs::path& dir) {
  const auto path = dir / "samples.json";
  std::ifstream f(path);
  if (!f) throw IoError("cannot open sample index '" + path.string() + "'");
  SampleSet set;
  set.dir = dir;
  try {
    const auto j = nlohmann::json::parse(f);
    set.split = j.at("split").get<std::string>();
    set.seed = j.at("seed").get<std::uint64_t>();
    set.width = j.at("width").get<std::size_t>();
    set.height = j.at("height").get<std::size_t>();
    for (const auto& s : j.at("samples")) {
      set.records.push_back({s.at("id").get<std::string>(), s.at("source").get<std::string>(),
                             s.at("draw").get<std::size_t>(), s.at("beta").get<double>(),
                             s.at("airlight").get<double>(), s.at("hazy").get<std::string>(),
                             s.at("clean").get<std::string>(), s.at("transmission").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("sample index '" + path.string() + "': " + e.what());
  }
  return set;
}

}  // namespace ccnn::synth
