#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cilp/common.hpp"
#include "cilp/mask.hpp"

namespace cilp {

enum class Label { positive, negative };

inline std::string_view to_string(Label l) { return l == Label::positive ? "positive" : "negative"; }

inline Label label_from_string(std::string_view s) {
  if (s == "positive" || s == "pos" || s == "+") return Label::positive;
  if (s == "negative" || s == "neg" || s == "-") return Label::negative;
  throw std::invalid_argument("unknown label: " + std::string(s));
}

inline const std::vector<std::string>& default_concepts() {
  static const std::vector<std::string> concepts{"eye", "nose", "mouth"};
  return concepts;
}

enum class PartShape { rectangle, ellipse };

inline std::string_view to_string(PartShape s) { return s == PartShape::rectangle ? "rectangle" : "ellipse"; }

/// Axis-aligned part footprint; pixels span [cx-half_w, cx+half_w] x [cy-half_h, cy+half_h].
struct PartBox {
  std::string concept_name;
  PartShape shape = PartShape::rectangle;
  int cx = 0;
  int cy = 0;
  int half_w = 1;
  int half_h = 1;

  friend bool operator==(const PartBox&, const PartBox&) = default;
};

struct SceneSpec {
  int width = 224;
  int height = 224;
  std::vector<PartBox> parts;
  Label label = Label::positive;
  std::uint64_t seed = 0;
};

struct ConceptLayer {
  std::string concept_name;
  BinaryMask mask;
  friend bool operator==(const ConceptLayer&, const ConceptLayer&) = default;
};

/// Detector output for one example: one binary layer per concept.
struct ConceptMaskSet {
  std::string id;
  Label label = Label::positive;
  std::vector<ConceptLayer> layers;

  const BinaryMask* layer(std::string_view name) const {
    for (const auto& l : layers)
      if (l.concept_name == name) return &l.mask;
    return nullptr;
  }
  BinaryMask* layer(std::string_view name) {
    for (auto& l : layers)
      if (l.concept_name == name) return &l.mask;
    return nullptr;
  }

  friend bool operator==(const ConceptMaskSet&, const ConceptMaskSet&) = default;
};

struct NoiseParams {
  int speckles = 0;  // per layer
  int speckle_min_area = 1;
  int speckle_max_area = 1;
  double flip_probability = 0.0;
  std::uint64_t seed = 0;

  bool is_zero() const { return speckles == 0 && flip_probability <= 0.0; }
  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

enum class NegativeMode { permutation, random_placement, mixed };

struct Range {
  double lo;
  double hi;
};

/// Placement constants, as fractions of the canvas unless noted.
struct LayoutConfig {
  int width = 224;
  int height = 224;
  Range eye_band{0.15, 0.35};
  Range nose_band{0.40, 0.60};
  Range mouth_band{0.65, 0.85};
  double min_vertical_gap = 0.15;  // eye level to nose, nose to mouth
  Range eye_offset{0.10, 0.18};    // eye centre to face axis
  double axis_jitter = 0.04;
  double nose_x_jitter = 0.03;
  double mouth_x_jitter = 0.03;
  double eye_y_jitter = 0.015;
  Range eye_half_w{0.06, 0.09};
  Range eye_half_h{0.05, 0.06};
  Range nose_half_w{0.05, 0.07};
  Range nose_half_h{0.06, 0.09};
  Range mouth_half_w{0.09, 0.12};
  Range mouth_half_h{0.05, 0.06};
  int min_gap_px = 2;
  int max_retries = 1000;
  NegativeMode negatives = NegativeMode::permutation;
};

class PlacementError : public Error {
 public:
  PlacementError() : Error("placement failed") {}
};

/// Eyes strictly above the nose, nose strictly above the mouth (y grows down).
/// Requires exactly the parts of a face: two eyes, one nose, one mouth.
inline bool face_constellation(const std::vector<PartBox>& parts) {
  std::vector<int> eyes;
  int nose = -1, mouth = -1, noses = 0, mouths = 0;
  for (const auto& p : parts) {
    if (p.concept_name == "eye") eyes.push_back(p.cy);
    if (p.concept_name == "nose") nose = p.cy, ++noses;
    if (p.concept_name == "mouth") mouth = p.cy, ++mouths;
  }
  if (eyes.size() != 2 || noses != 1 || mouths != 1) return false;
  return eyes[0] < nose && eyes[1] < nose && nose < mouth;
}

namespace detail {

inline bool boxes_clear(const PartBox& a, const PartBox& b, int gap) {
  return std::abs(a.cx - b.cx) > a.half_w + b.half_w + gap || std::abs(a.cy - b.cy) > a.half_h + b.half_h + gap;
}

inline bool layout_valid(const std::vector<PartBox>& parts, int width, int height, int gap) {
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.cx - p.half_w < 0 || p.cy - p.half_h < 0 || p.cx + p.half_w > width - 1 || p.cy + p.half_h > height - 1)
      return false;
    for (std::size_t j = i + 1; j < parts.size(); ++j)
      if (!boxes_clear(p, parts[j], gap)) return false;
  }
  return true;
}

inline int frac_px(double f, int extent) { return static_cast<int>(std::lround(f * extent)); }

inline int sample_px(Rng& rng, Range r, int extent) { return std::max(1, frac_px(rng.uniform(r.lo, r.hi), extent)); }

inline std::vector<PartBox> sample_sizes(Rng& rng, const LayoutConfig& c) {
  std::vector<PartBox> parts(4);
  parts[0] = {"eye", PartShape::ellipse, 0, 0, sample_px(rng, c.eye_half_w, c.width), sample_px(rng, c.eye_half_h, c.height)};
  parts[1] = {"eye", PartShape::ellipse, 0, 0, sample_px(rng, c.eye_half_w, c.width), sample_px(rng, c.eye_half_h, c.height)};
  parts[2] = {"nose", PartShape::rectangle, 0, 0, sample_px(rng, c.nose_half_w, c.width),
              sample_px(rng, c.nose_half_h, c.height)};
  parts[3] = {"mouth", PartShape::ellipse, 0, 0, sample_px(rng, c.mouth_half_w, c.width),
              sample_px(rng, c.mouth_half_h, c.height)};
  return parts;
}

inline bool place_face(Rng& rng, const LayoutConfig& c, std::vector<PartBox>& parts) {
  const double eye_level = rng.uniform(c.eye_band.lo, c.eye_band.hi);
  const double nose_lo = std::max(c.nose_band.lo, eye_level + c.min_vertical_gap);
  if (nose_lo > c.nose_band.hi) return false;
  const double nose_y = rng.uniform(nose_lo, c.nose_band.hi);
  const double mouth_lo = std::max(c.mouth_band.lo, nose_y + c.min_vertical_gap);
  if (mouth_lo > c.mouth_band.hi) return false;
  const double mouth_y = rng.uniform(mouth_lo, c.mouth_band.hi);
  const double axis = 0.5 + rng.uniform(-c.axis_jitter, c.axis_jitter);

  const double left = axis - rng.uniform(c.eye_offset.lo, c.eye_offset.hi);
  const double right = axis + rng.uniform(c.eye_offset.lo, c.eye_offset.hi);
  parts[0].cx = frac_px(left, c.width);
  parts[0].cy = frac_px(eye_level + rng.uniform(-c.eye_y_jitter, c.eye_y_jitter), c.height);
  parts[1].cx = frac_px(right, c.width);
  parts[1].cy = frac_px(eye_level + rng.uniform(-c.eye_y_jitter, c.eye_y_jitter), c.height);
  parts[2].cx = frac_px(axis + rng.uniform(-c.nose_x_jitter, c.nose_x_jitter), c.width);
  parts[2].cy = frac_px(nose_y, c.height);
  parts[3].cx = frac_px(axis + rng.uniform(-c.mouth_x_jitter, c.mouth_x_jitter), c.width);
  parts[3].cy = frac_px(mouth_y, c.height);
  return true;
}

// Non-identity permutations of the four slots that do more than swap the eyes.
inline const std::vector<std::array<int, 4>>& mixing_permutations() {
  static const std::vector<std::array<int, 4>> perms = [] {
    std::vector<std::array<int, 4>> out;
    std::array<int, 4> p{0, 1, 2, 3};
    do {
      const bool keeps_nose_and_mouth = p[2] == 2 && p[3] == 3;
      if (!keeps_nose_and_mouth) out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
  }();
  return perms;
}

}  // namespace detail

/// Samples part boxes for one scene. Positive scenes follow the face
/// constellation; negative scenes violate it.
inline SceneSpec layout_scene(std::uint64_t seed, Label label, const LayoutConfig& config = {}) {
  Rng rng(seed);
  SceneSpec spec;
  spec.width = config.width;
  spec.height = config.height;
  spec.label = label;
  spec.seed = seed;
  for (int attempt = 0; attempt < config.max_retries; ++attempt) {
    auto parts = detail::sample_sizes(rng, config);
    if (label == Label::positive) {
      if (!detail::place_face(rng, config, parts)) continue;
      if (!face_constellation(parts) || !detail::layout_valid(parts, config.width, config.height, config.min_gap_px))
        continue;
    } else {
      const bool permute = config.negatives == NegativeMode::permutation ||
                           (config.negatives == NegativeMode::mixed && rng.bernoulli(0.5));
      if (permute) {
        if (!detail::place_face(rng, config, parts)) continue;
        const auto& perms = detail::mixing_permutations();
        const auto& perm = perms[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(perms.size()) - 1))];
        std::array<Point, 4> slots;
        for (int i = 0; i < 4; ++i) slots[static_cast<std::size_t>(i)] = {parts[static_cast<std::size_t>(i)].cx, parts[static_cast<std::size_t>(i)].cy};
        for (int i = 0; i < 4; ++i) {
          const auto& s = slots[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
          parts[static_cast<std::size_t>(i)].cx = s.x;
          parts[static_cast<std::size_t>(i)].cy = s.y;
        }
      } else {
        for (auto& p : parts) {
          p.cx = static_cast<int>(rng.uniform_int(p.half_w, config.width - 1 - p.half_w));
          p.cy = static_cast<int>(rng.uniform_int(p.half_h, config.height - 1 - p.half_h));
        }
      }
      if (face_constellation(parts) || !detail::layout_valid(parts, config.width, config.height, config.min_gap_px))
        continue;
    }
    spec.parts = std::move(parts);
    return spec;
  }
  throw PlacementError();
}

inline void draw_part(BinaryMask& mask, const PartBox& p) {
  for (int y = p.cy - p.half_h; y <= p.cy + p.half_h; ++y) {
    for (int x = p.cx - p.half_w; x <= p.cx + p.half_w; ++x) {
      if (!mask.in_bounds(x, y)) continue;
      if (p.shape == PartShape::ellipse) {
        const double dx = static_cast<double>(x - p.cx) / p.half_w;
        const double dy = static_cast<double>(y - p.cy) / p.half_h;
        if (dx * dx + dy * dy > 1.0 + 1e-9) continue;
      }
      mask.set(x, y);
    }
  }
}

/// Rasterises the parts into one layer per concept (eye layer holds both eyes).
inline ConceptMaskSet render_scene(const SceneSpec& spec, std::string id,
                                   const std::vector<std::string>& concepts = default_concepts()) {
  ConceptMaskSet out{std::move(id), spec.label, {}};
  for (const auto& c : concepts) out.layers.push_back({c, BinaryMask(spec.width, spec.height)});
  for (const auto& p : spec.parts)
    if (BinaryMask* layer = out.layer(p.concept_name)) draw_part(*layer, p);
  return out;
}

namespace detail {

// Random 4-connected polyomino with `area` cells, relative coordinates.
inline std::vector<Point> random_blob(Rng& rng, int area) {
  std::vector<Point> cells{{0, 0}};
  while (static_cast<int>(cells.size()) < area) {
    const Point base = cells[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cells.size()) - 1))];
    static constexpr std::array<Point, 4> steps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    const Point step = steps[static_cast<std::size_t>(rng.uniform_int(0, 3))];
    const Point cand{base.x + step.x, base.y + step.y};
    if (std::find(cells.begin(), cells.end(), cand) == cells.end()) cells.push_back(cand);
  }
  return cells;
}

// True if no set pixel lies in the 8-neighbourhood of any cell at offset (ox, oy).
inline bool blob_fits(const BinaryMask& mask, const std::vector<Point>& blob, int ox, int oy) {
  for (const auto& c : blob) {
    const int x = c.x + ox, y = c.y + oy;
    if (!mask.in_bounds(x, y)) return false;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (mask.in_bounds(x + dx, y + dy) && mask.at(x + dx, y + dy)) return false;
  }
  return true;
}

}  // namespace detail

/// Adds isolated speckle clusters (never touching existing clusters or each
/// other) and then flips every pixel independently with `flip_probability`.
inline ConceptMaskSet add_detector_noise(ConceptMaskSet masks, const NoiseParams& params) {
  if (params.is_zero()) return masks;
  if (params.speckle_min_area < 1 || params.speckle_max_area < params.speckle_min_area)
    throw std::invalid_argument("invalid speckle area range");
  Rng rng(derive_seed(params.seed, hash_string(masks.id)));
  for (auto& layer : masks.layers) {
    BinaryMask& m = layer.mask;
    for (int s = 0; s < params.speckles; ++s) {
      const auto blob = detail::random_blob(rng, static_cast<int>(rng.uniform_int(params.speckle_min_area, params.speckle_max_area)));
      for (int attempt = 0; attempt < 100; ++attempt) {
        const int ox = static_cast<int>(rng.uniform_int(0, m.width() - 1));
        const int oy = static_cast<int>(rng.uniform_int(0, m.height() - 1));
        if (!detail::blob_fits(m, blob, ox, oy)) continue;
        for (const auto& c : blob) m.set(c.x + ox, c.y + oy);
        break;
      }
    }
    if (params.flip_probability > 0.0)
      for (auto& px : m.pixels())
        if (rng.bernoulli(params.flip_probability)) px ^= 1;
  }
  return masks;
}

inline ConceptMaskSet generate_scene(std::uint64_t seed, Label label, const NoiseParams& noise = {},
                                     std::string id = "e0", const LayoutConfig& layout = {}) {
  auto masks = render_scene(layout_scene(seed, label, layout), std::move(id));
  if (noise.is_zero()) return masks;
  NoiseParams scene_noise = noise;
  scene_noise.seed = derive_seed(noise.seed ^ seed, 0x5eed);
  return add_detector_noise(std::move(masks), scene_noise);
}

/// Index arithmetic for a generated dataset: positives first, then negatives,
/// ids `e<index>`, per-scene seeds derived from the master seed.
struct DatasetPlan {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return n_pos + n_neg; }
  Label label(std::size_t i) const { return i < n_pos ? Label::positive : Label::negative; }
  std::uint64_t scene_seed(std::size_t i) const { return derive_seed(seed, i); }
  std::string id(std::size_t i) const { return "e" + std::to_string(i); }

  SceneSpec spec(std::size_t i, const LayoutConfig& layout = {}) const { return layout_scene(scene_seed(i), label(i), layout); }
  ConceptMaskSet scene(std::size_t i, const NoiseParams& noise = {}, const LayoutConfig& layout = {}) const {
    return generate_scene(scene_seed(i), label(i), noise, id(i), layout);
  }
};

inline std::vector<ConceptMaskSet> generate_dataset(std::size_t n_pos, std::size_t n_neg, std::uint64_t seed,
                                                    const NoiseParams& noise = {}, const LayoutConfig& layout = {}) {
  const DatasetPlan plan{n_pos, n_neg, seed};
  std::vector<ConceptMaskSet> out;
  out.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) out.push_back(plan.scene(i, noise, layout));
  return out;
}

}  // namespace cilp
