#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "cilp/common.hpp"
#include "cilp/mask.hpp"
#include "cilp/scene.hpp"

namespace cilp {

/// One 8-connected component of set pixels. `pixels` are in raster order.
struct Cluster {
  std::vector<Point> pixels;
  int min_x = 0;
  int max_x = 0;
  int min_y = 0;
  int max_y = 0;

  std::size_t area() const { return pixels.size(); }
  /// Topmost-leftmost pixel.
  Point anchor() const { return pixels.front(); }
};

/// Maximal 8-connected components, largest first; equal areas ordered by the
/// raster position of their topmost-leftmost pixel.
inline std::vector<Cluster> connected_components(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<Cluster> out;
  std::vector<Point> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      if (!mask.at(x, y) || seen[idx]) continue;
      Cluster c;
      c.min_x = c.max_x = x;
      c.min_y = c.max_y = y;
      seen[idx] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        c.pixels.push_back(p);
        c.min_x = std::min(c.min_x, p.x);
        c.max_x = std::max(c.max_x, p.x);
        c.min_y = std::min(c.min_y, p.y);
        c.max_y = std::max(c.max_y, p.y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx, ny = p.y + dy;
            if (!mask.in_bounds(nx, ny) || !mask.at(nx, ny)) continue;
            const std::size_t n = static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) + static_cast<std::size_t>(nx);
            if (seen[n]) continue;
            seen[n] = 1;
            stack.push_back({nx, ny});
          }
        }
      }
      std::sort(c.pixels.begin(), c.pixels.end(), [](Point a, Point b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
      out.push_back(std::move(c));
    }
  }
  // Discovery order is already raster order of anchors, so a stable sort by area suffices.
  std::stable_sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) { return a.area() > b.area(); });
  return out;
}

inline std::vector<Cluster> top_k_clusters(const BinaryMask& mask, std::size_t k) {
  if (k < 1) throw std::invalid_argument("top_k_clusters: k must be >= 1");
  auto all = connected_components(mask);
  if (all.size() > k) all.resize(k);
  return all;
}

struct Position {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

/// Midpoint of the cluster's bounding extremes.
inline Position centroid(const Cluster& cluster) {
  if (cluster.pixels.empty()) throw std::invalid_argument("centroid of empty cluster");
  return {(cluster.min_x + cluster.max_x) / 2.0, (cluster.min_y + cluster.max_y) / 2.0};
}

enum class RelationKind { left_of, top_of, right_of, bottom_of };

inline std::string_view to_string(RelationKind k) {
  switch (k) {
    case RelationKind::left_of: return "left_of";
    case RelationKind::top_of: return "top_of";
    case RelationKind::right_of: return "right_of";
    case RelationKind::bottom_of: return "bottom_of";
  }
  return "?";
}

struct PartInstance {
  std::string name;
  std::string concept_name;
  Position position;
  friend bool operator==(const PartInstance&, const PartInstance&) = default;
};

struct Relation {
  RelationKind kind;
  std::string from;
  std::string to;
  friend bool operator==(const Relation&, const Relation&) = default;
};

/// Direction cones of `a` relative to `b`: a wedge of half-slope 2 around each
/// axis, closed at the boundary, so diagonal offsets belong to two cones.
/// Result order: left_of, top_of, right_of, bottom_of.
inline std::vector<RelationKind> relation_kinds(Position a, Position b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double ax = std::abs(dx), ay = std::abs(dy);
  std::vector<RelationKind> out;
  if (dx < 0 && ay <= 2 * ax) out.push_back(RelationKind::left_of);
  if (dy < 0 && ax <= 2 * ay) out.push_back(RelationKind::top_of);
  if (dx > 0 && ay <= 2 * ax) out.push_back(RelationKind::right_of);
  if (dy > 0 && ax <= 2 * ay) out.push_back(RelationKind::bottom_of);
  return out;
}

inline std::vector<Relation> classify_relations(const PartInstance& a, const PartInstance& b) {
  if (a.name == b.name) throw std::invalid_argument("classify_relations: a part cannot relate to itself");
  if (a.position == b.position) {
    diag::warn("coincident parts " + a.name + " and " + b.name);
    return {};
  }
  std::vector<Relation> out;
  for (auto k : relation_kinds(a.position, b.position)) out.push_back({k, a.name, b.name});
  return out;
}

using Multiplicity = std::map<std::string, std::size_t>;

inline Multiplicity default_multiplicity() { return {{"eye", 2}, {"nose", 1}, {"mouth", 1}}; }

/// Hands out part constants p0, p1, ... unique across everything it names.
class PartNamer {
 public:
  explicit PartNamer(std::size_t first = 0) : next_(first) {}
  std::string operator()() { return "p" + std::to_string(next_++); }
  std::size_t next_index() const { return next_; }

 private:
  std::size_t next_;
};

/// Up to `multiplicity[c]` largest clusters per concept layer (default 1),
/// each turned into a named part at its bounding-box midpoint.
inline std::vector<PartInstance> extract_parts(const ConceptMaskSet& masks, const Multiplicity& multiplicity,
                                               PartNamer& namer) {
  std::vector<PartInstance> parts;
  for (const auto& layer : masks.layers) {
    auto it = multiplicity.find(layer.concept_name);
    const std::size_t k = it == multiplicity.end() ? 1 : it->second;
    if (k == 0) continue;
    for (const auto& cluster : top_k_clusters(layer.mask, k)) parts.push_back({namer(), layer.concept_name, centroid(cluster)});
  }
  return parts;
}

}  // namespace cilp
