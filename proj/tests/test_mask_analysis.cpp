#include <gtest/gtest.h>

#include <numeric>

#include "cilp/mask_analysis.hpp"
#include "cilp/scene.hpp"

using namespace cilp;

namespace {

BinaryMask from_rows(const std::vector<std::string>& rows) {
  BinaryMask m(static_cast<int>(rows.at(0).size()), static_cast<int>(rows.size()));
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == '#') m.set(x, y);
  return m;
}

// Union-find labelling, an independent reference for the component partition.
std::vector<std::size_t> reference_component_sizes(const BinaryMask& m) {
  const std::size_t n = m.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto idx = [&](int x, int y) { return static_cast<std::size_t>(y * m.width() + x); };
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      for (auto [dx, dy] : {std::pair{1, 0}, {0, 1}, {1, 1}, {-1, 1}}) {
        const int nx = x + dx, ny = y + dy;
        if (m.in_bounds(nx, ny) && m.at(nx, ny)) parent[find(idx(x, y))] = find(idx(nx, ny));
      }
    }
  std::map<std::size_t, std::size_t> sizes;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y)) ++sizes[find(idx(x, y))];
  std::vector<std::size_t> out;
  for (auto [_, s] : sizes) out.push_back(s);
  std::sort(out.rbegin(), out.rend());
  return out;
}

PartInstance part(std::string name, double x, double y) { return {std::move(name), "eye", {x, y}}; }

std::set<RelationKind> kinds(Position a, Position b) {
  const auto v = relation_kinds(a, b);
  return {v.begin(), v.end()};
}

}  // namespace

TEST(ConnectedComponents, Basics) {
  EXPECT_TRUE(connected_components(BinaryMask(4, 4)).empty());
  const auto two = connected_components(from_rows({"##..", "##..", "....", "..##", "..##"}));
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].area(), 4u);
  EXPECT_EQ(two[1].area(), 4u);
  EXPECT_EQ(two[0].anchor(), (Point{0, 0}));  // tie broken by topmost-leftmost pixel
  EXPECT_EQ(connected_components(from_rows({"#.", ".#"})).size(), 1u);
}

TEST(ConnectedComponents, SortedByAreaWithExtremes) {
  const auto cc = connected_components(from_rows({"#...###", "....###", "..#.###"}));
  ASSERT_EQ(cc.size(), 3u);
  EXPECT_EQ(cc[0].area(), 9u);
  EXPECT_EQ(cc[0].min_x, 4);
  EXPECT_EQ(cc[0].max_y, 2);
  EXPECT_EQ(cc[1].anchor(), (Point{0, 0}));
  EXPECT_EQ(cc[2].anchor(), (Point{2, 2}));
}

TEST(ConnectedComponents, AgreesWithUnionFind) {
  Rng rng(17);
  for (int round = 0; round < 300; ++round) {
    BinaryMask m(static_cast<int>(rng.uniform_int(1, 20)), static_cast<int>(rng.uniform_int(1, 20)));
    const double density = rng.uniform(0.1, 0.6);
    for (auto& px : m.pixels()) px = rng.bernoulli(density) ? 1 : 0;
    const auto cc = connected_components(m);
    std::vector<std::size_t> sizes;
    std::size_t total = 0;
    for (const auto& c : cc) {
      sizes.push_back(c.area());
      total += c.area();
      for (const auto& p : c.pixels) {
        ASSERT_TRUE(m.at(p.x, p.y));
        ASSERT_TRUE(p.x >= c.min_x && p.x <= c.max_x && p.y >= c.min_y && p.y <= c.max_y);
      }
    }
    ASSERT_EQ(total, m.count());
    ASSERT_EQ(sizes, reference_component_sizes(m));
  }
}

TEST(TopK, Selection) {
  const auto m = from_rows({"###..##", "###..##", "###....", "......."});
  ASSERT_EQ(top_k_clusters(m, 1).size(), 1u);
  EXPECT_EQ(top_k_clusters(m, 1)[0].area(), 9u);
  EXPECT_EQ(top_k_clusters(m, 2).size(), 2u);
  EXPECT_EQ(top_k_clusters(from_rows({"##"}), 2).size(), 1u);
  EXPECT_TRUE(top_k_clusters(BinaryMask(3, 3), 1).empty());
  EXPECT_THROW(top_k_clusters(m, 0), std::invalid_argument);
}

TEST(Centroid, Formula) {
  BinaryMask single(10, 10);
  single.set(7, 3);
  EXPECT_EQ(centroid(connected_components(single)[0]), (Position{7, 3}));
  BinaryMask block(10, 10);
  for (int y = 2; y <= 4; ++y)
    for (int x = 1; x <= 3; ++x) block.set(x, y);
  EXPECT_EQ(centroid(connected_components(block)[0]), (Position{2, 3}));
  const auto l_shape = from_rows({"##########", "#........."});
  EXPECT_EQ(centroid(connected_components(l_shape)[0]), (Position{4.5, 0.5}));
}

TEST(Centroid, InteriorPixelsDoNotMatter) {
  auto m = from_rows({"#####", "#####", "#####"});
  const auto before = centroid(connected_components(m)[0]);
  m.set(2, 1, false);
  EXPECT_EQ(centroid(connected_components(m)[0]), before);
}

TEST(Relations, BasicExamples) {
  EXPECT_EQ(kinds({50, 10}, {50, 40}), std::set{RelationKind::top_of});
  EXPECT_EQ(kinds({10, 50}, {40, 50}), std::set{RelationKind::left_of});
  EXPECT_EQ(kinds({10, 10}, {40, 40}), (std::set{RelationKind::top_of, RelationKind::left_of}));
}

TEST(Relations, ConeBoundariesAreClosed) {
  EXPECT_EQ(kinds({0, 0}, {20, 10}), (std::set{RelationKind::left_of, RelationKind::top_of}));  // |dx| = 2|dy|
  EXPECT_EQ(kinds({0, 0}, {21, 10}), std::set{RelationKind::left_of});
  EXPECT_EQ(kinds({0, 0}, {10, 20}), (std::set{RelationKind::left_of, RelationKind::top_of}));
  EXPECT_EQ(kinds({0, 0}, {10, 21}), std::set{RelationKind::top_of});
}

TEST(Relations, CoincidentPartsWarn) {
  diag::WarningCollector w;
  EXPECT_TRUE(classify_relations(part("p1", 3, 3), part("p2", 3, 3)).empty());
  EXPECT_TRUE(w.contains("coincident parts"));
  EXPECT_THROW(classify_relations(part("p1", 0, 0), part("p1", 1, 1)), std::invalid_argument);
}

TEST(Relations, DualityAndCount) {
  Rng rng(23);
  for (int i = 0; i < 20000; ++i) {
    const Position a{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    const Position b{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    const auto ab = kinds(a, b), ba = kinds(b, a);
    ASSERT_GE(ab.size(), 1u);
    ASSERT_LE(ab.size(), 2u);
    ASSERT_EQ(ab.count(RelationKind::top_of), ba.count(RelationKind::bottom_of));
    ASSERT_EQ(ab.count(RelationKind::left_of), ba.count(RelationKind::right_of));
  }
}

TEST(Relations, TranslationInvariant) {
  Rng rng(29);
  for (int i = 0; i < 2000; ++i) {
    const Position a{static_cast<double>(rng.uniform_int(0, 100)), static_cast<double>(rng.uniform_int(0, 100))};
    const Position b{static_cast<double>(rng.uniform_int(0, 100)), static_cast<double>(rng.uniform_int(0, 100))};
    const double tx = static_cast<double>(rng.uniform_int(-50, 50)), ty = static_cast<double>(rng.uniform_int(-50, 50));
    ASSERT_EQ(relation_kinds(a, b), relation_kinds({a.x + tx, a.y + ty}, {b.x + tx, b.y + ty}));
  }
}

TEST(ExtractParts, CleanPositiveScene) {
  PartNamer namer;
  const auto parts = extract_parts(generate_scene(0, Label::positive), default_multiplicity(), namer);
  ASSERT_EQ(parts.size(), 4u);
  std::map<std::string, int> counts;
  for (const auto& p : parts) ++counts[p.concept_name];
  EXPECT_EQ(counts, (std::map<std::string, int>{{"eye", 2}, {"mouth", 1}, {"nose", 1}}));
  EXPECT_EQ(namer.next_index(), 4u);
}

TEST(ExtractParts, CentroidsMatchBoxes) {
  const auto spec = layout_scene(8, Label::positive);
  PartNamer namer;
  const auto parts = extract_parts(render_scene(spec, "e8"), default_multiplicity(), namer);
  for (const auto& box : spec.parts) {
    const bool found = std::any_of(parts.begin(), parts.end(), [&](const PartInstance& p) {
      return p.concept_name == box.concept_name && p.position == Position{static_cast<double>(box.cx), static_cast<double>(box.cy)};
    });
    EXPECT_TRUE(found) << box.concept_name;
  }
}

TEST(ExtractParts, EmptyLayers) {
  ConceptMaskSet s{"e0", Label::negative, {{"eye", BinaryMask(8, 8)}, {"nose", BinaryMask(8, 8)}}};
  PartNamer namer;
  EXPECT_TRUE(extract_parts(s, default_multiplicity(), namer).empty());
}

TEST(ExtractParts, SpeckleInEyeLayerIsDropped) {
  ConceptMaskSet s{"e0", Label::positive, {{"eye", from_rows({"###.....###", "###.....###", "...........", ".....#....."})}}};
  PartNamer namer;
  const auto parts = extract_parts(s, default_multiplicity(), namer);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].position, (Position{1, 0.5}));
  EXPECT_EQ(parts[1].position, (Position{9, 0.5}));
  EXPECT_EQ(parts[1].name, "p1");
}
