#include <gtest/gtest.h>

#include <filesystem>

#include "cilp/bk_builder.hpp"
#include "cilp/scene.hpp"
#include "test_support.hpp"

using namespace cilp;
namespace fs = std::filesystem;

namespace {

std::set<std::string> relation_strings(const ExampleBK& bk) {
  std::set<std::string> out;
  for (const auto& a : bk.atoms)
    if (a.predicate != "contains" && a.predicate != "isa") out.insert(to_string(a));
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

std::map<std::string, Label> truth_of(const std::vector<ConceptMaskSet>& d) {
  std::map<std::string, Label> m;
  for (const auto& s : d) m[s.id] = s.label;
  return m;
}

}  // namespace

TEST(BuildBk, FaceRelationsByHand) {
  PartNamer namer;
  const auto bk = build_bk_from_parts("e1", Label::positive, cilp::testing::face_parts(namer));
  // p0 eye (60,50), p1 eye (160,50), p2 nose (110,100), p3 mouth (110,160)
  const std::set<std::string> expected{"left_of(p0, p1)", "left_of(p0, p2)", "top_of(p0, p2)", "top_of(p0, p3)",
                                       "top_of(p1, p2)",  "top_of(p1, p3)",  "left_of(p2, p1)", "top_of(p2, p3)"};
  EXPECT_EQ(relation_strings(bk), expected);
  EXPECT_EQ(std::count_if(bk.atoms.begin(), bk.atoms.end(), [](const Atom& a) { return a.predicate == "contains"; }), 4);
  EXPECT_EQ(std::count_if(bk.atoms.begin(), bk.atoms.end(), [](const Atom& a) { return a.predicate == "isa"; }), 4);
  EXPECT_EQ(bk.atoms.front(), make_atom("contains", {"e1", "p0"}));
  EXPECT_EQ(bk.atoms[1], make_atom("isa", {"p0", "eye"}));
}

TEST(BuildBk, WithoutEyePairs) {
  PartNamer namer;
  const auto bk = build_bk_from_parts("e1", Label::positive, cilp::testing::face_parts(namer), BkOptions{false});
  EXPECT_EQ(relation_strings(bk).count("left_of(p0, p1)"), 0u);
  EXPECT_EQ(relation_strings(bk).size(), 7u);
}

TEST(BuildBk, NoParts) {
  EXPECT_TRUE(build_bk_from_parts("e1", Label::negative, {}).atoms.empty());
  ConceptMaskSet empty{"e1", Label::negative, {{"eye", BinaryMask(4, 4)}}};
  PartNamer namer;
  EXPECT_TRUE(build_example_bk(empty, default_multiplicity(), namer).atoms.empty());
}

TEST(BuildBk, CoincidentParts) {
  diag::WarningCollector w;
  const auto bk = build_bk_from_parts("e1", Label::positive, {{"p0", "eye", {5, 5}}, {"p1", "nose", {5, 5}}});
  EXPECT_TRUE(relation_strings(bk).empty());
  EXPECT_TRUE(w.contains("coincident parts"));
}

TEST(BuildBk, FromGeneratedScene) {
  PartNamer namer(10);
  const auto bk = build_example_bk(generate_scene(0, Label::positive, {}, "e7"), default_multiplicity(), namer);
  EXPECT_EQ(bk.parts.size(), 4u);
  EXPECT_EQ(bk.parts.front().name, "p10");
  for (const auto& a : bk.atoms) {
    EXPECT_NE(a.predicate, "right_of");
    EXPECT_NE(a.predicate, "bottom_of");
  }
}

TEST(ExampleSet, PartitionsByPrediction) {
  const auto d = generate_dataset(50, 50, 1);
  const auto set = build_example_set(d, truth_of(d));
  EXPECT_EQ(set.positives.size(), 50u);
  EXPECT_EQ(set.negatives.size(), 50u);
  std::set<std::string> pos(set.positives.begin(), set.positives.end());
  for (const auto& n : set.negatives) EXPECT_FALSE(pos.count(n));
  EXPECT_EQ(set.facts.examples().size(), 100u);
}

TEST(ExampleSet, LabelsComeFromPredictions) {
  const auto d = generate_dataset(3, 3, 2);
  std::map<std::string, Label> all_pos;
  for (const auto& s : d) all_pos[s.id] = Label::positive;
  const auto set = build_example_set(d, all_pos);
  EXPECT_EQ(set.positives.size(), 6u);
  EXPECT_TRUE(set.negatives.empty());
}

TEST(ExampleSet, MissingPrediction) {
  const auto d = generate_dataset(2, 1, 2);
  auto labels = truth_of(d);
  labels.erase("e1");
  try {
    build_example_set(d, labels);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("e1"), std::string::npos);
  }
}

TEST(ExampleSet, Deterministic) {
  const auto d = generate_dataset(4, 4, 3);
  const auto a = build_example_set(d, truth_of(d));
  const auto b = build_example_set(d, truth_of(d));
  EXPECT_EQ(a.facts.all_atoms(), b.facts.all_atoms());
  EXPECT_EQ(background_text(a, default_modes()), background_text(b, default_modes()));
}

TEST(InductionFiles, SinglePositive) {
  PartNamer namer;
  const auto bk = build_bk_from_parts("e1", Label::positive, cilp::testing::face_parts(namer));
  const auto set = assemble_example_set({bk}, {{"e1", Label::positive}});
  const auto dir = fresh_dir("cilp_bk_single");
  const auto files = write_induction_files(set, dir, "train");
  EXPECT_EQ(read_file(files.positives), "face(e1).\n");
  EXPECT_EQ(read_file(files.negatives), "");
  const auto program = parse_program(read_file(files.background));
  EXPECT_EQ(program.facts().size(), 4u + 4u + relation_strings(bk).size());
  EXPECT_EQ(program.facts(), bk.atoms);
  fs::remove_all(dir);
}

TEST(InductionFiles, RoundTripAndInvariants) {
  const auto d = generate_dataset(10, 10, 4);
  const auto set = build_example_set(d, truth_of(d));
  const auto dir = fresh_dir("cilp_bk_roundtrip");
  const auto files = write_induction_files(set, dir, "train");
  const std::string b = read_file(files.background);
  EXPECT_EQ(b.find("right_of"), std::string::npos);
  EXPECT_EQ(b.find("bottom_of"), std::string::npos);

  const auto loaded = load_induction_files(dir, "train");
  EXPECT_EQ(loaded.modes, default_modes());
  EXPECT_EQ(loaded.set.positives, set.positives);
  EXPECT_EQ(loaded.set.negatives, set.negatives);
  const auto original = set.facts.all_atoms();
  const auto reread = loaded.set.facts.all_atoms();
  EXPECT_EQ(std::set<Atom>(original.begin(), original.end()), std::set<Atom>(reread.begin(), reread.end()));
  for (const auto& e : set.facts.examples()) EXPECT_EQ(loaded.set.facts.facts_of(e), set.facts.facts_of(e));

  std::map<std::string, int> contains_count, isa_count;
  for (const auto& a : original) {
    if (a.predicate == "contains") ++contains_count[a.args[1].name];
    if (a.predicate == "isa") ++isa_count[a.args[0].name];
  }
  EXPECT_EQ(contains_count.size(), isa_count.size());
  for (const auto& [p, n] : contains_count) {
    EXPECT_EQ(n, 1) << p;
    EXPECT_EQ(isa_count[p], 1) << p;
  }
  write_induction_files(set, dir, "again");
  EXPECT_EQ(read_file(dir / "again.b"), b);
  fs::remove_all(dir);
}

TEST(InductionFiles, UnwritableDirectory) {
  const auto d = generate_dataset(1, 0, 4);
  const auto set = build_example_set(d, truth_of(d));
  const auto blocker = fresh_dir("cilp_bk_blocker");
  write_file(blocker, "x");
  try {
    write_induction_files(set, blocker / "sub", "train");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("cilp_bk_blocker"), std::string::npos);
  }
  fs::remove(blocker);
}
