#include <gtest/gtest.h>

#include "cilp/logic.hpp"
#include "test_support.hpp"

using namespace cilp;
using cilp::testing::brute_force_covers;

namespace {

HornClause parse_rule(const std::string& text) { return parse_theory(text).clauses.at(0); }

const char* kVggRule =
    "face(F) :- contains(F, A), isa(A, nose), contains(F, B), isa(B, mouth), top_of(A, B), contains(F, C), top_of(C, A).";

ExampleSet face_set(bool correct) {
  PartNamer namer;
  auto bk = build_bk_from_parts("e1", Label::positive, cilp::testing::face_parts(namer, correct));
  return assemble_example_set({bk}, {{"e1", Label::positive}});
}

}  // namespace

TEST(Term, NamingConvention) {
  EXPECT_TRUE(Term::parse("Abc").is_variable());
  EXPECT_FALSE(Term::parse("abc").is_variable());
  EXPECT_THROW(Term::constant("Abc"), std::invalid_argument);
  EXPECT_THROW(Term::variable("abc"), std::invalid_argument);
  EXPECT_THROW(Term::constant("a-b"), std::invalid_argument);
}

TEST(Atom, Rendering) {
  EXPECT_EQ(to_string(make_atom("left_of", {"p1", "p2"})), "left_of(p1, p2)");
  EXPECT_TRUE(make_atom("left_of", {"p1", "p2"}).is_ground());
  EXPECT_FALSE(make_atom("left_of", {"A", "p2"}).is_ground());
}

TEST(Covers, EmptyBodyCoversAnyExample) {
  const auto set = face_set(true);
  EXPECT_TRUE(covers(HornClause{make_atom("face", {"F"}), {}}, set.facts, "e1"));
}

TEST(Covers, FaceRuleOnCorrectFace) {
  const auto set = face_set(true);
  const auto rule = parse_rule(kVggRule);
  EXPECT_TRUE(covers(rule, set.facts, "e1"));
  EXPECT_TRUE(brute_force_covers(rule, set.facts, "e1"));
}

TEST(Covers, FaceRuleRejectsMouthOnTop) {
  const auto set = face_set(false);
  const auto rule = parse_rule(kVggRule);
  EXPECT_FALSE(covers(rule, set.facts, "e1"));
  EXPECT_FALSE(brute_force_covers(rule, set.facts, "e1"));
}

TEST(Covers, UnknownExample) {
  const auto set = face_set(true);
  try {
    covers(parse_rule(kVggRule), set.facts, "e9");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unknown example"), std::string::npos);
  }
}

TEST(Covers, ArityMismatch) {
  const auto set = face_set(true);
  try {
    covers(parse_rule("face(F) :- contains(F)."), set.facts, "e1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("arity mismatch"), std::string::npos);
  }
}

TEST(Covers, UnknownPredicateOrConstantIsFalse) {
  const auto set = face_set(true);
  EXPECT_FALSE(covers(parse_rule("face(F) :- contains(F, A), isa(A, ear)."), set.facts, "e1"));
  EXPECT_FALSE(covers(parse_rule("face(F) :- contains(F, A), bottom_of(A, B)."), set.facts, "e1"));
}

TEST(Covers, SubstitutionsNeedNotBeInjective) {
  FactBase facts;
  facts.add_fact("e1", make_atom("contains", {"e1", "p1"}));
  EXPECT_TRUE(covers(parse_rule("face(F) :- contains(F, A), contains(F, B)."), facts, "e1"));
}

TEST(Covers, SharedVariableMustAgree) {
  FactBase facts;
  facts.add_fact("e1", make_atom("contains", {"e1", "p1"}));
  facts.add_fact("e1", make_atom("contains", {"e1", "p2"}));
  facts.add_fact("e1", make_atom("left_of", {"p1", "p2"}));
  EXPECT_TRUE(covers(parse_rule("face(F) :- contains(F, A), contains(F, B), left_of(A, B)."), facts, "e1"));
  EXPECT_FALSE(covers(parse_rule("face(F) :- contains(F, A), left_of(A, A)."), facts, "e1"));
}

TEST(Covers, FactsOfOtherExamplesAreInvisible) {
  FactBase facts;
  facts.add_fact("e1", make_atom("contains", {"e1", "p1"}));
  facts.add_example("e2");
  facts.add_fact("e2", make_atom("left_of", {"p1", "p1"}));
  EXPECT_FALSE(covers(parse_rule("face(F) :- contains(F, A), left_of(A, A)."), facts, "e1"));
}

TEST(TheoryCovers, EmptyTheoryWarnsAndIsFalse) {
  const auto set = face_set(true);
  diag::WarningCollector w;
  EXPECT_FALSE(theory_covers(Theory{}, set.facts, "e1"));
  EXPECT_TRUE(w.contains("empty theory"));
}

TEST(TheoryCovers, Disjunction) {
  FactBase facts;
  facts.add_fact("e1", make_atom("contains", {"e1", "p1"}));
  facts.add_global(make_atom("isa", {"p1", "nose"}));
  facts.add_fact("e2", make_atom("contains", {"e2", "p2"}));
  facts.add_global(make_atom("isa", {"p2", "mouth"}));
  Theory only_e1{{parse_rule("face(F) :- contains(F, A), isa(A, nose).")}};
  EXPECT_TRUE(theory_covers(only_e1, facts, "e1"));
  EXPECT_FALSE(theory_covers(only_e1, facts, "e2"));
  Theory two{{parse_rule("face(F) :- contains(F, A), isa(A, eye)."), parse_rule("face(F) :- contains(F, A), isa(A, mouth).")}};
  EXPECT_TRUE(theory_covers(two, facts, "e2"));
  EXPECT_FALSE(covers(two.clauses[0], facts, "e2"));
}

TEST(FactBase, DeduplicatesAndGroups) {
  FactBase facts;
  facts.add_fact("e1", make_atom("contains", {"e1", "p1"}));
  facts.add_fact("e1", make_atom("contains", {"e1", "p1"}));
  facts.add_global(make_atom("isa", {"p1", "eye"}));
  EXPECT_EQ(facts.fact_count(), 2u);
  EXPECT_EQ(facts.facts_of("e1").size(), 1u);
  EXPECT_EQ(facts.global_facts().size(), 1u);
  EXPECT_EQ(facts.examples(), std::vector<std::string>{"e1"});
  EXPECT_THROW(facts.add_fact("e1", make_atom("contains", {"e1"})), Error);
  EXPECT_THROW(facts.add_global(make_atom("isa", {"X", "eye"})), Error);
}

TEST(CoversProperty, AgreesWithBruteForce) {
  Rng rng(7);
  for (int round = 0; round < 100; ++round) {
    const auto set = cilp::testing::random_example_set(rng, 3, 0, 5);
    for (int k = 0; k < 5; ++k) {
      const auto clause = cilp::testing::random_clause(rng, 6);
      for (const auto& e : set.facts.examples())
        ASSERT_EQ(covers(clause, set.facts, e), brute_force_covers(clause, set.facts, e)) << to_string(clause) << " on " << e;
    }
  }
}

TEST(CoversProperty, MonotoneInBodyLength) {
  Rng rng(11);
  for (int round = 0; round < 200; ++round) {
    const auto set = cilp::testing::random_example_set(rng, 2, 1, 4);
    auto clause = cilp::testing::random_clause(rng, 5);
    auto longer = clause;
    HornClause extra;
    while (extra.body.empty()) extra = cilp::testing::random_clause(rng, 3);
    longer.body.push_back(extra.body.front());
    for (const auto& e : set.facts.examples()) {
      if (!covers(clause, set.facts, e)) {
        ASSERT_FALSE(covers(longer, set.facts, e));
      }
    }
  }
}

TEST(CoversProperty, InvariantUnderVariableRenaming) {
  Rng rng(13);
  const std::map<std::string, std::string> renaming{{"A", "X"}, {"B", "Part"}, {"C", "Q1"}, {"D", "Z_z"}};
  for (int round = 0; round < 200; ++round) {
    const auto set = cilp::testing::random_example_set(rng, 2, 0, 4);
    const auto clause = cilp::testing::random_clause(rng, 6);
    auto renamed = clause;
    for (auto& lit : renamed.body)
      for (auto& t : lit.args)
        if (t.is_variable() && t.name != "F") t.name = renaming.at(t.name);
    for (const auto& e : set.facts.examples()) ASSERT_EQ(covers(clause, set.facts, e), covers(renamed, set.facts, e));
  }
}
