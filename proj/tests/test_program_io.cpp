#include <gtest/gtest.h>

#include "cilp/modes.hpp"
#include "cilp/program_io.hpp"
#include "test_support.hpp"

using namespace cilp;

TEST(Parse, GroundFact) {
  const auto p = parse_program("face(e1).");
  ASSERT_EQ(p.facts().size(), 1u);
  EXPECT_EQ(p.facts()[0], make_atom("face", {"e1"}));
}

TEST(Parse, RuleWithTwoLiteralBody) {
  const auto p = parse_program("face(F) :- contains(F, A), isa(A, nose).");
  ASSERT_EQ(p.clauses().size(), 1u);
  const auto c = p.clauses()[0];
  EXPECT_EQ(c.head, make_atom("face", {"F"}));
  ASSERT_EQ(c.body.size(), 2u);
  EXPECT_EQ(c.body[1], make_atom("isa", {"A", "nose"}));
}

TEST(Parse, TwoConstantArgs) {
  const auto a = parse_program("left_of(p1, p2).").facts().at(0);
  EXPECT_EQ(a.arity(), 2u);
  EXPECT_TRUE(a.is_ground());
}

TEST(Parse, CommentsAndWhitespace) {
  const auto p = parse_program("% header\nface(e1). % trailing\n\n  face( e2 ) .\n");
  EXPECT_EQ(p.facts().size(), 2u);
}

TEST(Parse, VariableInGroundFact) {
  try {
    parse_program("face(e1).\nleft_of(P1, p2).");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("variable in ground fact"), std::string::npos);
  }
}

TEST(Parse, SyntaxErrorHasPosition) {
  try {
    parse_program("face(e1).\nface(e2");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_program("face(e1)"), ParseError);
  EXPECT_THROW(parse_program("face(e1) :- ."), ParseError);
  EXPECT_THROW(parse_program("Face(e1)."), ParseError);
}

TEST(Parse, EmptyBodyRule) {
  const auto p = parse_program("face(F) :- true.");
  ASSERT_EQ(p.clauses().size(), 1u);
  EXPECT_TRUE(p.clauses()[0].body.empty());
  EXPECT_EQ(serialize_program(p), "face(F) :- true.\n");
}

TEST(Parse, ModeDirectivesRoundTrip) {
  Program p;
  for (const auto& m : default_modes()) p.statements.emplace_back(to_directive(m));
  for (const auto& d : determinations(default_modes())) p.statements.emplace_back(d);
  const std::string text = serialize_program(p);
  EXPECT_NE(text.find(":- modeh(1, face(+example))."), std::string::npos);
  EXPECT_NE(text.find(":- modeb(*, contains(+example, -part))."), std::string::npos);
  EXPECT_NE(text.find(":- determination(face/1, top_of/2)."), std::string::npos);
  const auto back = parse_program(text);
  EXPECT_EQ(back, p);
  std::vector<ModeDecl> modes;
  for (const auto& d : back.directives())
    if (auto m = mode_from_directive(d)) modes.push_back(*m);
  EXPECT_EQ(modes, default_modes());
}

TEST(Serialize, Fact) { EXPECT_EQ(serialize_program({}, {make_atom("face", {"e1"})}), "face(e1).\n"); }

TEST(Serialize, FaceRuleKeepsLiteralOrder) {
  HornClause c{make_atom("face", {"F"}),
               {make_atom("contains", {"F", "A"}), make_atom("isa", {"A", "nose"}), make_atom("contains", {"F", "B"}),
                make_atom("isa", {"B", "mouth"}), make_atom("top_of", {"A", "B"}), make_atom("contains", {"F", "C"}),
                make_atom("top_of", {"C", "A"})}};
  EXPECT_EQ(serialize_program({c}, {}),
            "face(F) :- contains(F, A), isa(A, nose), contains(F, B), isa(B, mouth), top_of(A, B), contains(F, C), "
            "top_of(C, A).\n");
}

TEST(Serialize, RejectsNonGroundFact) { EXPECT_THROW(serialize_program({}, {make_atom("face", {"X"})}), Error); }

TEST(Serialize, RandomProgramsRoundTrip) {
  Rng rng(3);
  for (int round = 0; round < 200; ++round) {
    std::vector<HornClause> clauses;
    std::vector<Atom> atoms;
    const auto n_clauses = rng.uniform_int(0, 3);
    for (int i = 0; i < n_clauses; ++i) clauses.push_back(cilp::testing::random_clause(rng, 6));
    PartNamer namer;
    auto bk = build_bk_from_parts("e" + std::to_string(round), Label::positive,
                                  cilp::testing::random_parts(rng, namer, static_cast<std::size_t>(rng.uniform_int(0, 4))));
    atoms = bk.atoms;
    const std::string text = serialize_program(clauses, atoms);
    const auto back = parse_program(text);
    ASSERT_EQ(back.clauses(), clauses);
    ASSERT_EQ(back.facts(), atoms);
    ASSERT_EQ(serialize_program(back), text);
  }
}

TEST(Theory, RoundTripAndRejectsFacts) {
  const std::string text = "face(F) :- contains(F, A), isa(A, nose).\nface(F) :- true.\n";
  const auto t = parse_theory(text);
  EXPECT_EQ(t.clauses.size(), 2u);
  EXPECT_EQ(serialize_theory(t), text);
  EXPECT_THROW(parse_theory("face(e1)."), Error);
}
