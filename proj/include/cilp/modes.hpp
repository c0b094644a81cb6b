#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "cilp/program_io.hpp"

namespace cilp {

enum class ArgMarker { input, output, constant };

struct ModeArg {
  ArgMarker marker = ArgMarker::input;
  std::string type;
  friend bool operator==(const ModeArg&, const ModeArg&) = default;
};

/// Aleph-style mode declaration: `modeh(1, face(+example))`,
/// `modeb(*, contains(+example, -part))`.
struct ModeDecl {
  static constexpr int unlimited = -1;

  bool head = false;
  int recall = unlimited;
  std::string predicate;
  std::vector<ModeArg> args;

  friend bool operator==(const ModeDecl&, const ModeDecl&) = default;
};

inline std::vector<ModeDecl> default_modes() {
  using M = ArgMarker;
  return {
      {true, 1, "face", {{M::input, "example"}}},
      {false, ModeDecl::unlimited, "contains", {{M::input, "example"}, {M::output, "part"}}},
      {false, 1, "isa", {{M::input, "part"}, {M::constant, "concept"}}},
      {false, ModeDecl::unlimited, "left_of", {{M::input, "part"}, {M::input, "part"}}},
      {false, ModeDecl::unlimited, "top_of", {{M::input, "part"}, {M::input, "part"}}},
  };
}

inline Directive to_directive(const ModeDecl& m) {
  DirectiveTerm templ{m.predicate, {}};
  for (const auto& a : m.args) {
    const char marker = a.marker == ArgMarker::input ? '+' : a.marker == ArgMarker::output ? '-' : '#';
    templ.args.push_back({std::string(1, marker) + a.type, {}});
  }
  DirectiveTerm recall{m.recall == ModeDecl::unlimited ? "*" : std::to_string(m.recall), {}};
  return {{m.head ? "modeh" : "modeb", {recall, templ}}};
}

/// nullopt for directives that are not mode declarations.
inline std::optional<ModeDecl> mode_from_directive(const Directive& d) {
  const auto& g = d.goal;
  if ((g.functor != "modeh" && g.functor != "modeb") || g.args.size() != 2) return std::nullopt;
  ModeDecl m;
  m.head = g.functor == "modeh";
  const auto& r = g.args[0].functor;
  if (r == "*") {
    m.recall = ModeDecl::unlimited;
  } else {
    try {
      m.recall = std::stoi(r);
    } catch (const std::logic_error&) {
      throw Error("bad recall in mode declaration: " + r);
    }
  }
  const auto& templ = g.args[1];
  m.predicate = templ.functor;
  for (const auto& a : templ.args) {
    if (a.functor.size() < 2) throw Error("bad mode argument: " + a.functor);
    ModeArg arg;
    switch (a.functor[0]) {
      case '+': arg.marker = ArgMarker::input; break;
      case '-': arg.marker = ArgMarker::output; break;
      case '#': arg.marker = ArgMarker::constant; break;
      default: throw Error("bad mode argument: " + a.functor);
    }
    arg.type = a.functor.substr(1);
    m.args.push_back(std::move(arg));
  }
  return m;
}

/// `determination(face/1, contains/2)` for every body mode.
inline std::vector<Directive> determinations(const std::vector<ModeDecl>& modes) {
  std::vector<Directive> out;
  const ModeDecl* head = nullptr;
  for (const auto& m : modes)
    if (m.head) head = &m;
  if (!head) return out;
  const std::string target = head->predicate + "/" + std::to_string(head->args.size());
  std::vector<std::string> seen;
  for (const auto& m : modes) {
    if (m.head) continue;
    const std::string body = m.predicate + "/" + std::to_string(m.args.size());
    if (std::find(seen.begin(), seen.end(), body) != seen.end()) continue;
    seen.push_back(body);
    out.push_back({{"determination", {{target, {}}, {body, {}}}}});
  }
  return out;
}

}  // namespace cilp
