#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cilp/common.hpp"

namespace cilp {

inline bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

inline bool is_constant_name(std::string_view s) {
  return !s.empty() && s[0] >= 'a' && s[0] <= 'z' && std::all_of(s.begin(), s.end(), is_ident_char);
}

inline bool is_variable_name(std::string_view s) {
  return !s.empty() && s[0] >= 'A' && s[0] <= 'Z' && std::all_of(s.begin(), s.end(), is_ident_char);
}

struct Term {
  enum class Kind : std::uint8_t { constant, variable };

  Kind kind = Kind::constant;
  std::string name;

  static Term constant(std::string name) {
    if (!is_constant_name(name)) throw std::invalid_argument("not a constant name: " + name);
    return Term{Kind::constant, std::move(name)};
  }
  static Term variable(std::string name) {
    if (!is_variable_name(name)) throw std::invalid_argument("not a variable name: " + name);
    return Term{Kind::variable, std::move(name)};
  }
  /// Picks the kind from the leading character (Prolog convention).
  static Term parse(std::string_view name) {
    return is_variable_name(name) ? variable(std::string(name)) : constant(std::string(name));
  }

  bool is_variable() const { return kind == Kind::variable; }

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  std::size_t arity() const { return args.size(); }
  bool is_ground() const {
    return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
  }

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

/// `make_atom("contains", {"F", "p1"})`: argument kinds follow the case of the first letter.
inline Atom make_atom(std::string predicate, std::initializer_list<std::string_view> args) {
  if (!is_constant_name(predicate)) throw std::invalid_argument("bad predicate name: " + predicate);
  Atom a{std::move(predicate), {}};
  a.args.reserve(args.size());
  for (auto s : args) a.args.push_back(Term::parse(s));
  return a;
}

struct HornClause {
  Atom head;
  std::vector<Atom> body;

  friend bool operator==(const HornClause&, const HornClause&) = default;
};

struct Theory {
  std::vector<HornClause> clauses;

  bool empty() const { return clauses.empty(); }
  friend bool operator==(const Theory&, const Theory&) = default;
};

inline std::string to_string(const Atom& a) {
  std::string out = a.predicate;
  if (!a.args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      if (i) out += ", ";
      out += a.args[i].name;
    }
    out += ')';
  }
  return out;
}

inline std::string to_string(const HornClause& c) {
  std::string out = to_string(c.head) + " :- ";
  if (c.body.empty()) return out + "true.";
  for (std::size_t i = 0; i < c.body.size(); ++i) {
    if (i) out += ", ";
    out += to_string(c.body[i]);
  }
  return out + '.';
}

/// Clause body translated to interned symbols. Argument codes >= 0 are
/// constant symbols, negative codes -(k+1) refer to variable slot k.
struct CompiledClause {
  struct Literal {
    int predicate = -1;
    std::vector<int> args;
  };
  std::vector<Literal> body;
  int variable_count = 0;
  /// Some body atom names a predicate or constant absent from the fact base.
  bool unsatisfiable = false;
};

/// Ground facts grouped per example, plus example-independent facts (isa/2
/// concept typing). Absent facts are false.
class FactBase {
 public:
  void add_example(std::string_view example) {
    if (!is_constant_name(example)) throw std::invalid_argument("bad example constant: " + std::string(example));
    const int sym = intern(example);
    if (example_slot_.count(sym)) return;
    example_slot_.emplace(sym, stores_.size());
    stores_.emplace_back();
    examples_.emplace_back(example);
  }

  /// Adds a ground atom to the example's own facts (registers the example if needed).
  void add_fact(std::string_view example, const Atom& atom) {
    add_example(example);
    insert(stores_[example_slot_.at(symbol(example))], atom);
  }

  void add_global(const Atom& atom) { insert(global_, atom); }

  bool has_example(std::string_view example) const {
    const auto s = find_symbol(example);
    return s && example_slot_.count(*s);
  }

  const std::vector<std::string>& examples() const { return examples_; }

  std::vector<Atom> facts_of(std::string_view example) const { return decode(store_for(example)); }
  std::vector<Atom> global_facts() const { return decode(global_); }

  /// All atoms: per-example facts in example order, then global facts.
  std::vector<Atom> all_atoms() const {
    std::vector<Atom> out;
    for (const auto& s : stores_) {
      auto part = decode(s);
      out.insert(out.end(), part.begin(), part.end());
    }
    auto g = decode(global_);
    out.insert(out.end(), g.begin(), g.end());
    return out;
  }

  std::size_t fact_count() const {
    std::size_t n = global_.facts.size();
    for (const auto& s : stores_) n += s.facts.size();
    return n;
  }

  std::optional<std::size_t> arity_of(std::string_view predicate) const {
    const auto s = find_symbol(predicate);
    if (!s) return std::nullopt;
    auto it = arity_.find(*s);
    if (it == arity_.end()) return std::nullopt;
    return it->second;
  }

  /// Facts visible from `example`, restricted to predicate `predicate` and,
  /// when `first_arg` is given, to that first argument.
  template <class Fn>
  void for_each_candidate(std::string_view example, std::string_view predicate,
                          std::optional<std::string_view> first_arg, Fn&& fn) const {
    const auto p = find_symbol(predicate);
    if (!p) return;
    std::optional<int> first;
    if (first_arg) {
      const auto f = find_symbol(*first_arg);
      if (!f) return;
      first = *f;
    }
    const Store& own = store_for(example);
    auto visit = [&](const Store& st) {
      for (std::uint32_t idx : st.candidates(*p, first)) fn(decode_fact(st.facts[idx]));
    };
    visit(own);
    visit(global_);
  }

  CompiledClause compile(const HornClause& clause) const {
    if (clause.head.args.size() != 1 || !clause.head.args[0].is_variable())
      throw std::invalid_argument("clause head must have a single variable argument: " + to_string(clause.head));
    CompiledClause out;
    std::unordered_map<std::string, int> slots;
    slots.emplace(clause.head.args[0].name, 0);
    out.variable_count = 1;
    for (const Atom& atom : clause.body) {
      CompiledClause::Literal lit;
      const auto p = find_symbol(atom.predicate);
      if (p) {
        auto it = arity_.find(*p);
        if (it != arity_.end() && it->second != atom.arity())
          throw Error("arity mismatch: " + atom.predicate + "/" + std::to_string(atom.arity()) +
                      " vs " + std::to_string(it->second));
        lit.predicate = *p;
      } else {
        out.unsatisfiable = true;
      }
      for (const Term& t : atom.args) {
        if (t.is_variable()) {
          auto [it, fresh] = slots.emplace(t.name, out.variable_count);
          if (fresh) ++out.variable_count;
          lit.args.push_back(-(it->second + 1));
        } else if (auto s = find_symbol(t.name)) {
          lit.args.push_back(*s);
        } else {
          out.unsatisfiable = true;
          lit.args.push_back(-1);
        }
      }
      out.body.push_back(std::move(lit));
    }
    return out;
  }

  /// Index of an example for the index-based `covers` overload.
  std::size_t example_index(std::string_view example) const {
    const auto s = find_symbol(example);
    if (!s) throw Error("unknown example: " + std::string(example));
    auto it = example_slot_.find(*s);
    if (it == example_slot_.end()) throw Error("unknown example: " + std::string(example));
    return it->second;
  }

  bool covers(const CompiledClause& clause, std::size_t example_index) const {
    if (example_index >= stores_.size()) throw Error("unknown example index");
    if (clause.unsatisfiable) return false;
    std::vector<int> binding(static_cast<std::size_t>(clause.variable_count), -1);
    binding[0] = symbol(examples_[example_index]);
    return match(clause, 0, binding, stores_[example_index]);
  }

  std::optional<int> find_symbol(std::string_view name) const {
    auto it = symbols_.find(std::string(name));
    if (it == symbols_.end()) return std::nullopt;
    return it->second;
  }

 private:
  struct Fact {
    int predicate;
    std::vector<int> args;
    friend auto operator<=>(const Fact&, const Fact&) = default;
  };

  static std::uint64_t key(int predicate, int first) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(predicate)) << 32) |
           static_cast<std::uint32_t>(first);
  }

  struct Store {
    std::vector<Fact> facts;
    std::set<Fact> seen;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> by_first;
    std::unordered_map<int, std::vector<std::uint32_t>> by_predicate;

    const std::vector<std::uint32_t>& candidates(int predicate, std::optional<int> first) const {
      static const std::vector<std::uint32_t> none;
      if (first) {
        auto it = by_first.find(key(predicate, *first));
        return it == by_first.end() ? none : it->second;
      }
      auto it = by_predicate.find(predicate);
      return it == by_predicate.end() ? none : it->second;
    }
  };

  int intern(std::string_view name) {
    auto [it, fresh] = symbols_.emplace(std::string(name), static_cast<int>(names_.size()));
    if (fresh) names_.emplace_back(name);
    return it->second;
  }

  int symbol(std::string_view name) const {
    auto s = find_symbol(name);
    if (!s) throw Error("unknown symbol: " + std::string(name));
    return *s;
  }

  const Store& store_for(std::string_view example) const { return stores_[example_index(example)]; }

  void insert(Store& store, const Atom& atom) {
    if (!atom.is_ground()) throw Error("variable in ground fact: " + to_string(atom));
    Fact f{intern(atom.predicate), {}};
    auto [it, fresh] = arity_.emplace(f.predicate, atom.arity());
    if (!fresh && it->second != atom.arity())
      throw Error("arity mismatch: " + atom.predicate + "/" + std::to_string(atom.arity()) + " vs " +
                  std::to_string(it->second));
    for (const Term& t : atom.args) f.args.push_back(intern(t.name));
    if (!store.seen.insert(f).second) return;
    const auto idx = static_cast<std::uint32_t>(store.facts.size());
    if (!f.args.empty()) store.by_first[key(f.predicate, f.args[0])].push_back(idx);
    store.by_predicate[f.predicate].push_back(idx);
    store.facts.push_back(std::move(f));
  }

  Atom decode_fact(const Fact& f) const {
    Atom a{names_[static_cast<std::size_t>(f.predicate)], {}};
    for (int s : f.args) a.args.push_back(Term{Term::Kind::constant, names_[static_cast<std::size_t>(s)]});
    return a;
  }

  std::vector<Atom> decode(const Store& s) const {
    std::vector<Atom> out;
    out.reserve(s.facts.size());
    for (const auto& f : s.facts) out.push_back(decode_fact(f));
    return out;
  }

  bool match(const CompiledClause& clause, std::size_t i, std::vector<int>& binding, const Store& own) const {
    if (i == clause.body.size()) return true;
    const auto& lit = clause.body[i];
    std::optional<int> first;
    if (!lit.args.empty()) {
      const int a0 = lit.args[0];
      if (a0 >= 0)
        first = a0;
      else if (binding[static_cast<std::size_t>(-a0 - 1)] >= 0)
        first = binding[static_cast<std::size_t>(-a0 - 1)];
    }
    std::vector<int> trail;
    auto undo = [&] {
      for (int s : trail) binding[static_cast<std::size_t>(s)] = -1;
      trail.clear();
    };
    for (const Store* st : {&own, &global_}) {
      for (std::uint32_t idx : st->candidates(lit.predicate, first)) {
        const Fact& f = st->facts[idx];
        if (f.args.size() != lit.args.size()) continue;
        bool ok = true;
        for (std::size_t k = 0; k < f.args.size() && ok; ++k) {
          const int code = lit.args[k];
          if (code >= 0) {
            ok = code == f.args[k];
            continue;
          }
          int& slot = binding[static_cast<std::size_t>(-code - 1)];
          if (slot < 0) {
            slot = f.args[k];
            trail.push_back(-code - 1);
          } else {
            ok = slot == f.args[k];
          }
        }
        const bool found = ok && match(clause, i + 1, binding, own);
        undo();
        if (found) return true;
      }
    }
    return false;
  }

  std::unordered_map<std::string, int> symbols_;
  std::vector<std::string> names_;
  std::unordered_map<int, std::size_t> arity_;
  std::unordered_map<int, std::size_t> example_slot_;
  std::vector<std::string> examples_;
  std::vector<Store> stores_;
  Store global_;
};

/// True iff some substitution binds the head variable to `example` and maps
/// every body atom onto a fact visible from that example. Substitutions need
/// not be injective.
inline bool covers(const HornClause& clause, const FactBase& facts, std::string_view example) {
  const std::size_t idx = facts.example_index(example);
  return facts.covers(facts.compile(clause), idx);
}

/// Disjunction over the theory's clauses; an empty theory covers nothing.
inline bool theory_covers(const Theory& theory, const FactBase& facts, std::string_view example) {
  const std::size_t idx = facts.example_index(example);
  if (theory.empty()) {
    diag::warn("empty theory covers no example");
    return false;
  }
  return std::any_of(theory.clauses.begin(), theory.clauses.end(),
                     [&](const HornClause& c) { return facts.covers(facts.compile(c), idx); });
}

}  // namespace cilp
