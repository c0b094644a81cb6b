#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cilp/bk_builder.hpp"
#include "cilp/logic.hpp"
#include "cilp/modes.hpp"

namespace cilp {

/// Aleph-style search limits.
struct SearchConfig {
  int noise = 0;                 // max negatives a clause may cover
  int min_pos = 2;               // min positives a clause must cover
  int max_body_literals = 8;
  int max_var_depth = 2;
  std::size_t max_nodes = 200000;  // evaluated clauses per search; 0 = unbounded
  std::size_t max_bottom_literals = 64;
  std::uint64_t seed = 0;        // reserved: the search is deterministic
};

inline void validate(const SearchConfig& c) {
  if (c.noise < 0 || c.min_pos < 0 || c.max_var_depth < 0) throw std::invalid_argument("search limits must be >= 0");
  if (c.max_body_literals < 1) throw std::invalid_argument("max_body_literals must be >= 1");
  if (c.max_bottom_literals < 1 || c.max_bottom_literals > 64)
    throw std::invalid_argument("max_bottom_literals must be in [1, 64]");
}

struct ScoredClause {
  HornClause clause;
  std::size_t positives = 0;  // P
  std::size_t negatives = 0;  // N
  std::vector<std::size_t> literals;  // indices into the bottom clause body

  long score() const { return static_cast<long>(positives) - static_cast<long>(negatives); }
};

class NoAdmissibleClause : public Error {
 public:
  explicit NoAdmissibleClause(ScoredClause best_rejected)
      : Error("no admissible clause (best rejected: " + to_string(best_rejected.clause) + " P=" +
              std::to_string(best_rejected.positives) + " N=" + std::to_string(best_rejected.negatives) + ")"),
        best_rejected_(std::move(best_rejected)) {}

  const ScoredClause& best_rejected() const { return best_rejected_; }

 private:
  ScoredClause best_rejected_;
};

namespace detail {

inline std::string bottom_variable_name(std::size_t n) {
  static const std::string letters = "ABCDEGHIJKLMNOPQRSTUVWXYZ";  // F is the head variable
  return n < letters.size() ? std::string(1, letters[n]) : "V" + std::to_string(n);
}

/// Renames body-only variables to A, B, C, ... in order of first appearance.
inline HornClause standardize_variables(const HornClause& c) {
  std::map<std::string, std::string> names;
  for (const auto& t : c.head.args)
    if (t.kind == Term::Kind::variable) names.emplace(t.name, t.name);
  std::size_t next = 0;
  HornClause out{c.head, c.body};
  for (auto& lit : out.body) {
    for (auto& t : lit.args) {
      if (t.kind != Term::Kind::variable) continue;
      auto it = names.find(t.name);
      if (it == names.end()) {
        std::string fresh;
        do fresh = bottom_variable_name(next++);
        while (std::any_of(c.head.args.begin(), c.head.args.end(), [&](const Term& h) { return h.name == fresh; }));
        it = names.emplace(t.name, fresh).first;
      }
      t.name = it->second;
    }
  }
  return out;
}

class BottomBuilder {
 public:
  BottomBuilder(std::string_view example, const FactBase& facts, const std::vector<ModeDecl>& modes,
                const SearchConfig& config)
      : example_(example), facts_(facts), modes_(modes), config_(config) {}

  HornClause build() {
    const ModeDecl* head = nullptr;
    for (const auto& m : modes_)
      if (m.head) head = &m;
    if (!head) throw Error("no head mode declaration");
    if (head->args.size() != 1 || head->args[0].marker != ArgMarker::input)
      throw Error("head mode must have a single input argument");
    known_.push_back({std::string(example_), "F", head->args[0].type, 0});
    HornClause clause{{head->predicate, {Term::variable("F")}}, {}};
    closure();
    for (int depth = 0; depth < config_.max_var_depth; ++depth) {
      for (std::size_t i = 0; i < known_.size(); ++i) {
        if (known_[i].depth != depth) continue;
        for (const auto& m : modes_) {
          if (m.head || !has_output(m)) continue;
          expand_from(i, m, depth);
        }
      }
    }
    clause.body = std::move(literals_);
    return clause;
  }

 private:
  struct Known {
    std::string constant;
    std::string variable;
    std::string type;
    int depth;
  };

  static bool has_output(const ModeDecl& m) {
    return std::any_of(m.args.begin(), m.args.end(), [](const ModeArg& a) { return a.marker == ArgMarker::output; });
  }

  bool full() const { return literals_.size() >= config_.max_bottom_literals; }

  std::optional<std::size_t> find_known(const std::string& constant) const {
    for (std::size_t i = 0; i < known_.size(); ++i)
      if (known_[i].constant == constant) return i;
    return std::nullopt;
  }

  bool add_literal(Atom a) {
    if (full() || !seen_.insert(a).second) return false;
    literals_.push_back(std::move(a));
    return true;
  }

  // Enumerates input tuples (indices into known_) for mode m in lexicographic order.
  template <class Fn>
  void for_each_input_tuple(const ModeDecl& m, std::optional<std::size_t> first_fixed, int max_depth, Fn&& fn) const {
    std::vector<std::size_t> inputs;
    for (std::size_t k = 0; k < m.args.size(); ++k)
      if (m.args[k].marker == ArgMarker::input) inputs.push_back(k);
    std::vector<std::size_t> tuple(inputs.size());
    auto rec = [&](auto&& self, std::size_t pos) -> void {
      if (pos == inputs.size()) {
        fn(inputs, tuple);
        return;
      }
      const auto& type = m.args[inputs[pos]].type;
      if (pos == 0 && first_fixed) {
        if (known_[*first_fixed].type != type) return;
        tuple[0] = *first_fixed;
        self(self, pos + 1);
        return;
      }
      for (std::size_t i = 0; i < known_.size(); ++i) {
        if (known_[i].type != type || known_[i].depth > max_depth) continue;
        tuple[pos] = i;
        self(self, pos + 1);
      }
    };
    rec(rec, 0);
  }

  std::vector<Atom> matching_facts(const ModeDecl& m, const std::vector<std::size_t>& inputs,
                                   const std::vector<std::size_t>& tuple) const {
    std::vector<Atom> out;
    std::optional<std::string_view> first;
    if (!inputs.empty() && inputs[0] == 0) first = known_[tuple[0]].constant;
    facts_.for_each_candidate(example_, m.predicate, first, [&](const Atom& f) {
      if (f.arity() != m.args.size()) return;
      for (std::size_t k = 0; k < inputs.size(); ++k)
        if (f.args[inputs[k]].name != known_[tuple[k]].constant) return;
      out.push_back(f);
    });
    return out;
  }

  // Literals whose arguments are all inputs or constants, over known terms.
  void closure() {
    for (const auto& m : modes_) {
      if (m.head || has_output(m)) continue;
      for_each_input_tuple(m, std::nullopt, config_.max_var_depth, [&](const auto& inputs, const auto& tuple) {
        std::size_t used = 0;
        for (const auto& f : matching_facts(m, inputs, tuple)) {
          if (m.recall != ModeDecl::unlimited && used >= static_cast<std::size_t>(m.recall)) break;
          Atom lit{m.predicate, {}};
          std::size_t next_input = 0;
          for (std::size_t k = 0; k < m.args.size(); ++k) {
            if (m.args[k].marker == ArgMarker::input)
              lit.args.push_back(Term::variable(known_[tuple[next_input++]].variable));
            else
              lit.args.push_back(f.args[k]);
          }
          add_literal(std::move(lit));
          ++used;
        }
      });
    }
  }

  void expand_from(std::size_t term, const ModeDecl& m, int depth) {
    for_each_input_tuple(m, term, depth, [&](const auto& inputs, const auto& tuple) {
      std::size_t used = 0;
      for (const auto& f : matching_facts(m, inputs, tuple)) {
        if (full()) return;
        if (m.recall != ModeDecl::unlimited && used >= static_cast<std::size_t>(m.recall)) break;
        Atom lit{m.predicate, {}};
        std::size_t next_input = 0;
        bool skip = false;
        for (std::size_t k = 0; k < m.args.size() && !skip; ++k) {
          const auto& arg = m.args[k];
          if (arg.marker == ArgMarker::input) {
            lit.args.push_back(Term::variable(known_[tuple[next_input++]].variable));
          } else if (arg.marker == ArgMarker::constant) {
            lit.args.push_back(f.args[k]);
          } else if (auto idx = find_known(f.args[k].name)) {
            lit.args.push_back(Term::variable(known_[*idx].variable));
          } else if (depth + 1 <= config_.max_var_depth) {
            known_.push_back({f.args[k].name, bottom_variable_name(next_var_++), arg.type, depth + 1});
            lit.args.push_back(Term::variable(known_.back().variable));
          } else {
            skip = true;
          }
        }
        if (skip) continue;
        ++used;
        if (add_literal(std::move(lit))) closure();
      }
    });
  }

  std::string_view example_;
  const FactBase& facts_;
  const std::vector<ModeDecl>& modes_;
  const SearchConfig& config_;
  std::vector<Known> known_;
  std::vector<Atom> literals_;
  std::set<Atom> seen_;
  std::size_t next_var_ = 0;
};

}  // namespace detail

/// Most specific clause for `seed_example`: the example's facts reachable
/// through the modes, with constants replaced by variables (except `#` args).
inline HornClause bottom_clause(std::string_view seed_example, const FactBase& facts,
                                const std::vector<ModeDecl>& modes = default_modes(), const SearchConfig& config = {}) {
  validate(config);
  if (!facts.has_example(seed_example)) throw Error("unknown example: " + std::string(seed_example));
  return detail::BottomBuilder(seed_example, facts, modes, config).build();
}

namespace detail {

inline std::vector<std::string> distinct(std::span<const std::string> xs) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& x : xs)
    if (seen.insert(x).second) out.push_back(x);
  return out;
}

/// Subsets of a bottom clause body, encoded as bitmasks over literal indices.
class SubsetSearch {
 public:
  SubsetSearch(const HornClause& bottom, const FactBase& facts, std::span<const std::string> positives,
               std::span<const std::string> negatives, const SearchConfig& config)
      : bottom_(bottom), facts_(facts), config_(config) {
    validate(config);
    if (bottom.body.size() > 64) throw Error("bottom clause longer than 64 literals");
    if (bottom.head.args.size() != 1 || !bottom.head.args[0].is_variable())
      throw std::invalid_argument("clause head must have a single variable argument");
    for (const auto& e : distinct(positives)) pos_.push_back(facts.example_index(e));
    for (const auto& e : distinct(negatives)) neg_.push_back(facts.example_index(e));
    // A literal may join a subset only once the literals introducing its
    // other variables are present.
    std::map<std::string, int> producer;
    producer[bottom.head.args[0].name] = -1;
    requires_.resize(bottom.body.size(), 0);
    for (std::size_t j = 0; j < bottom.body.size(); ++j) {
      for (const auto& t : bottom.body[j].args) {
        if (!t.is_variable()) continue;
        auto [it, fresh] = producer.emplace(t.name, static_cast<int>(j));
        if (!fresh && it->second >= 0 && it->second != static_cast<int>(j))
          requires_[j] |= std::uint64_t{1} << it->second;
      }
    }
  }

  ScoredClause run() {
    Node root = evaluate_root();
    consider(root);
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    visited_.insert(0);
    if (promising(root)) open.push(std::move(root));
    const std::size_t n = bottom_.body.size();
    while (!open.empty() && !budget_exhausted()) {
      Node node = open.top();
      open.pop();
      if (!promising(node)) continue;
      for (std::size_t j = 0; j < n && !budget_exhausted(); ++j) {
        const std::uint64_t bit = std::uint64_t{1} << j;
        if ((node.mask & bit) || (requires_[j] & ~node.mask)) continue;
        const std::uint64_t mask = node.mask | bit;
        if (!visited_.insert(mask).second) continue;
        Node child = evaluate(node, mask);
        consider(child);
        if (promising(child)) open.push(std::move(child));
      }
    }
    if (!best_) throw NoAdmissibleClause(to_scored(*best_rejected_));
    return to_scored(*best_);
  }

 private:
  struct Node {
    std::uint64_t mask = 0;
    int length = 0;
    std::size_t p = 0;
    std::size_t n = 0;
    std::vector<std::uint64_t> pos_cov;
    std::vector<std::uint64_t> neg_cov;

    long score() const { return static_cast<long>(p) - static_cast<long>(n); }
  };

  // Equal-length subsets: the one holding the lowest differing literal comes first.
  static bool lex_less(std::uint64_t a, std::uint64_t b) {
    if (a == b) return false;
    const std::uint64_t d = a ^ b;
    return (a & (d & (~d + 1))) != 0;
  }

  static bool better(const Node& a, const Node& b) {
    if (a.score() != b.score()) return a.score() > b.score();
    if (a.length != b.length) return a.length < b.length;
    return lex_less(a.mask, b.mask);
  }

  struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const { return better(b, a); }
  };

  bool admissible(const Node& x) const {
    return x.n <= static_cast<std::size_t>(config_.noise) && x.p >= static_cast<std::size_t>(config_.min_pos) &&
           x.length <= config_.max_body_literals;
  }

  // Refinements only lose coverage, so P bounds every descendant's score.
  bool promising(const Node& x) const {
    if (x.length >= config_.max_body_literals || x.n == 0) return false;
    if (x.p < static_cast<std::size_t>(config_.min_pos)) return false;
    if (!best_) return true;
    const long bound = static_cast<long>(x.p);
    return bound > best_->score() || (bound == best_->score() && x.length + 1 <= best_->length);
  }

  bool budget_exhausted() const { return config_.max_nodes != 0 && evaluated_ >= config_.max_nodes; }

  void consider(const Node& x) {
    if (admissible(x)) {
      if (!best_ || better(x, *best_)) best_ = x;
    } else if (!best_rejected_ || better(x, *best_rejected_)) {
      best_rejected_ = x;
    }
  }

  HornClause clause_for(std::uint64_t mask) const {
    HornClause c{bottom_.head, {}};
    for (std::size_t j = 0; j < bottom_.body.size(); ++j)
      if (mask & (std::uint64_t{1} << j)) c.body.push_back(bottom_.body[j]);
    return c;
  }

  static std::vector<std::uint64_t> full_bits(std::size_t count) {
    std::vector<std::uint64_t> bits((count + 63) / 64, ~std::uint64_t{0});
    if (count % 64) bits.back() = (std::uint64_t{1} << (count % 64)) - 1;
    if (count == 0) bits.clear();
    return bits;
  }

  std::size_t filter(const CompiledClause& cc, const std::vector<std::size_t>& examples,
                     std::vector<std::uint64_t>& bits) const {
    std::size_t count = 0;
    for (std::size_t w = 0; w < bits.size(); ++w) {
      std::uint64_t word = bits[w];
      while (word) {
        const int b = std::countr_zero(word);
        word &= word - 1;
        const std::size_t i = w * 64 + static_cast<std::size_t>(b);
        if (facts_.covers(cc, examples[i]))
          ++count;
        else
          bits[w] &= ~(std::uint64_t{1} << b);
      }
    }
    return count;
  }

  Node evaluate_root() {
    Node root;
    root.pos_cov = full_bits(pos_.size());
    root.neg_cov = full_bits(neg_.size());
    const CompiledClause cc = facts_.compile(clause_for(0));
    root.p = filter(cc, pos_, root.pos_cov);
    root.n = filter(cc, neg_, root.neg_cov);
    ++evaluated_;
    return root;
  }

  Node evaluate(const Node& parent, std::uint64_t mask) {
    Node child;
    child.mask = mask;
    child.length = std::popcount(mask);
    child.pos_cov = parent.pos_cov;
    child.neg_cov = parent.neg_cov;
    const CompiledClause cc = facts_.compile(clause_for(mask));
    child.p = filter(cc, pos_, child.pos_cov);
    child.n = filter(cc, neg_, child.neg_cov);
    ++evaluated_;
    return child;
  }

  ScoredClause to_scored(const Node& x) const {
    ScoredClause s{standardize_variables(clause_for(x.mask)), x.p, x.n, {}};
    for (std::size_t j = 0; j < bottom_.body.size(); ++j)
      if (x.mask & (std::uint64_t{1} << j)) s.literals.push_back(j);
    return s;
  }

  const HornClause& bottom_;
  const FactBase& facts_;
  const SearchConfig& config_;
  std::vector<std::size_t> pos_;
  std::vector<std::size_t> neg_;
  std::vector<std::uint64_t> requires_;
  std::unordered_set<std::uint64_t> visited_;
  std::optional<Node> best_;
  std::optional<Node> best_rejected_;
  std::size_t evaluated_ = 0;
};

}  // namespace detail

/// Best-first branch-and-bound over subsets of the bottom clause body.
/// Maximises P - N subject to N <= noise, P >= min_pos and the length limit;
/// ties go to the shorter clause, then to the earlier literals.
inline ScoredClause search_clause(const HornClause& bottom, const FactBase& facts, std::span<const std::string> positives,
                                  std::span<const std::string> negatives, const SearchConfig& config = {}) {
  return detail::SubsetSearch(bottom, facts, positives, negatives, config).run();
}

inline ScoredClause search_clause(const HornClause& bottom, const ExampleSet& set, const SearchConfig& config = {}) {
  return search_clause(bottom, set.facts, set.positives, set.negatives, config);
}

struct InductionResult {
  Theory theory;
  std::vector<ScoredClause> clauses;    // counts relative to the positives still uncovered at the time
  std::vector<std::string> set_aside;  // seeds for which no admissible clause existed
};

/// Sequential covering: take the first uncovered positive, build its bottom
/// clause, search for the best generalisation, drop the positives it covers.
inline InductionResult induce(const ExampleSet& set, const std::vector<ModeDecl>& modes = default_modes(),
                              const SearchConfig& config = {}) {
  validate(config);
  const auto positives = detail::distinct(set.positives);
  const auto negatives = detail::distinct(set.negatives);
  if (positives.empty()) throw Error("induction needs at least one positive example");
  InductionResult result;
  std::vector<std::string> remaining = positives;
  std::set<std::string> skipped;
  for (;;) {
    auto seed = std::find_if(remaining.begin(), remaining.end(), [&](const std::string& e) { return !skipped.count(e); });
    if (seed == remaining.end()) break;
    const HornClause bottom = bottom_clause(*seed, set.facts, modes, config);
    try {
      ScoredClause best = search_clause(bottom, set.facts, remaining, negatives, config);
      const CompiledClause cc = set.facts.compile(best.clause);
      std::erase_if(remaining, [&](const std::string& e) { return set.facts.covers(cc, set.facts.example_index(e)); });
      result.theory.clauses.push_back(best.clause);
      result.clauses.push_back(std::move(best));
    } catch (const NoAdmissibleClause&) {
      skipped.insert(*seed);
      result.set_aside.push_back(*seed);
    }
  }
  return result;
}

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

inline Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  Metrics m{0, 0, 0, 0, tp, fp, tn, fn};
  const double total = static_cast<double>(tp + fp + tn + fn);
  if (total == 0) throw Error("empty evaluation set");
  m.accuracy = static_cast<double>(tp + tn) / total;
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

/// Predictions are `theory_covers`; `reference` supplies the labels to score against.
inline Metrics evaluate_theory(const Theory& theory, const FactBase& facts,
                               const std::vector<std::pair<std::string, Label>>& reference) {
  if (reference.empty()) throw Error("empty evaluation set");
  if (theory.empty()) diag::warn("empty theory covers no example");
  std::vector<CompiledClause> compiled;
  for (const auto& c : theory.clauses) compiled.push_back(facts.compile(c));
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& [example, label] : reference) {
    const std::size_t idx = facts.example_index(example);
    const bool predicted = std::any_of(compiled.begin(), compiled.end(),
                                       [&](const CompiledClause& cc) { return facts.covers(cc, idx); });
    const bool actual = label == Label::positive;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

}  // namespace cilp
