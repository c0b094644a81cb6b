#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cilp/logic.hpp"
#include "cilp/mask_analysis.hpp"
#include "cilp/modes.hpp"
#include "cilp/program_io.hpp"

namespace cilp {

struct BkOptions {
  /// Emit relations between two parts of the same concept (the two eyes).
  bool pairwise_same_concept = true;
};

/// Ground background knowledge of one example.
struct ExampleBK {
  std::string example;
  Label label = Label::positive;
  std::vector<PartInstance> parts;
  std::vector<Atom> atoms;

  friend bool operator==(const ExampleBK&, const ExampleBK&) = default;
};

inline bool is_example_local(const Atom& a) { return a.predicate != "isa"; }

/// contains/isa facts per part, then left_of/top_of facts over ordered part
/// pairs. right_of and bottom_of are left implicit (closed world).
inline ExampleBK build_bk_from_parts(std::string example, Label label, std::vector<PartInstance> parts,
                                     const BkOptions& options = {}) {
  ExampleBK bk{std::move(example), label, std::move(parts), {}};
  const Term e = Term::constant(bk.example);
  for (const auto& p : bk.parts) {
    bk.atoms.push_back({"contains", {e, Term::constant(p.name)}});
    bk.atoms.push_back({"isa", {Term::constant(p.name), Term::constant(p.concept_name)}});
  }
  for (const auto& a : bk.parts) {
    for (const auto& b : bk.parts) {
      if (&a == &b) continue;
      if (!options.pairwise_same_concept && a.concept_name == b.concept_name) continue;
      for (const auto& r : classify_relations(a, b)) {
        if (r.kind != RelationKind::left_of && r.kind != RelationKind::top_of) continue;
        bk.atoms.push_back({std::string(to_string(r.kind)), {Term::constant(r.from), Term::constant(r.to)}});
      }
    }
  }
  return bk;
}

inline ExampleBK build_example_bk(const ConceptMaskSet& masks, const Multiplicity& multiplicity, PartNamer& namer,
                                  const BkOptions& options = {}) {
  return build_bk_from_parts(masks.id, masks.label, extract_parts(masks, multiplicity, namer), options);
}

/// Positive and negative example constants over one shared fact base.
struct ExampleSet {
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  FactBase facts;
  std::vector<ExampleBK> examples;  // emission order; may be empty for loaded sets
};

inline void add_to_fact_base(FactBase& facts, const ExampleBK& bk) {
  facts.add_example(bk.example);
  for (const auto& a : bk.atoms) {
    if (is_example_local(a))
      facts.add_fact(bk.example, a);
    else
      facts.add_global(a);
  }
}

/// Partitions examples by the labels in `predictions` (the model's output, not
/// ground truth). Each example's `label` is overwritten with its prediction.
inline ExampleSet assemble_example_set(std::vector<ExampleBK> examples, const std::map<std::string, Label>& predictions) {
  ExampleSet set;
  std::set<std::string> seen;
  for (auto& bk : examples) {
    auto it = predictions.find(bk.example);
    if (it == predictions.end()) throw Error("missing prediction for example " + bk.example);
    if (!seen.insert(bk.example).second) throw Error("duplicate example " + bk.example);
    bk.label = it->second;
    (bk.label == Label::positive ? set.positives : set.negatives).push_back(bk.example);
    add_to_fact_base(set.facts, bk);
  }
  set.examples = std::move(examples);
  return set;
}

inline ExampleSet build_example_set(std::span<const ConceptMaskSet> dataset, const std::map<std::string, Label>& predictions,
                                    const Multiplicity& multiplicity = default_multiplicity(), const BkOptions& options = {}) {
  PartNamer namer;
  std::vector<ExampleBK> bks;
  bks.reserve(dataset.size());
  for (const auto& m : dataset) {
    if (!predictions.count(m.id)) throw Error("missing prediction for example " + m.id);
    bks.push_back(build_example_bk(m, multiplicity, namer, options));
  }
  return assemble_example_set(std::move(bks), predictions);
}

/// Rebuilds per-example grouping from a flat atom list: contains/2 assigns
/// parts to examples, other facts follow their first argument, isa/2 and
/// unattributable facts are global.
inline FactBase fact_base_from_atoms(const std::vector<std::string>& examples, const std::vector<Atom>& atoms) {
  FactBase facts;
  std::set<std::string> example_set(examples.begin(), examples.end());
  for (const auto& e : examples) facts.add_example(e);
  std::unordered_map<std::string, std::string> owner;
  for (const auto& a : atoms)
    if (a.predicate == "contains" && a.arity() == 2 && example_set.count(a.args[0].name))
      owner.emplace(a.args[1].name, a.args[0].name);
  for (const auto& a : atoms) {
    if (!a.is_ground()) throw Error("variable in ground fact: " + to_string(a));
    if (a.predicate == "isa" || a.args.empty()) {
      facts.add_global(a);
      continue;
    }
    const auto& first = a.args[0].name;
    if (example_set.count(first)) {
      facts.add_fact(first, a);
    } else if (auto it = owner.find(first); it != owner.end()) {
      facts.add_fact(it->second, a);
    } else {
      facts.add_global(a);
    }
  }
  return facts;
}

struct InductionFiles {
  std::filesystem::path background;
  std::filesystem::path positives;
  std::filesystem::path negatives;
};

inline std::string target_predicate(const std::vector<ModeDecl>& modes) {
  for (const auto& m : modes)
    if (m.head) return m.predicate;
  throw Error("no head mode declaration");
}

inline std::string background_text(const ExampleSet& set, const std::vector<ModeDecl>& modes) {
  Program p;
  for (const auto& m : modes) p.statements.emplace_back(to_directive(m));
  for (const auto& d : determinations(modes)) p.statements.emplace_back(d);
  if (!set.examples.empty()) {
    for (const auto& bk : set.examples)
      for (const auto& a : bk.atoms) p.statements.emplace_back(a);
  } else {
    for (const auto& a : set.facts.all_atoms()) p.statements.emplace_back(a);
  }
  return "% background knowledge\n" + serialize_program(p);
}

inline std::string examples_text(const std::vector<std::string>& examples, const std::string& target) {
  std::string out;
  for (const auto& e : examples) out += target + "(" + e + ").\n";
  return out;
}

/// Writes `<stem>.b` (modes, determinations, facts), `<stem>.f` (E+) and
/// `<stem>.n` (E-). Output bytes depend only on the inputs.
inline InductionFiles write_induction_files(const ExampleSet& set, const std::filesystem::path& dir,
                                            const std::string& stem,
                                            const std::vector<ModeDecl>& modes = default_modes()) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
  InductionFiles files{dir / (stem + ".b"), dir / (stem + ".f"), dir / (stem + ".n")};
  const std::string target = target_predicate(modes);
  write_file(files.background, background_text(set, modes));
  write_file(files.positives, examples_text(set.positives, target));
  write_file(files.negatives, examples_text(set.negatives, target));
  return files;
}

struct LoadedInduction {
  ExampleSet set;
  std::vector<ModeDecl> modes;
};

inline std::vector<std::string> read_example_file(const std::filesystem::path& path, const std::string& target) {
  std::vector<std::string> out;
  for (const auto& a : parse_program(read_file(path)).facts()) {
    if (a.predicate != target || a.arity() != 1)
      throw Error(path.string() + ": expected " + target + "/1 facts, found " + to_string(a));
    out.push_back(a.args[0].name);
  }
  return out;
}

inline LoadedInduction load_induction_files(const std::filesystem::path& dir, const std::string& stem) {
  LoadedInduction out;
  const Program background = parse_program(read_file(dir / (stem + ".b")));
  for (const auto& d : background.directives())
    if (auto m = mode_from_directive(d)) out.modes.push_back(std::move(*m));
  if (out.modes.empty()) out.modes = default_modes();
  const std::string target = target_predicate(out.modes);
  out.set.positives = read_example_file(dir / (stem + ".f"), target);
  out.set.negatives = read_example_file(dir / (stem + ".n"), target);
  std::vector<std::string> all = out.set.positives;
  all.insert(all.end(), out.set.negatives.begin(), out.set.negatives.end());
  out.set.facts = fact_base_from_atoms(all, background.facts());
  return out;
}

}  // namespace cilp
