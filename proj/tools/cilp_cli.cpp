// Command-line front end: dataset generation, scoring, selection, background
// knowledge export, induction, evaluation and the end-to-end run.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cilp/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cilp;

namespace {

constexpr int kStageFailure = 2;

std::vector<ScoredExample> read_scores(const fs::path& path) {
  std::vector<ScoredExample> out;
  for (const auto& row : parse_jsonl(path)) out.push_back(scored_example_from_json(row));
  return out;
}

void write_scores(const fs::path& path, const std::vector<ScoredExample>& scored) {
  std::vector<Json> rows;
  for (const auto& s : scored) rows.push_back(to_json(s));
  write_file(path, to_jsonl(rows));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

struct Options {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::size_t n_pos = 999;
  std::size_t n_neg = 999;
  std::size_t n_select = 50;
  std::string noise = "none";
  std::string thresholds = "nose=0.5,mouth=0.8,eye=0.7";
  int ilp_noise = 0;
  int max_body_literals = 8;
  bool pairwise_eyes = true;
  std::string data;
  std::string scores;
  std::string selection;
  std::string bk_dir;
  std::string stem = "train";
  std::string theory;
};

SearchConfig search_config(const Options& o) {
  SearchConfig s;
  s.noise = o.ilp_noise;
  s.max_body_literals = o.max_body_literals;
  s.seed = o.seed;
  return s;
}

BkOptions bk_options(const Options& o) { return {o.pairwise_eyes}; }

std::map<std::string, Label> predictions_of(const std::vector<ScoredExample>& scored) {
  std::map<std::string, Label> p;
  for (const auto& s : scored) p[s.id] = s.predicted;
  return p;
}

int cmd_generate(const Options& o) {
  const DatasetPlan plan{o.n_pos, o.n_neg, o.seed};
  const NoiseParams noise = parse_noise(o.noise);
  std::vector<SceneSpec> specs;
  std::vector<ConceptMaskSet> scenes;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    specs.push_back(plan.spec(i));
    scenes.push_back(plan.scene(i, noise));
  }
  write_dataset(o.out, specs, scenes);
  std::cout << "wrote " << scenes.size() << " scenes to " << o.out << "\n";
  return 0;
}

int cmd_score(const Options& o) {
  const auto data = read_dataset(o.data);
  std::vector<ScoredExample> scored;
  const std::uint64_t seed = derive_seed(o.seed, 0x5c0e);
  for (const auto& m : data.scenes) scored.push_back(make_scored(m.id, simulate_confidence(m, seed), m.label));
  ensure_dir(o.out);
  write_scores(fs::path(o.out) / "scores.jsonl", scored);
  std::cout << "scored " << scored.size() << " scenes\n";
  return 0;
}

int cmd_select(const Options& o) {
  const auto scored = read_scores(o.scores);
  const auto selected = select_boundary_samples(scored, o.n_select);
  ensure_dir(o.out);
  write_scores(fs::path(o.out) / "selection.jsonl", selected);
  std::cout << "selected " << selected.size() << " examples\n";
  return 0;
}

int cmd_extract_bk(const Options& o) {
  const auto data = read_dataset(o.data);
  const auto selected = read_scores(o.selection);
  std::map<std::string, const ConceptMaskSet*> by_id;
  for (const auto& m : data.scenes) by_id[m.id] = &m;
  std::vector<ConceptMaskSet> chosen;
  for (const auto& s : selected) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) throw Error("selected example not in dataset: " + s.id);
    chosen.push_back(*it->second);
  }
  const auto set = build_example_set(chosen, predictions_of(selected), default_multiplicity(), bk_options(o));
  const auto files = write_induction_files(set, o.out, o.stem);
  std::cout << files.background.string() << "\n" << files.positives.string() << "\n" << files.negatives.string() << "\n";
  return 0;
}

int cmd_induce(const Options& o) {
  const auto loaded = load_induction_files(o.bk_dir, o.stem);
  const auto result = induce(loaded.set, loaded.modes, search_config(o));
  ensure_dir(o.out);
  const fs::path path = fs::path(o.out) / "theory.rules";
  write_file(path, serialize_theory(result.theory));
  std::cout << serialize_theory(result.theory);
  for (const auto& e : result.set_aside) std::cerr << "set aside: " << e << "\n";
  return 0;
}

int cmd_evaluate(const Options& o) {
  const Theory theory = parse_theory(read_file(o.theory));
  const auto data = read_dataset(o.data);
  const auto scored = read_scores(o.scores);
  const auto set = build_example_set(data.scenes, predictions_of(scored), default_multiplicity(), bk_options(o));
  std::vector<std::pair<std::string, Label>> reference;
  for (const auto& s : scored) reference.emplace_back(s.id, s.predicted);
  const std::string metrics = to_json(evaluate_theory(theory, set.facts, reference)).dump(2) + "\n";
  ensure_dir(o.out);
  write_file(fs::path(o.out) / "metrics.json", metrics);
  std::cout << metrics;
  return 0;
}

int cmd_run(const Options& o) {
  RunConfig c;
  c.n_pos = o.n_pos;
  c.n_neg = o.n_neg;
  c.seed = o.seed;
  c.noise = parse_noise(o.noise);
  c.thresholds = parse_thresholds(o.thresholds);
  c.n_select = o.n_select;
  c.bk = bk_options(o);
  c.search = search_config(o);
  c.out_dir = o.out;
  const Report r = run_pipeline(c);
  std::cout << r.json.dump(2) << "\n";
  return 0;
}

int cmd_embed_demo(const Options& o) {
  EmbedDemoConfig c;
  c.seed = o.seed;
  c.thresholds = parse_thresholds(o.thresholds);
  const Json result = embed_demo(c);
  ensure_dir(o.out);
  write_file(fs::path(o.out) / "embedding.json", result.dump(2) + "\n");
  std::cout << result.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule induction over concept masks of synthetic faces"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--out", o.out, "Output directory");
  };
  auto dataset_flags = [&](CLI::App* sub) {
    sub->add_option("--n-pos", o.n_pos, "Positive scenes");
    sub->add_option("--n-neg", o.n_neg, "Negative scenes");
    sub->add_option("--noise", o.noise, "Detector noise: none or speckles=N,min_area=A,max_area=B,flip=P,seed=S");
  };
  auto search_flags = [&](CLI::App* sub) {
    sub->add_option("--ilp-noise", o.ilp_noise, "Max negatives a clause may cover")->check(CLI::NonNegativeNumber);
    sub->add_option("--max-body-literals", o.max_body_literals, "Max body literals")->check(CLI::PositiveNumber);
  };
  auto bk_flags = [&](CLI::App* sub) {
    sub->add_flag("--pairwise-eyes,!--no-pairwise-eyes", o.pairwise_eyes, "Emit relations between the two eyes");
  };

  auto* generate = app.add_subcommand("generate", "Generate scenes: manifest.jsonl plus PGM masks");
  common(generate);
  dataset_flags(generate);

  auto* score = app.add_subcommand("score", "Score a dataset with the simulated classifier");
  common(score);
  score->add_option("--data", o.data, "Dataset directory")->required();

  auto* select = app.add_subcommand("select", "Pick the examples closest to the decision boundary");
  common(select);
  select->add_option("--scores", o.scores, "scores.jsonl")->required();
  select->add_option("--n-select", o.n_select, "Examples per predicted class");

  auto* extract = app.add_subcommand("extract-bk", "Write .b/.f/.n files for the selected examples");
  common(extract);
  bk_flags(extract);
  extract->add_option("--data", o.data, "Dataset directory")->required();
  extract->add_option("--selection", o.selection, "selection.jsonl")->required();
  extract->add_option("--stem", o.stem, "File stem");

  auto* induce_cmd = app.add_subcommand("induce", "Induce a theory from .b/.f/.n files");
  common(induce_cmd);
  search_flags(induce_cmd);
  induce_cmd->add_option("--bk", o.bk_dir, "Directory with the induction files")->required();
  induce_cmd->add_option("--stem", o.stem, "File stem");

  auto* evaluate = app.add_subcommand("evaluate", "Fidelity of a theory against scored predictions");
  common(evaluate);
  bk_flags(evaluate);
  evaluate->add_option("--theory", o.theory, "theory.rules")->required();
  evaluate->add_option("--data", o.data, "Dataset directory")->required();
  evaluate->add_option("--scores", o.scores, "scores.jsonl")->required();

  auto* run = app.add_subcommand("run", "End-to-end pipeline");
  common(run);
  dataset_flags(run);
  search_flags(run);
  bk_flags(run);
  run->add_option("--n-select", o.n_select, "Examples per predicted class");
  run->add_option("--thresholds", o.thresholds, "Intersection-encoding thresholds per concept");

  auto* demo = app.add_subcommand("embed-demo", "Concept embedding exercise on synthetic activations");
  common(demo);
  demo->add_option("--thresholds", o.thresholds, "Intersection-encoding thresholds per concept");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) return cmd_generate(o);
    if (*score) return cmd_score(o);
    if (*select) return cmd_select(o);
    if (*extract) return cmd_extract_bk(o);
    if (*induce_cmd) return cmd_induce(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*run) return cmd_run(o);
    if (*demo) return cmd_embed_demo(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageFailure;
  }
  return EXIT_FAILURE;
}
