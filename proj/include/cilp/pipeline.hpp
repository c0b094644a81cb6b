#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cilp/bk_builder.hpp"
#include "cilp/common.hpp"
#include "cilp/concept_math.hpp"
#include "cilp/dataset_io.hpp"
#include "cilp/ilp.hpp"
#include "cilp/mask_analysis.hpp"
#include "cilp/scene.hpp"

namespace cilp {

/// Error raised by `run_pipeline`, tagged with the failing stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Stand-in black-box classifier: logistic in the constellation margin.
struct ScorerParams {
  double margin_scale = 20.0;    // logit per unit of margin (margin is a fraction of image height)
  double noise_sigma = 0.1;      // std-dev of the seeded logit noise
  double missing_penalty = 4.0;  // logit subtracted per missing part
  double offset = 0.0;           // added to every logit
};

/// Smallest signed vertical gap (fraction of height) among eye-above-nose and
/// nose-above-mouth, over detected parts. Positive iff the face ordering holds.
inline double constellation_margin(const std::vector<PartInstance>& parts, int height) {
  std::vector<double> eyes;
  std::optional<double> nose, mouth;
  for (const auto& p : parts) {
    if (p.concept_name == "eye") eyes.push_back(p.position.y);
    else if (p.concept_name == "nose" && !nose) nose = p.position.y;
    else if (p.concept_name == "mouth" && !mouth) mouth = p.position.y;
  }
  std::optional<double> margin;
  auto take = [&](double m) { margin = margin ? std::min(*margin, m) : m; };
  if (nose) {
    for (double e : eyes) take(*nose - e);
    if (mouth) take(*mouth - *nose);
  } else if (mouth) {
    for (double e : eyes) take(*mouth - e);
  }
  return margin.value_or(0.0) / static_cast<double>(height);
}

inline std::size_t missing_parts(const std::vector<PartInstance>& parts, const Multiplicity& multiplicity) {
  std::size_t missing = 0;
  for (const auto& [c, k] : multiplicity) {
    const auto n = static_cast<std::size_t>(std::count_if(parts.begin(), parts.end(), [&](const PartInstance& p) { return p.concept_name == c; }));
    missing += n < k ? k - n : 0;
  }
  return missing;
}

/// Deterministic confidence in [0, 1] for `masks`; noise is seeded by (seed, id).
inline double simulate_confidence(const ConceptMaskSet& masks, std::uint64_t seed, const ScorerParams& params = {}) {
  PartNamer namer;
  const auto parts = extract_parts(masks, default_multiplicity(), namer);
  const int height = masks.layers.empty() ? 1 : masks.layers.front().mask.height();
  Rng rng(derive_seed(seed, hash_string(masks.id)));
  const double logit = params.margin_scale * constellation_margin(parts, std::max(height, 1)) +
                       params.noise_sigma * rng.normal() -
                       params.missing_penalty * static_cast<double>(missing_parts(parts, default_multiplicity())) +
                       params.offset;
  return sigmoid(logit);
}

struct ScoredExample {
  std::string id;
  double confidence = 0.0;
  Label predicted = Label::negative;
  Label truth = Label::negative;

  friend bool operator==(const ScoredExample&, const ScoredExample&) = default;
};

inline Label label_for_confidence(double confidence) { return confidence > 0.5 ? Label::positive : Label::negative; }

inline ScoredExample make_scored(std::string id, double confidence, Label truth) {
  return {std::move(id), confidence, label_for_confidence(confidence), truth};
}

inline Json to_json(const ScoredExample& s) {
  return Json{{"id", s.id},
              {"confidence", s.confidence},
              {"predicted", std::string(to_string(s.predicted))},
              {"truth", std::string(to_string(s.truth))}};
}

inline ScoredExample scored_example_from_json(const Json& j) {
  ScoredExample s{j.at("id").get<std::string>(), j.at("confidence").get<double>(),
                  label_from_string(j.at("predicted").get<std::string>()), label_from_string(j.at("truth").get<std::string>())};
  if (s.predicted != label_for_confidence(s.confidence)) throw Error("inconsistent prediction for " + s.id);
  return s;
}

/// Per predicted class, the `n_per_class` examples closest to 0.5; ties by id.
/// Positives first, each class by ascending distance to the boundary.
inline std::vector<ScoredExample> select_boundary_samples(std::span<const ScoredExample> scored, std::size_t n_per_class) {
  std::vector<ScoredExample> out;
  for (Label cls : {Label::positive, Label::negative}) {
    std::vector<ScoredExample> members;
    for (const auto& s : scored)
      if (s.predicted == cls) members.push_back(s);
    if (members.size() < n_per_class)
      throw Error("insufficient predicted-" + std::string(to_string(cls)) + " examples: need " +
                  std::to_string(n_per_class) + ", have " + std::to_string(members.size()));
    std::sort(members.begin(), members.end(), [](const ScoredExample& a, const ScoredExample& b) {
      const double da = std::abs(a.confidence - 0.5), db = std::abs(b.confidence - 0.5);
      return da != db ? da < db : a.id < b.id;
    });
    out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_per_class));
  }
  return out;
}

using ConceptThresholds = std::map<std::string, double>;

inline ConceptThresholds default_thresholds() { return {{"nose", 0.5}, {"mouth", 0.8}, {"eye", 0.7}}; }

namespace detail {

inline std::vector<std::pair<std::string, std::string>> split_pairs(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view item = text.substr(start, end - start);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0) throw Error("expected key=value, got '" + std::string(item) + "'");
      out.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    }
    start = end + 1;
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) throw Error("bad number for " + key + ": '" + value + "'");
  return v;
}

inline long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) throw Error("bad integer for " + key + ": '" + value + "'");
  return v;
}

}  // namespace detail

/// "nose=0.5,mouth=0.8,eye=0.7"; unspecified concepts keep their defaults.
inline ConceptThresholds parse_thresholds(std::string_view text) {
  ConceptThresholds t = default_thresholds();
  for (const auto& [k, v] : detail::split_pairs(text)) {
    const double x = detail::parse_double(k, v);
    if (!(x > 0.0 && x <= 1.0)) throw Error("threshold for " + k + " must be in (0, 1]");
    t[k] = x;
  }
  return t;
}

/// "none" or "speckles=3,min_area=2,max_area=6,flip=0.0001,seed=7".
inline NoiseParams parse_noise(std::string_view text) {
  NoiseParams n;
  if (text.empty() || text == "none") return n;
  for (const auto& [k, v] : detail::split_pairs(text)) {
    if (k == "speckles") n.speckles = static_cast<int>(detail::parse_int(k, v));
    else if (k == "min_area") n.speckle_min_area = static_cast<int>(detail::parse_int(k, v));
    else if (k == "max_area") n.speckle_max_area = static_cast<int>(detail::parse_int(k, v));
    else if (k == "flip") n.flip_probability = detail::parse_double(k, v);
    else if (k == "seed") n.seed = static_cast<std::uint64_t>(detail::parse_int(k, v));
    else throw Error("unknown noise key: " + k);
  }
  if (n.speckles < 0 || n.speckle_min_area < 1 || n.speckle_max_area < n.speckle_min_area)
    throw Error("invalid speckle settings");
  if (!(n.flip_probability >= 0.0 && n.flip_probability <= 1.0)) throw Error("flip probability must be in [0, 1]");
  return n;
}

inline std::string to_string(const NoiseParams& n) {
  if (n.is_zero()) return "none";
  std::ostringstream ss;
  ss << "speckles=" << n.speckles << ",min_area=" << n.speckle_min_area << ",max_area=" << n.speckle_max_area
     << ",flip=" << n.flip_probability << ",seed=" << n.seed;
  return ss.str();
}

struct RunConfig {
  std::size_t n_pos = 999;
  std::size_t n_neg = 999;
  std::uint64_t seed = 0;
  NoiseParams noise;
  LayoutConfig layout;
  ConceptThresholds thresholds = default_thresholds();
  Window encoding_window{64, 64};
  int encoding_stride = 8;
  bool encoding_diagnostics = true;
  ScorerParams scorer;
  std::size_t n_select = 50;
  BkOptions bk;
  SearchConfig search;
  std::string stem = "train";
  std::filesystem::path out_dir = "out";
};

inline void validate(const RunConfig& c) {
  if (c.n_select > c.n_pos + c.n_neg) throw Error("selection count exceeds dataset size");
  if (c.encoding_stride < 1) throw Error("encoding stride must be >= 1");
  for (const auto& [k, v] : c.thresholds)
    if (!(v > 0.0 && v <= 1.0)) throw Error("threshold for " + k + " must be in (0, 1]");
  try {
    validate(c.search);
  } catch (const std::invalid_argument& e) {
    throw Error(e.what());
  }
}

inline Json to_json(const SearchConfig& s) {
  return Json{{"noise", s.noise},
              {"min_pos", s.min_pos},
              {"max_body_literals", s.max_body_literals},
              {"max_var_depth", s.max_var_depth},
              {"max_nodes", s.max_nodes},
              {"seed", s.seed}};
}

inline Json to_json(const Metrics& m) {
  return Json{{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
              {"tp", m.tp},             {"fp", m.fp},               {"tn", m.tn},         {"fn", m.fn}};
}

/// Echo of the run configuration (output location excluded so reports from
/// different directories compare equal).
inline Json to_json(const RunConfig& c) {
  Json thresholds = Json::object();
  for (const auto& [k, v] : c.thresholds) thresholds[k] = v;
  return Json{{"seed", c.seed},
              {"n_pos", c.n_pos},
              {"n_neg", c.n_neg},
              {"n_select", c.n_select},
              {"noise", to_string(c.noise)},
              {"thresholds", std::move(thresholds)},
              {"encoding", {{"window", {c.encoding_window.height, c.encoding_window.width}}, {"stride", c.encoding_stride}}},
              {"scorer",
               {{"margin_scale", c.scorer.margin_scale},
                {"noise_sigma", c.scorer.noise_sigma},
                {"missing_penalty", c.scorer.missing_penalty},
                {"offset", c.scorer.offset}}},
              {"pairwise_eyes", c.bk.pairwise_same_concept},
              {"search", to_json(c.search)}};
}

/// Intersection-encoding statistics per concept over a dataset.
struct EncodingStats {
  std::size_t instances = 0;
  std::size_t eliminated = 0;  // instances with no encoded pixel
  std::size_t encoded_pixels = 0;
};

inline std::map<std::string, EncodingStats> encoding_diagnostics(std::span<const ConceptMaskSet> scenes,
                                                                 const ConceptThresholds& thresholds, Window window,
                                                                 int stride) {
  std::map<std::string, EncodingStats> stats;
  for (const auto& s : scenes) {
    for (const auto& layer : s.layers) {
      auto t = thresholds.find(layer.concept_name);
      if (t == thresholds.end()) continue;
      auto& st = stats[layer.concept_name];
      for (const auto& inst : connected_components(layer.mask)) {
        BinaryMask single(layer.mask.width(), layer.mask.height());
        for (const auto& p : inst.pixels) single.set(p.x, p.y);
        const auto enc = intersection_encode(single, window, stride, t->second);
        const std::size_t n = enc.mask.count();
        ++st.instances;
        st.eliminated += n == 0 ? 1 : 0;
        st.encoded_pixels += n;
      }
    }
  }
  return stats;
}

struct Report {
  Json json;
  Metrics fidelity;
  double labeler_accuracy = 0.0;
  InductionResult induction;
  std::filesystem::path theory_path;
  std::filesystem::path report_path;
  std::filesystem::path timings_path;
  InductionFiles files;
};

using StageTimings = std::vector<std::pair<std::string, double>>;

namespace detail {

template <class Fn>
auto run_stage(const std::string& name, StageTimings& timings, Fn&& fn) -> decltype(fn()) {
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    timings.emplace_back(name, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto result = fn();
      finish();
      return result;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace detail

/// generate -> score -> select -> BK + files -> induce -> evaluate -> report.
/// Outputs (in `out_dir`): `<stem>.b/.f/.n`, `theory.rules`, `selection.jsonl`,
/// `report.json` and `timings.json`. All but the timings are byte-stable.
inline Report run_pipeline(const RunConfig& config) {
  StageTimings timings;
  detail::run_stage("config", timings, [&] { validate(config); });
  Report report;
  const auto& out = config.out_dir;

  const DatasetPlan plan{config.n_pos, config.n_neg, config.seed};
  auto scenes = detail::run_stage("generate", timings, [&] {
    return generate_dataset(plan.n_pos, plan.n_neg, plan.seed, config.noise, config.layout);
  });

  Json encoding = Json::object();
  if (config.encoding_diagnostics) {
    detail::run_stage("encode", timings, [&] {
      for (const auto& [c, st] : encoding_diagnostics(scenes, config.thresholds, config.encoding_window, config.encoding_stride))
        encoding[c] = {{"instances", st.instances}, {"eliminated", st.eliminated}, {"encoded_pixels", st.encoded_pixels}};
    });
  }

  const std::uint64_t scorer_seed = derive_seed(config.seed, 0x5c0e);
  auto scored = detail::run_stage("score", timings, [&] {
    std::vector<ScoredExample> s;
    s.reserve(scenes.size());
    for (const auto& m : scenes) s.push_back(make_scored(m.id, simulate_confidence(m, scorer_seed, config.scorer), m.label));
    return s;
  });
  std::size_t agree = 0;
  for (const auto& s : scored) agree += s.predicted == s.truth ? 1 : 0;
  report.labeler_accuracy = scored.empty() ? 0.0 : static_cast<double>(agree) / static_cast<double>(scored.size());

  auto selected = detail::run_stage("select", timings, [&] { return select_boundary_samples(scored, config.n_select); });

  detail::run_stage("extract-bk", timings, [&] {
    std::map<std::string, const ConceptMaskSet*> by_id;
    for (const auto& m : scenes) by_id[m.id] = &m;
    std::vector<ConceptMaskSet> chosen;
    std::map<std::string, Label> predictions;
    for (const auto& s : selected) {
      chosen.push_back(*by_id.at(s.id));
      predictions[s.id] = s.predicted;
    }
    const ExampleSet set = build_example_set(chosen, predictions, default_multiplicity(), config.bk);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw Error("cannot create directory " + out.string() + ": " + ec.message());
    report.files = write_induction_files(set, out, config.stem, default_modes());
    std::vector<Json> rows;
    for (const auto& s : selected) rows.push_back(to_json(s));
    write_file(out / "selection.jsonl", to_jsonl(rows));
  });

  report.induction = detail::run_stage("induce", timings, [&] {
    const LoadedInduction loaded = load_induction_files(out, config.stem);
    auto result = induce(loaded.set, loaded.modes, config.search);
    report.theory_path = out / "theory.rules";
    write_file(report.theory_path, serialize_theory(result.theory));
    return result;
  });

  Metrics ground_truth;
  report.fidelity = detail::run_stage("evaluate", timings, [&] {
    std::map<std::string, Label> predictions;
    for (const auto& s : scored) predictions[s.id] = s.predicted;
    const Theory theory = parse_theory(read_file(report.theory_path));
    const ExampleSet pool = build_example_set(scenes, predictions, default_multiplicity(), config.bk);
    std::vector<std::pair<std::string, Label>> by_prediction, by_truth;
    for (const auto& s : scored) {
      by_prediction.emplace_back(s.id, s.predicted);
      by_truth.emplace_back(s.id, s.truth);
    }
    diag::WarningCollector quiet;
    ground_truth = evaluate_theory(theory, pool.facts, by_truth);
    return evaluate_theory(theory, pool.facts, by_prediction);
  });

  Json clauses = Json::array();
  for (const auto& c : report.induction.clauses)
    clauses.push_back({{"clause", to_string(c.clause)}, {"positives", c.positives}, {"negatives", c.negatives}});
  std::size_t sel_pos = 0;
  for (const auto& s : selected) sel_pos += s.predicted == Label::positive ? 1 : 0;
  double cmin = 1.0, cmax = 0.0;
  for (const auto& s : selected) {
    cmin = std::min(cmin, s.confidence);
    cmax = std::max(cmax, s.confidence);
  }

  report.report_path = out / "report.json";
  report.timings_path = out / "timings.json";
  const auto rel = [&](const std::filesystem::path& p) { return p.lexically_relative(out).generic_string(); };
  report.json = Json{
      {"config", to_json(config)},
      {"labeler_accuracy", report.labeler_accuracy},
      {"fidelity", {{"accuracy", report.fidelity.accuracy}, {"f1", report.fidelity.f1}, {"precision", report.fidelity.precision}, {"recall", report.fidelity.recall}}},
      {"theory_path", rel(report.theory_path)},
      {"timings", rel(report.timings_path)},
      {"confusion", {{"tp", report.fidelity.tp}, {"fp", report.fidelity.fp}, {"tn", report.fidelity.tn}, {"fn", report.fidelity.fn}}},
      {"ground_truth", to_json(ground_truth)},
      {"theory", std::move(clauses)},
      {"set_aside", report.induction.set_aside},
      {"selection",
       {{"file", "selection.jsonl"},
        {"positives", sel_pos},
        {"negatives", selected.size() - sel_pos},
        {"confidence_min", cmin},
        {"confidence_max", cmax}}},
      {"files",
       {{"background", rel(report.files.background)},
        {"positives", rel(report.files.positives)},
        {"negatives", rel(report.files.negatives)}}},
      {"encoding", std::move(encoding)},
      {"evaluated", scored.size()}};
  detail::run_stage("report", timings, [&] { write_file(report.report_path, report.json.dump(2) + "\n"); });

  Json t = Json::object();
  for (const auto& [name, ms] : timings) t[name + "_ms"] = ms;
  write_file(report.timings_path, t.dump(2) + "\n");
  return report;
}

/// Synthetic activations for the concept-math demo: channel 0 is the encoded
/// mask plus Gaussian noise, the rest are pure noise.
inline FeatureMap synthetic_features(const BinaryMask& encoded, int channels, double noise_sigma, std::uint64_t seed) {
  if (channels < 1) throw std::invalid_argument("need at least one channel");
  FeatureMap f(channels, encoded.height(), encoded.width());
  Rng rng(seed);
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x) f.at(c, y, x) = (c == 0 ? encoded.at(x, y) : 0.0) + noise_sigma * rng.normal();
  return f;
}

inline Json to_json(const Hyperplane& h) {
  return Json{{"dim", h.dim()}, {"normal", h.normal}, {"bias", h.bias}, {"threshold", h.threshold}};
}

inline Hyperplane hyperplane_from_json(const Json& j) {
  Hyperplane h{j.at("normal").get<std::vector<double>>(), j.at("bias").get<double>(), j.value("threshold", 0.0)};
  if (j.contains("dim") && j.at("dim").get<std::size_t>() != h.dim()) throw Error("hyperplane dim does not match normal");
  return h;
}

struct EmbedDemoConfig {
  std::size_t n_train = 20;
  std::size_t n_test = 10;
  std::string concept_name = "nose";
  int channels = 8;
  double feature_noise = 0.3;
  std::uint64_t seed = 0;
  ConceptThresholds thresholds = default_thresholds();
  Window window{64, 64};
  int stride = 8;
  TrainConfig train;
  int repeats = 3;
  int folds = 5;
};

/// Encodes one concept of generated scenes, trains 3x5 cross-validated concept
/// models on synthetic activations and ensembles them.
inline Json embed_demo(const EmbedDemoConfig& c) {
  const auto scenes = generate_dataset(c.n_train + c.n_test, 0, c.seed);
  const auto t = c.thresholds.find(c.concept_name);
  if (t == c.thresholds.end()) throw Error("no threshold for concept " + c.concept_name);
  std::vector<FeatureMap> xs;
  std::vector<BinaryMask> ys;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const BinaryMask* layer = scenes[i].layer(c.concept_name);
    if (!layer) throw Error("scene has no layer " + c.concept_name);
    auto enc = intersection_encode(*layer, c.window, c.stride, t->second);
    xs.push_back(synthetic_features(enc.mask, c.channels, c.feature_noise, derive_seed(c.seed, 0xfea7 + i)));
    ys.push_back(std::move(enc.mask));
  }
  const std::span<const FeatureMap> all_x(xs);
  const std::span<const BinaryMask> all_y(ys);
  TrainConfig train = c.train;
  train.seed = c.seed;
  const auto r = cross_validated_ensemble(all_x.first(c.n_train), all_y.first(c.n_train), all_x.subspan(c.n_train),
                                          all_y.subspan(c.n_train), train, c.repeats, c.folds);
  return Json{{"concept", c.concept_name},
              {"runs", r.runs.size()},
              {"run_siou", r.run_siou},
              {"mean_run_siou", r.mean_run_siou},
              {"ensemble_siou", r.ensemble_siou},
              {"mean_cosine_distance", r.mean_cosine_distance},
              {"ensemble", to_json(r.ensemble)}};
}

}  // namespace cilp
