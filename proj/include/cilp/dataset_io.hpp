#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cilp/mask.hpp"
#include "cilp/scene.hpp"

namespace cilp {

using Json = nlohmann::ordered_json;

inline Json to_json(const PartBox& p) {
  return Json{{"concept", p.concept_name}, {"shape", std::string(to_string(p.shape))}, {"cx", p.cx}, {"cy", p.cy},
              {"half_w", p.half_w},        {"half_h", p.half_h}};
}

inline PartBox part_box_from_json(const Json& j) {
  PartBox p;
  p.concept_name = j.at("concept").get<std::string>();
  const auto shape = j.at("shape").get<std::string>();
  if (shape == "rectangle") p.shape = PartShape::rectangle;
  else if (shape == "ellipse") p.shape = PartShape::ellipse;
  else throw Error("unknown part shape: " + shape);
  p.cx = j.at("cx").get<int>();
  p.cy = j.at("cy").get<int>();
  p.half_w = j.at("half_w").get<int>();
  p.half_h = j.at("half_h").get<int>();
  return p;
}

/// One manifest line: scene metadata plus the mask file of each layer.
struct ManifestRecord {
  std::string id;
  Label label = Label::positive;
  std::uint64_t seed = 0;
  int width = 0;
  int height = 0;
  std::vector<PartBox> parts;
  std::vector<std::pair<std::string, std::string>> masks;  // concept -> file name

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

inline Json to_json(const ManifestRecord& r) {
  Json parts = Json::array();
  for (const auto& p : r.parts) parts.push_back(to_json(p));
  Json masks = Json::object();
  for (const auto& [c, f] : r.masks) masks[c] = f;
  return Json{{"id", r.id},         {"label", std::string(to_string(r.label))},
              {"seed", r.seed},     {"width", r.width},
              {"height", r.height}, {"parts", std::move(parts)},
              {"masks", std::move(masks)}};
}

inline ManifestRecord manifest_record_from_json(const Json& j) {
  ManifestRecord r;
  r.id = j.at("id").get<std::string>();
  r.label = label_from_string(j.at("label").get<std::string>());
  r.seed = j.at("seed").get<std::uint64_t>();
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  for (const auto& p : j.at("parts")) r.parts.push_back(part_box_from_json(p));
  for (const auto& [c, f] : j.at("masks").items()) r.masks.emplace_back(c, f.get<std::string>());
  return r;
}

inline std::string mask_file_name(std::string_view id, std::string_view concept_name) {
  return std::string(id) + "_" + std::string(concept_name) + ".pgm";
}

inline std::string to_jsonl(const std::vector<Json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

inline std::vector<Json> parse_jsonl(const std::filesystem::path& path) {
  std::vector<Json> rows;
  const std::string text = read_file(path);
  std::size_t start = 0, line = 1;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string_view row(text.data() + start, end - start);
    if (row.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        rows.push_back(Json::parse(row));
      } catch (const Json::exception& e) {
        throw Error(path.string() + ":" + std::to_string(line) + ": " + e.what());
      }
    }
    start = end + 1;
    ++line;
  }
  return rows;
}

/// Writes `<id>_<concept>.pgm` per layer and `manifest.jsonl` into `dir`.
inline void write_dataset(const std::filesystem::path& dir, const std::vector<SceneSpec>& specs,
                          const std::vector<ConceptMaskSet>& scenes) {
  if (specs.size() != scenes.size()) throw std::invalid_argument("spec/scene count mismatch");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
  std::vector<Json> rows;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& s = scenes[i];
    ManifestRecord r{s.id, s.label, specs[i].seed, specs[i].width, specs[i].height, specs[i].parts, {}};
    for (const auto& layer : s.layers) {
      const std::string file = mask_file_name(s.id, layer.concept_name);
      write_pgm(dir / file, layer.mask);
      r.masks.emplace_back(layer.concept_name, file);
    }
    rows.push_back(to_json(r));
  }
  write_file(dir / "manifest.jsonl", to_jsonl(rows));
}

struct LoadedDataset {
  std::vector<ManifestRecord> records;
  std::vector<ConceptMaskSet> scenes;
};

inline LoadedDataset read_dataset(const std::filesystem::path& dir) {
  LoadedDataset out;
  for (const auto& row : parse_jsonl(dir / "manifest.jsonl")) {
    auto r = manifest_record_from_json(row);
    ConceptMaskSet s{r.id, r.label, {}};
    for (const auto& [c, f] : r.masks) {
      auto mask = read_pgm(dir / f);
      if (mask.width() != r.width || mask.height() != r.height) throw Error(f + ": size differs from manifest");
      s.layers.push_back({c, std::move(mask)});
    }
    out.scenes.push_back(std::move(s));
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace cilp
