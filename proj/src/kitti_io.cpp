#include "tscenejal/kitti_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tscenejal/errors.hpp"

namespace tscenejal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::string_view what, std::size_t line) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && field.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError(fmt::format("invalid {} '{}'", what, field), line);
  return value;
}

}  // namespace

KittiLabelLine parse_kitti_line(std::string_view line, std::size_t line_number) {
  const auto f = split_fields(line);
  if (f.size() != 15 && f.size() != 16)
    throw ParseError(fmt::format("expected 15 or 16 fields, got {}", f.size()), line_number);
  KittiLabelLine out;
  out.type = std::string(f[0]);
  auto num = [&](std::size_t i, std::string_view what) { return parse_number<double>(f[i], what, line_number); };
  out.truncated = num(1, "truncated");
  out.occluded = parse_number<int>(f[2], "occluded", line_number);
  out.alpha = num(3, "alpha");
  for (std::size_t i = 0; i < 4; ++i) out.bbox2d[i] = num(4 + i, "bbox");
  out.h = num(8, "height");
  out.w = num(9, "width");
  out.l = num(10, "length");
  out.x = num(11, "x");
  out.y = num(12, "y");
  out.z = num(13, "z");
  out.rotation_y = num(14, "rotation_y");
  if (f.size() == 16) out.score = num(15, "score");
  if (out.type != "DontCare") {
    if (!(out.h > 0.0) || !(out.w > 0.0) || !(out.l > 0.0))
      throw ParseError(fmt::format("dimensions must be positive for '{}'", out.type), line_number);
    if (out.score && !(*out.score >= 0.0 && *out.score <= 1.0))
      throw ParseError(fmt::format("score {} outside [0,1]", *out.score), line_number);
  }
  return out;
}

Scene parse_label_text(std::string_view text, std::string scene_id, const ClassCatalog& catalog,
                       UnknownClassPolicy policy) {
  Scene scene{std::move(scene_id), {}};
  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    ++line_number;
    pos = end + 1;
    if (split_fields(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    const KittiLabelLine l = parse_kitti_line(line, line_number);
    if (l.type == "DontCare") continue;
    if (!catalog.contains(l.type)) {
      if (policy == UnknownClassPolicy::error)
        throw ParseError(fmt::format("unknown class '{}'", l.type), line_number);
      spdlog::warn("{}: line {}: skipping unknown class '{}'", scene.id, line_number, l.type);
      continue;
    }
    ScoredDetection det;
    det.class_label = l.type;
    det.confidence = l.score.value_or(1.0);
    det.box = Box3D{l.x, l.y, l.z, l.w, l.l, l.h, l.rotation_y};
    scene.detections.push_back(std::move(det));
  }
  return scene;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(fmt::format("cannot write '{}'", tmp.string()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError(fmt::format("write failed for '{}'", tmp.string()));
  }
  fs::rename(tmp, path);
}

Scene parse_label_file(const fs::path& path, const ClassCatalog& catalog, UnknownClassPolicy policy) {
  const std::string text = read_text_file(path);
  try {
    return parse_label_text(text, path.stem().string(), catalog, policy);
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()), 0);
  }
}

std::string serialize_label_file(const Scene& scene) {
  std::string out;
  for (const auto& d : scene.detections) {
    const Box3D& b = d.box;
    out += fmt::format("{} 0.000000 0 -10.000000 0.000000 0.000000 0.000000 0.000000 {:.6f} {:.6f} {:.6f} {:.6f} "
                       "{:.6f} {:.6f} {:.6f} {:.6f}\n",
                       d.class_label, b.h, b.w, b.l, b.x, b.y, b.z, b.theta, d.confidence);
  }
  return out;
}

namespace {

GaussianMixture1D mixture_from_json(const json& j, std::string_view where) {
  GaussianMixture1D m;
  try {
    m.weights = j.at("weights").get<std::vector<double>>();
    m.means = j.at("means").get<std::vector<double>>();
    m.variances = j.at("variances").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: {}", where, e.what()));
  }
  return m;
}

}  // namespace

Scene apply_mixture_sidecar(std::string_view text, Scene scene) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(fmt::format("sidecar for {} is not valid JSON: {}", scene.id, e.what()));
  }
  if (!doc.is_object() || doc.value("version", 0) != 1)
    throw DataError(fmt::format("sidecar for {}: missing or unsupported version", scene.id));
  if (!doc.contains("detections") || !doc["detections"].is_array())
    throw DataError(fmt::format("sidecar for {}: 'detections' must be an array", scene.id));
  const auto& entries = doc["detections"];
  if (entries.size() != scene.detections.size())
    throw DataError(fmt::format("sidecar for {} has {} entries but the label file has {} detections", scene.id,
                                entries.size(), scene.detections.size()));
  std::vector<std::optional<MixtureParams>> params(scene.detections.size());
  for (const auto& entry : entries) {
    const auto index = entry.value("index", static_cast<std::size_t>(-1));
    if (index >= params.size() || params[index])
      throw DataError(fmt::format("sidecar for {}: bad or repeated detection index", scene.id));
    if (!entry.contains("residuals") || !entry["residuals"].is_object())
      throw DataError(fmt::format("sidecar for {}: entry {} has no residuals", scene.id, index));
    std::array<GaussianMixture1D, kBoxDims> dims;
    for (BoxDim d : kAllBoxDims) {
      const std::string name(residual_name(d));
      const std::string where = fmt::format("sidecar for {} entry {} residual {}", scene.id, index, name);
      if (!entry["residuals"].contains(name)) throw DataError(where + ": missing");
      dims[static_cast<std::size_t>(d)] = mixture_from_json(entry["residuals"][name], where);
    }
    try {
      params[index] = MixtureParams(std::move(dims));
    } catch (const InvalidArgument& e) {
      throw DataError(fmt::format("sidecar for {} entry {}: {}", scene.id, index, e.what()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) scene.detections[i].mixture = std::move(params[i]);
  return scene;
}

Scene load_mixture_sidecar(const fs::path& path, Scene scene) {
  return apply_mixture_sidecar(read_text_file(path), std::move(scene));
}

std::string serialize_mixture_sidecar(const Scene& scene) {
  json entries = json::array();
  for (std::size_t i = 0; i < scene.detections.size(); ++i) {
    const auto& det = scene.detections[i];
    if (!det.mixture) throw DataError(fmt::format("scene {}: detection {} has no mixture parameters", scene.id, i));
    json residuals = json::object();
    for (BoxDim d : kAllBoxDims) {
      const auto& m = det.mixture->dim(d);
      residuals[std::string(residual_name(d))] = {
          {"weights", m.weights}, {"means", m.means}, {"variances", m.variances}};
    }
    entries.push_back({{"index", i}, {"residuals", std::move(residuals)}});
  }
  json doc = {{"version", 1}, {"scene", scene.id}, {"detections", std::move(entries)}};
  return doc.dump(1) + "\n";
}

void RoundState::validate() const {
  std::set<std::string_view> labeled;
  for (const auto& id : labeled_ids)
    if (!labeled.insert(id).second) throw DataError(fmt::format("round state: duplicate labeled id '{}'", id));
  std::set<std::string_view> unlabeled;
  for (const auto& id : unlabeled_ids) {
    if (!unlabeled.insert(id).second) throw DataError(fmt::format("round state: duplicate unlabeled id '{}'", id));
    if (labeled.contains(id)) throw DataError(fmt::format("round state: id '{}' is both labeled and unlabeled", id));
  }
  if (per_round_selected.size() != round_index)
    throw DataError(fmt::format("round state: {} selection lists for round index {}", per_round_selected.size(),
                                round_index));
  std::set<std::string_view> selected;
  for (const auto& round : per_round_selected)
    for (const auto& id : round) {
      if (!selected.insert(id).second) throw DataError(fmt::format("round state: '{}' selected twice", id));
      if (!labeled.contains(id)) throw DataError(fmt::format("round state: selected id '{}' is not labeled", id));
    }
  if (spent() > budget_total)
    throw DataError(fmt::format("round state: {} selections exceed budget {}", spent(), budget_total));
}

std::size_t RoundState::spent() const {
  std::size_t n = 0;
  for (const auto& r : per_round_selected) n += r.size();
  return n;
}

std::string round_state_to_text(const RoundState& state) {
  json doc = {{"version", RoundState::kVersion},
              {"round_index", state.round_index},
              {"budget_total", state.budget_total},
              {"rng_seed", state.rng_seed},
              {"labeled_ids", state.labeled_ids},
              {"unlabeled_ids", state.unlabeled_ids},
              {"per_round_selected", state.per_round_selected}};
  return doc.dump(1) + "\n";
}

RoundState round_state_from_text(std::string_view text) {
  RoundState state;
  try {
    const json doc = json::parse(text);
    const int version = doc.at("version").get<int>();
    if (version != RoundState::kVersion)
      throw DataError(fmt::format("round state version {} is not supported (expected {})", version,
                                  RoundState::kVersion));
    state.round_index = doc.at("round_index").get<std::size_t>();
    state.budget_total = doc.at("budget_total").get<std::size_t>();
    state.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    state.labeled_ids = doc.at("labeled_ids").get<std::vector<std::string>>();
    state.unlabeled_ids = doc.at("unlabeled_ids").get<std::vector<std::string>>();
    state.per_round_selected = doc.at("per_round_selected").get<std::vector<std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw DataError(fmt::format("round state is corrupted: {}", e.what()));
  }
  state.validate();
  return state;
}

void save_round_state(const RoundState& state, const fs::path& path) {
  state.validate();
  write_file_atomic(path, round_state_to_text(state));
}

RoundState load_round_state(const fs::path& path) {
  try {
    return round_state_from_text(read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

namespace {

std::vector<fs::path> label_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(fmt::format("'{}' is not a directory", dir.string()));
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

std::vector<fs::path> missing_sidecars(const fs::path& dir) {
  std::vector<fs::path> missing;
  for (const auto& f : label_files(dir)) {
    fs::path sidecar = f;
    sidecar.replace_extension(".mdn");
    if (!fs::exists(sidecar)) missing.push_back(sidecar);
  }
  return missing;
}

std::vector<Scene> load_pool_dir(const fs::path& dir, const ClassCatalog& catalog, bool with_sidecars,
                                 UnknownClassPolicy policy) {
  std::vector<Scene> pool;
  for (const auto& f : label_files(dir)) {
    Scene s = parse_label_file(f, catalog, policy);
    if (with_sidecars) {
      fs::path sidecar = f;
      sidecar.replace_extension(".mdn");
      if (fs::exists(sidecar)) s = load_mixture_sidecar(sidecar, std::move(s));
    }
    pool.push_back(std::move(s));
  }
  validate_pool_ids(pool);
  return pool;
}

}  // namespace tscenejal
