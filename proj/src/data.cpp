#include "sgcn/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "sgcn/errors.hpp"
#include "sgcn/log.hpp"
#include "sgcn/rng.hpp"

namespace sgcn::data {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(out);
}

std::int64_t integral(double v, std::size_t line, const char* what) {
  if (std::floor(v) != v || std::abs(v) > 9.0e15) {
    throw ParseError(line, std::string(what) + " is not an integer");
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace

FieldOrder FieldOrder::parse(std::string_view spec) {
  FieldOrder order;
  std::set<Field> seen;
  std::size_t i = 0;
  std::stringstream ss{std::string(spec)};
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (i >= 4) throw ConfigurationError("field order needs exactly 4 fields: " + std::string(spec));
    auto t = lower(token);
    Field f;
    if (t == "frame") f = Field::frame;
    else if (t == "ped" || t == "pedestrian" || t == "id") f = Field::pedestrian;
    else if (t == "x") f = Field::x;
    else if (t == "y") f = Field::y;
    else throw ConfigurationError("unknown field '" + token + "' in field order");
    if (!seen.insert(f).second) throw ConfigurationError("repeated field '" + token + "' in field order");
    order.fields_[i++] = f;
  }
  if (i != 4) throw ConfigurationError("field order needs exactly 4 fields: " + std::string(spec));
  return order;
}

std::string FieldOrder::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i) out += ',';
    switch (fields_[i]) {
      case Field::frame: out += "frame"; break;
      case Field::pedestrian: out += "ped"; break;
      case Field::x: out += "x"; break;
      case Field::y: out += "y"; break;
    }
  }
  return out;
}

RawTrajectoryTable parse_scene(std::istream& in, std::string scene, const FieldOrder& order) {
  RawTrajectoryTable table;
  table.scene = std::move(scene);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty() || tokens.front().starts_with('#')) continue;
    if (tokens.size() != 4) {
      throw ParseError(line_no, "expected 4 fields (frame pedestrian x y), found " + std::to_string(tokens.size()));
    }
    Observation obs;
    for (std::size_t i = 0; i < 4; ++i) {
      double v = 0.0;
      if (!parse_double(tokens[i], v)) throw ParseError(line_no, "not a number: '" + tokens[i] + "'");
      switch (order.fields()[i]) {
        case FieldOrder::Field::frame: obs.frame = integral(v, line_no, "frame id"); break;
        case FieldOrder::Field::pedestrian: obs.pedestrian = integral(v, line_no, "pedestrian id"); break;
        case FieldOrder::Field::x: obs.x = v; break;
        case FieldOrder::Field::y: obs.y = v; break;
      }
    }
    table.rows.push_back(obs);
  }
  if (table.rows.empty()) throw EmptyTableError("no observations in scene '" + table.scene + "'");
  std::sort(table.rows.begin(), table.rows.end(), [](const Observation& a, const Observation& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.pedestrian < b.pedestrian;
  });
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const auto& a = table.rows[i - 1];
    const auto& b = table.rows[i];
    if (a.frame == b.frame && a.pedestrian == b.pedestrian) {
      throw IntegrityError("duplicate observation for frame " + std::to_string(a.frame) + ", pedestrian " +
                           std::to_string(a.pedestrian) + " in scene '" + table.scene + "'");
    }
  }
  return table;
}

RawTrajectoryTable load_scene_file(const std::filesystem::path& path, const FieldOrder& order) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open trajectory file " + path.string());
  try {
    return parse_scene(in, path.stem().string(), order);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail() + " (" + path.string() + ")");
  }
}

ad::Tensor TrajectoryScene::displacements_fut() const {
  const std::size_t n = num_pedestrians(), tp = t_pred(), to = t_obs();
  std::vector<double> out(tp * n * 2);
  const auto& obs = positions_obs.data();
  const auto& fut = positions_fut.data();
  for (std::size_t t = 0; t < tp; ++t)
    for (std::size_t i = 0; i < n * 2; ++i) {
      const double prev = t == 0 ? obs[(to - 1) * n * 2 + i] : fut[(t - 1) * n * 2 + i];
      out[t * n * 2 + i] = fut[t * n * 2 + i] - prev;
    }
  return ad::Tensor::from({tp, n, 2}, std::move(out));
}

std::int64_t frame_step(const RawTrajectoryTable& table) {
  std::int64_t step = 0;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const auto gap = table.rows[i].frame - table.rows[i - 1].frame;
    if (gap > 0 && (step == 0 || gap < step)) step = gap;
  }
  return step == 0 ? 1 : step;
}

std::vector<TrajectoryScene> window_scenes(const RawTrajectoryTable& table, std::size_t t_obs, std::size_t t_pred,
                                           std::size_t stride) {
  if (t_obs < 1 || t_pred < 1 || stride < 1) throw ConfigurationError("window lengths and stride must be >= 1");
  std::vector<TrajectoryScene> scenes;
  if (table.rows.empty()) return scenes;

  const std::int64_t step = frame_step(table);
  const std::size_t length = t_obs + t_pred;
  // frame -> (pedestrian -> row)
  std::map<std::int64_t, std::unordered_map<std::int64_t, const Observation*>> by_frame;
  for (const auto& row : table.rows) by_frame[row.frame][row.pedestrian] = &row;
  const std::int64_t first = by_frame.begin()->first;

  for (const auto& [start, present] : by_frame) {
    if (((start - first) / step) % static_cast<std::int64_t>(stride) != 0 || (start - first) % step != 0) continue;
    std::vector<std::int64_t> ids;
    for (const auto& [ped, _] : present) ids.push_back(ped);
    std::sort(ids.begin(), ids.end());
    std::vector<std::vector<const Observation*>> tracks;
    std::vector<std::int64_t> kept;
    for (auto ped : ids) {
      std::vector<const Observation*> track;
      track.reserve(length);
      for (std::size_t k = 0; k < length; ++k) {
        auto f = by_frame.find(start + static_cast<std::int64_t>(k) * step);
        if (f == by_frame.end()) break;
        auto p = f->second.find(ped);
        if (p == f->second.end()) break;
        track.push_back(p->second);
      }
      if (track.size() == length) {
        kept.push_back(ped);
        tracks.push_back(std::move(track));
      }
    }
    if (kept.empty()) continue;

    const std::size_t n = kept.size();
    std::vector<double> obs(t_obs * n * 2), fut(t_pred * n * 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < length; ++k) {
        const auto* o = tracks[i][k];
        auto& dst = k < t_obs ? obs : fut;
        const std::size_t t = k < t_obs ? k : k - t_obs;
        dst[(t * n + i) * 2] = o->x;
        dst[(t * n + i) * 2 + 1] = o->y;
      }
    TrajectoryScene scene;
    scene.scene = table.scene;
    scene.start_frame = start;
    scene.pedestrian_ids = std::move(kept);
    scene.positions_obs = ad::Tensor::from({t_obs, n, 2}, std::move(obs));
    scene.positions_fut = ad::Tensor::from({t_pred, n, 2}, std::move(fut));
    scenes.push_back(to_displacements(std::move(scene)));
  }
  return scenes;
}

ObservationWindow observation_window(const RawTrajectoryTable& table, std::size_t t_obs, std::int64_t start_frame) {
  if (t_obs < 1) throw ConfigurationError("t_obs must be >= 1");
  if (table.rows.empty()) throw EmptyTableError("scene '" + table.scene + "' has no observations");
  const std::int64_t step = frame_step(table);
  const std::int64_t start = start_frame < 0 ? table.rows.front().frame : start_frame;
  const std::int64_t end = start + static_cast<std::int64_t>(t_obs) * step;

  std::map<std::int64_t, std::map<std::int64_t, const Observation*>> tracks;  // ped -> frame -> row
  for (const auto& row : table.rows) {
    if (row.frame >= start && row.frame < end && (row.frame - start) % step == 0) {
      tracks[row.pedestrian][row.frame] = &row;
    }
  }
  ObservationWindow out;
  std::vector<const std::map<std::int64_t, const Observation*>*> kept;
  for (const auto& [ped, frames] : tracks) {
    if (frames.size() == t_obs) {
      out.scene.pedestrian_ids.push_back(ped);
      kept.push_back(&frames);
    } else {
      out.dropped.push_back(ped);
    }
  }
  if (kept.empty()) {
    std::string msg = "no pedestrian spans " + std::to_string(t_obs) + " frames from frame " + std::to_string(start) +
                      " in '" + table.scene + "'";
    if (!out.dropped.empty()) {
      msg += "; dropped:";
      for (auto id : out.dropped) msg += " " + std::to_string(id);
    }
    throw DimensionError(msg);
  }
  const std::size_t n = kept.size();
  std::vector<double> obs(t_obs * n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t t = 0;
    for (const auto& [frame, row] : *kept[i]) {
      obs[(t * n + i) * 2] = row->x;
      obs[(t * n + i) * 2 + 1] = row->y;
      ++t;
    }
  }
  out.scene.scene = table.scene;
  out.scene.start_frame = start;
  out.scene.positions_obs = ad::Tensor::from({t_obs, n, 2}, std::move(obs));
  out.scene = to_displacements(std::move(out.scene));
  return out;
}

TrajectoryScene to_displacements(TrajectoryScene scene) {
  const auto& s = scene.positions_obs.shape();
  const std::size_t t_obs = s[0], width = s[1] * s[2];
  const auto& p = scene.positions_obs.data();
  std::vector<double> d(p.size(), 0.0);
  for (std::size_t t = 1; t < t_obs; ++t)
    for (std::size_t i = 0; i < width; ++i) d[t * width + i] = p[t * width + i] - p[(t - 1) * width + i];
  scene.displacements_obs = ad::Tensor::from(s, std::move(d));
  return scene;
}

ad::Tensor integrate_displacements(std::span<const double> start, const ad::Tensor& steps) {
  const auto& s = steps.shape();
  const std::size_t width = s[1] * s[2];
  if (start.size() != width) throw DimensionError("integrate_displacements: start must be [N,2]");
  std::vector<double> out(steps.numel());
  std::vector<double> cur(start.begin(), start.end());
  const auto& d = steps.data();
  for (std::size_t t = 0; t < s[0]; ++t)
    for (std::size_t i = 0; i < width; ++i) {
      cur[i] += d[t * width + i];
      out[t * width + i] = cur[i];
    }
  return ad::Tensor::from(s, std::move(out));
}

DatasetSplit leave_one_out_split(const SceneTables& tables, std::string_view holdout, std::size_t t_obs,
                                 std::size_t t_pred, std::size_t stride) {
  const auto want = lower(holdout);
  auto it = std::find_if(tables.begin(), tables.end(), [&](const auto& kv) { return lower(kv.first) == want; });
  if (it == tables.end()) {
    std::string known;
    for (const auto& [name, _] : tables) known += (known.empty() ? "" : ", ") + name;
    throw ConfigurationError("holdout scene '" + std::string(holdout) + "' not found (available: " + known + ")");
  }
  DatasetSplit split;
  split.holdout_name = it->first;
  for (const auto& [name, recordings] : tables) {
    auto& dst = name == it->first ? split.test_scenes : split.train_scenes;
    for (const auto& table : recordings) {
      auto windows = window_scenes(table, t_obs, t_pred, stride);
      std::move(windows.begin(), windows.end(), std::back_inserter(dst));
    }
  }
  if (split.train_scenes.empty()) {
    log::warn("leave-one-out split with holdout '" + split.holdout_name + "' has an empty training set");
  }
  return split;
}

SceneTables load_data_root(const std::filesystem::path& root, const FieldOrder& order) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw ConfigurationError("data root does not exist: " + root.string());
  SceneTables tables;
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(root)) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  for (const auto& path : entries) {
    if (fs::is_regular_file(path) && path.extension() == ".txt") {
      tables[path.stem().string()].push_back(load_scene_file(path, order));
    } else if (fs::is_directory(path)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(path)) {
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        auto table = load_scene_file(f, order);
        table.scene = path.filename().string();
        tables[table.scene].push_back(std::move(table));
      }
    }
  }
  if (tables.empty()) throw ConfigurationError("no trajectory files (*.txt) under " + root.string());
  return tables;
}

std::vector<TrajectoryScene> take_subsample(const std::vector<TrajectoryScene>& scenes, std::size_t count,
                                            std::uint64_t seed) {
  count = std::min(count, scenes.size());
  std::vector<std::size_t> idx(scenes.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<TrajectoryScene> out;
  out.reserve(count);
  for (auto i : idx) out.push_back(scenes[i]);
  return out;
}

std::vector<TrajectoryScene> subsample(const std::vector<TrajectoryScene>& scenes, double fraction,
                                       std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigurationError("subsample fraction must be in (0, 1]");
  if (scenes.empty()) return {};
  auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(scenes.size())));
  return take_subsample(scenes, std::max<std::size_t>(count, 1), seed);
}

}  // namespace sgcn::data
