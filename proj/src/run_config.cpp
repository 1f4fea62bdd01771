#include "sgcn/run_config.hpp"

#include <charconv>
#include <sstream>

#include "sgcn/data.hpp"
#include "sgcn/errors.hpp"
#include "sgcn/io.hpp"

namespace sgcn::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_int(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigurationError("config '" + std::string(key) + "': expected an integer, got '" + std::string(value) +
                             "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigurationError("config '" + std::string(key) + "': expected a number, got '" + std::string(value) + "'");
  }
  return out;
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::stringstream ss{std::string(value)};
  for (std::string item; std::getline(ss, item, ',');) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k{
      "command",     "data_root",   "scenes",     "field_order",     "holdout",           "t_obs",
      "t_pred",      "epochs",      "batch_size", "lr",              "lr_decay_factor",   "lr_decay_interval",
      "xi",          "seed",        "num_samples", "max_steps",      "train_fraction",    "test_limit",
      "jobs",        "out",         "checkpoint", "scene_file",      "start_frame"};
  return k;
}

void RunConfig::set(std::string_view key_in, std::string_view value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  if (key == "command") command = value;
  else if (key == "data_root") data_root = value;
  else if (key == "scenes") scenes = split_list(value);
  else if (key == "field_order") field_order = data::FieldOrder::parse(value).to_string();
  else if (key == "holdout") train.holdout = value;
  else if (key == "t_obs") train.t_obs = parse_int<std::size_t>(key, value);
  else if (key == "t_pred") train.t_pred = parse_int<std::size_t>(key, value);
  else if (key == "epochs") train.epochs = parse_int<std::size_t>(key, value);
  else if (key == "batch_size") train.batch_size = parse_int<std::size_t>(key, value);
  else if (key == "lr") train.lr = parse_real(key, value);
  else if (key == "lr_decay_factor") train.lr_decay_factor = parse_real(key, value);
  else if (key == "lr_decay_interval") train.lr_decay_interval = parse_int<std::size_t>(key, value);
  else if (key == "xi") train.xi = parse_real(key, value);
  else if (key == "seed") train.seed = parse_int<std::uint64_t>(key, value);
  else if (key == "num_samples") train.num_samples = parse_int<std::size_t>(key, value);
  else if (key == "max_steps") train.max_steps = parse_int<std::size_t>(key, value);
  else if (key == "train_fraction") train_fraction = parse_real(key, value);
  else if (key == "test_limit") test_limit = parse_int<std::size_t>(key, value);
  else if (key == "jobs") jobs = parse_int<std::size_t>(key, value);
  else if (key == "out") out = value;
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "scene_file") scene_file = value;
  else if (key == "start_frame") start_frame = parse_int<std::int64_t>(key, value);
  else throw ConfigurationError("unknown config key '" + key + "'");
  explicit_keys.insert(key);
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value' in " + path.string());
    set(t.substr(0, eq), t.substr(eq + 1));
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  std::string scene_list;
  for (const auto& s : scenes) scene_list += (scene_list.empty() ? "" : ",") + s;
  o << "command = " << command << "\n"
    << "data_root = " << data_root.string() << "\n"
    << "scenes = " << scene_list << "\n"
    << "field_order = " << field_order << "\n"
    << "holdout = " << train.holdout << "\n"
    << "t_obs = " << train.t_obs << "\n"
    << "t_pred = " << train.t_pred << "\n"
    << "epochs = " << train.epochs << "\n"
    << "batch_size = " << train.batch_size << "\n"
    << "lr = " << io::format_double(train.lr) << "\n"
    << "lr_decay_factor = " << io::format_double(train.lr_decay_factor) << "\n"
    << "lr_decay_interval = " << train.lr_decay_interval << "\n"
    << "xi = " << io::format_double(train.xi) << "\n"
    << "seed = " << train.seed << "\n"
    << "num_samples = " << train.num_samples << "\n"
    << "max_steps = " << train.max_steps << "\n"
    << "train_fraction = " << io::format_double(train_fraction) << "\n"
    << "test_limit = " << test_limit << "\n"
    << "jobs = " << jobs << "\n"
    << "out = " << out.string() << "\n"
    << "checkpoint = " << checkpoint.string() << "\n"
    << "scene_file = " << scene_file.string() << "\n"
    << "start_frame = " << start_frame << "\n";
  return o.str();
}

void RunConfig::validate() const {
  train.validate();
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ConfigurationError("train_fraction must be in (0, 1]");
  if (jobs < 1) throw ConfigurationError("jobs must be >= 1");
}

std::filesystem::path RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? out / "checkpoint.txt" : checkpoint;
}

model::ModelConfig RunConfig::model_config() const {
  model::ModelConfig c;
  c.t_obs = train.t_obs;
  c.t_pred = train.t_pred;
  c.xi = train.xi;
  return c;
}

}  // namespace sgcn::cli
