#include "sgcn/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "sgcn/errors.hpp"

namespace sgcn::io {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("cannot format value");
  return std::string(buf, ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigurationError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ConfigurationError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

constexpr std::string_view kMagic = "SGCN-CHECKPOINT";

std::string config_line(const model::ModelConfig& c) {
  std::ostringstream out;
  out << "config t_obs=" << c.t_obs << " t_pred=" << c.t_pred << " embed_dim=" << c.embed_dim
      << " asym_layers=" << c.asym_layers << " asym_kernel=" << c.asym_kernel << " tcn_layers=" << c.tcn_layers
      << " tcn_kernel=" << c.tcn_kernel << " xi=" << format_double(c.xi);
  return out.str();
}

model::ModelConfig parse_config(std::istringstream& fields) {
  model::ModelConfig c;
  std::map<std::string, std::string> kv;
  for (std::string tok; fields >> tok;) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigurationError("checkpoint config: malformed entry '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigurationError(std::string("checkpoint config: missing '") + key + "'");
    return it->second;
  };
  try {
    c.t_obs = std::stoul(get("t_obs"));
    c.t_pred = std::stoul(get("t_pred"));
    c.embed_dim = std::stoul(get("embed_dim"));
    c.asym_layers = std::stoul(get("asym_layers"));
    c.asym_kernel = std::stoul(get("asym_kernel"));
    c.tcn_layers = std::stoul(get("tcn_layers"));
    c.tcn_kernel = std::stoul(get("tcn_kernel"));
    c.xi = std::stod(get("xi"));
  } catch (const std::logic_error&) {
    throw ConfigurationError("checkpoint config: non-numeric value");
  }
  c.validate();
  return c;
}

double parse_value(const std::string& tok) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ConfigurationError("checkpoint payload: bad number '" + tok + "'");
  }
  return v;
}

}  // namespace

std::string serialize_checkpoint(const model::Model& model) {
  const auto params = model.parameters();
  std::string out;
  out += kMagic;
  out += "\nversion " + std::to_string(kCheckpointVersion) + "\n";
  out += config_line(model.config()) + "\n";
  out += "tensors " + std::to_string(params.size()) + "\n";
  for (const auto& [name, t] : params) {
    out += name + " " + std::to_string(t.rank());
    for (auto e : t.shape()) out += " " + std::to_string(e);
    out += "\n";
  }
  out += "payload\n";
  for (const auto& [name, t] : params) {
    out += name;
    for (double v : t.data()) {
      out += ' ';
      out += format_double(v);
    }
    out += "\n";
  }
  out += "end\n";
  return out;
}

model::Model parse_checkpoint(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw ConfigurationError("not a checkpoint: missing '" + std::string(kMagic) + "' header");
  }
  {
    if (!std::getline(in, line)) throw ConfigurationError("checkpoint: missing version field");
    std::istringstream f(line);
    std::string key;
    int version = -1;
    if (!(f >> key >> version) || key != "version") {
      throw ConfigurationError("checkpoint: corrupted version field ('" + line + "')");
    }
    if (version != kCheckpointVersion) {
      throw ConfigurationError("checkpoint: unsupported version field " + std::to_string(version) + " (expected " +
                               std::to_string(kCheckpointVersion) + ")");
    }
  }
  model::ModelConfig config;
  {
    if (!std::getline(in, line)) throw ConfigurationError("checkpoint: missing config line");
    std::istringstream f(line);
    std::string key;
    f >> key;
    if (key != "config") throw ConfigurationError("checkpoint: expected config line");
    config = parse_config(f);
  }
  auto model = model::Model::init(config, 0);
  auto params = model.parameters();
  std::map<std::string, ad::Tensor> by_name(params.begin(), params.end());

  std::size_t count = 0;
  {
    std::getline(in, line);
    std::istringstream f(line);
    std::string key;
    if (!(f >> key >> count) || key != "tensors") throw ConfigurationError("checkpoint: bad tensor count line");
  }
  if (count != params.size()) {
    throw ConfigurationError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                             std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ConfigurationError("checkpoint: truncated shape table");
    std::istringstream f(line);
    std::string name;
    std::size_t rank = 0;
    f >> name >> rank;
    ad::Shape shape(rank);
    for (auto& e : shape) f >> e;
    if (!f) throw ConfigurationError("checkpoint: malformed shape entry '" + line + "'");
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigurationError("checkpoint: unknown tensor '" + name + "'");
    if (it->second.shape() != shape) {
      throw ConfigurationError("checkpoint: tensor '" + name + "' has shape " + ad::to_string(shape) +
                               ", model expects " + ad::to_string(it->second.shape()));
    }
  }
  if (!std::getline(in, line) || line != "payload") throw ConfigurationError("checkpoint: missing payload marker");
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ConfigurationError("checkpoint: truncated payload");
    std::istringstream f(line);
    std::string name;
    f >> name;
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigurationError("checkpoint: unknown tensor '" + name + "' in payload");
    auto values = it->second.mutable_data();
    std::size_t k = 0;
    for (std::string tok; f >> tok; ++k) {
      if (k >= values.size()) throw ConfigurationError("checkpoint: too many values for '" + name + "'");
      values[k] = parse_value(tok);
    }
    if (k != values.size()) throw ConfigurationError("checkpoint: too few values for '" + name + "'");
  }
  if (!std::getline(in, line) || line != "end") throw ConfigurationError("checkpoint: missing end marker");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const model::Model& model) {
  write_file_atomic(path, serialize_checkpoint(model));
}

model::Model load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace sgcn::io
