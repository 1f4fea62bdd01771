#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "sgcn/model.hpp"

namespace sgcn::io {

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Plain-text checkpoint:
//   SGCN-CHECKPOINT
//   version 1
//   config <key>=<value> ...
//   tensors <count>
//   <name> <rank> <extent>...          (one line per tensor)
//   payload
//   <name> <value>...                  (row-major, one line per tensor)
//   end
inline constexpr int kCheckpointVersion = 1;

std::string serialize_checkpoint(const model::Model& model);
model::Model parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const model::Model& model);
model::Model load_checkpoint(const std::filesystem::path& path);

}  // namespace sgcn::io
