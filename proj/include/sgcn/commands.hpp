#pragma once

#include <ostream>

#include "sgcn/run_config.hpp"

namespace sgcn::cli {

// Each command writes its artifacts under config.out, prints a short report
// to `out`, and throws sgcn::Error subclasses on failure.
void cmd_train(const RunConfig& config, std::ostream& out);
void cmd_eval(const RunConfig& config, std::ostream& out);
void cmd_predict(const RunConfig& config, std::ostream& out);
void cmd_dump_graphs(const RunConfig& config, std::ostream& out);

// Dispatches on config.command.
void run_command(const RunConfig& config, std::ostream& out);

}  // namespace sgcn::cli
