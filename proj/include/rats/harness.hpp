#pragma once

#include <string>

#include "rats/config.hpp"

namespace rats {

// Output root override: when set, relative out_dir paths are rooted here.
constexpr const char* kOutputRootEnv = "RATS_OUT_ROOT";

std::string resolve_out_dir(const std::string& out_dir);

// Executes the configured experiment and writes its artifacts (config echo,
// JSONL logs, CSV summaries, checkpoints) into the run directory. JSONL
// content is a pure function of config + seeds; wall-clock timings go to a
// separate file so reruns stay byte-identical. Returns the run directory.
std::string run(const RunConfig& config);

// Aggregates every *.jsonl under the directory (recursively) into one
// long-format CSV `round, seed, strategy, metric, value`, one row per scalar
// metric per logged round, per-seed rows preserved.
std::string emit_plotdata(const std::string& run_dir);

}  // namespace rats
