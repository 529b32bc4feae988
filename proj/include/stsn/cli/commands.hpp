#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "stsn/model/config.hpp"

namespace stsn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (without the program name). Failures print
/// {"error": {"category", "message"}} on `err` and return a non-zero code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Exit code for an error category: 2 for usage, input and data problems,
/// 1 for everything else.
int exit_code_for(const std::string& category);

struct AblationVariant {
  std::string name;   // e.g. "layers_3", "no_erla"
  std::string label;  // e.g. "3 AttentionLayers", "-E&R-L-A"
  std::vector<std::string> overrides;
};

/// layers_1..layers_6, full, no_label_embedding, no_erla, no_stack.
std::vector<AblationVariant> ablation_variants();

/// Config file, then STSN_SEED, then --set overrides in order.
Config resolve_config(const std::string& config_path, const std::vector<std::string>& overrides);

}  // namespace stsn::cli
