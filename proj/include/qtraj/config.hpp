#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qtraj/experiments.hpp"

namespace qtraj {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Setting = std::pair<std::string, std::string>;

/// Per-subcommand defaults.
ExperimentConfig default_config(Experiment experiment);

/// Accepts "1.5", "pi", "pi/2", "-pi/4", "0.5pi", "3*pi/4".
double parse_angle(std::string_view text);

/// Parses flat `key = value` text (one per line, `#` starts a comment).
std::vector<Setting> parse_settings(std::string_view text, std::string_view source = "config");

/// Defaults for the experiment, then file settings, then overrides in order;
/// the result is validated.
ExperimentConfig build_config(Experiment experiment, const std::vector<Setting>& settings);
ExperimentConfig parse_config(Experiment experiment, const std::optional<std::filesystem::path>& path,
                              const std::vector<Setting>& overrides = {});

/// Canonical settings that rebuild `config` exactly through build_config.
std::vector<Setting> config_echo(const ExperimentConfig& config);

}  // namespace qtraj
