#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace avatar::agents {

/// Editable prompt templates. Placeholders are written {{NAME}}; the
/// supported names per role are listed in prompts/README.md. Defaults are
/// compiled in; load() overrides any of analyzer.txt / planner.txt /
/// reflector.txt found in a directory.
struct PromptSet {
  std::string analyzer;
  std::string planner;
  std::string reflector;

  static PromptSet defaults();
  static PromptSet load(const std::filesystem::path& dir);

  /// Writes the current templates out as editable files.
  void save(const std::filesystem::path& dir) const;
};

/// Replaces every {{KEY}} with its value; unknown placeholders are left
/// intact so template errors stay visible in transcripts.
std::string substitute(const std::string& templ, const std::map<std::string, std::string>& values);

}  // namespace avatar::agents
