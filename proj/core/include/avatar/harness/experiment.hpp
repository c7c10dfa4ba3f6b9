#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "avatar/pipeline/generate.hpp"
#include "avatar/pipeline/train.hpp"
#include "avatar/toyworld.hpp"

namespace avatar::harness {

inline constexpr const char* kCodeVersion = "1.0.0";

/// Valid experiment names for run_experiment / the CLI.
const std::vector<std::string>& experiment_names();

struct ExperimentOptions {
  std::string name;
  std::optional<std::filesystem::path> config_path;
  std::uint64_t seed = 0;
  std::string backend = "mock";  // mock | http
  std::filesystem::path out_dir = "out";
  bool reflect = false;
};

/// The fully-resolved default configuration (all documented keys).
nlohmann::json default_experiment_config();

/// Defaults overlaid with the file; unknown keys are rejected with the
/// offending key named in the error.
nlohmann::json load_experiment_config(const std::optional<std::filesystem::path>& path);

/// Runs one named experiment and writes its artifacts (checkpoints, metrics,
/// clips, schedules) plus a reproducibility manifest into out_dir.
/// Throws std::invalid_argument for unknown names or config keys.
void run_experiment(const ExperimentOptions& opts);

/// Training examples rendered from a toy-corpus plan, cycled by index.
pipeline::ExampleStream toy_example_stream(const toyworld::CorpusManifest& manifest, int vocab);

/// Latent clip container (see docs/file_formats.md).
void save_latent_clips(const std::vector<mmdit::LatentClip>& clips,
                       const std::filesystem::path& path);
std::vector<mmdit::LatentClip> load_latent_clips(const std::filesystem::path& path);

/// Held-out generation metrics, shared by the `eval` experiment and the
/// acceptance suite. Clips are generated one per prompt with the sample's own
/// audio and reference identity.
struct EvalReport {
  int clips = 0;
  double mean_lip_sync = 0.0;   // over synced prompts
  int sync_clips = 0;
  double label_accuracy = 0.0;  // classify_motion vs prompted label
  double mean_motion_variance_walk_wave = 0.0;
  int walk_wave_clips = 0;
  double mean_identity_error = 0.0;
};

nlohmann::json to_json(const EvalReport& report);

EvalReport evaluate_model(const mmdit::Model& model, int n_clips, std::uint64_t seed,
                          const pipeline::SamplerConfig& sampler);

}  // namespace avatar::harness
