#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "avatar/mmdit/model.hpp"

namespace avatar::pipeline {

nlohmann::json to_json(const mmdit::ModelConfig& cfg);
mmdit::ModelConfig model_config_from_json(const nlohmann::json& doc);

/// Model config + named parameter arrays. The on-disk container is binary
/// and byte-stable (see docs/checkpoint_format.md), so stage-2 assembly is
/// verifiable bitwise.
struct Checkpoint {
  mmdit::ModelConfig config;
  mmdit::ParamStore params;

  static Checkpoint of(const mmdit::Model& model) { return {model.config(), model.params()}; }
  mmdit::Model to_model() const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TransplantError : std::runtime_error {
  std::vector<std::string> missing;  // names absent from the offending checkpoint
  TransplantError(const std::string& what, std::vector<std::string> names)
      : std::runtime_error(what), missing(std::move(names)) {}
};

/// Stage-2 splice: "video.*", "text.*", "shared.*" arrays taken bitwise from
/// `pretrained`; "audio.*" arrays bitwise from `stage1`.
/// Throws TransplantError (listing the names) when either side lacks arrays
/// required by the shared config, and std::invalid_argument on config
/// mismatch.
Checkpoint assemble_stage2(const Checkpoint& pretrained, const Checkpoint& stage1);

/// Exact (bit-pattern) equality of two arrays.
bool bitwise_equal(const mmdit::Mat& a, const mmdit::Mat& b);

}  // namespace avatar::pipeline
