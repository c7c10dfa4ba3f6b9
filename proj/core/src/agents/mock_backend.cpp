#include <fstream>

#include <nlohmann/json.hpp>

#include "avatar/agents/backend.hpp"
#include "avatar/rng.hpp"

namespace avatar::agents {

using nlohmann::json;

MockBackend::MockBackend(std::vector<std::string> responses) : responses_(std::move(responses)) {}

MockBackend MockBackend::from_cue_file(const std::filesystem::path& path) {
  return MockBackend(load_cue_file(path));
}

std::vector<std::string> MockBackend::load_cue_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TransportError("mock cue file not found: " + path.string());
  json doc = json::parse(in);
  std::vector<std::string> responses;
  if (doc.is_array()) {
    for (const auto& r : doc) responses.push_back(r.is_string() ? r.get<std::string>() : r.dump());
  } else if (doc.is_object() && doc.contains("responses")) {
    for (const auto& r : doc["responses"])
      responses.push_back(r.is_string() ? r.get<std::string>() : r.dump());
  } else if (doc.is_object()) {
    // ordinal-keyed map; ordinals must be dense from 0
    responses.resize(doc.size());
    for (const auto& [key, value] : doc.items()) {
      const std::size_t ordinal = std::stoul(key);
      if (ordinal >= responses.size())
        throw TransportError("mock cue file: non-contiguous ordinal " + key);
      responses[ordinal] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  } else {
    throw TransportError("mock cue file: unsupported document shape");
  }
  return responses;
}

std::string MockBackend::send(const AgentRequest&) {
  std::lock_guard lock(mutex_);
  if (next_ >= responses_.size())
    throw TransportError("mock backend script exhausted after " + std::to_string(next_) +
                         " requests");
  return responses_[next_++];
}

int MockBackend::requests_served() const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(next_);
}

Eigen::MatrixXd MockBackend::reasoning_latents(const std::string& audio_ref,
                                               const std::string& transcript, int frames, int dim) {
  if (frames <= 0 || dim <= 0)
    throw std::invalid_argument("reasoning_latents: frames and dim must be positive");
  // hash-derived, deterministic across runs
  const std::uint64_t base = hash64(transcript, hash64(audio_ref));
  Eigen::MatrixXd latents(frames, dim);
  for (int f = 0; f < frames; ++f) {
    Rng rng(mix_seed(base, static_cast<std::uint64_t>(f)));
    for (int d = 0; d < dim; ++d) latents(f, d) = rng.uniform(-1.0, 1.0);
  }
  return latents;
}

}  // namespace avatar::agents
