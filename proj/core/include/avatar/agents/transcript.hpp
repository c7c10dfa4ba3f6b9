#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "avatar/agents/backend.hpp"

namespace avatar::agents {

struct Exchange {
  int ordinal = 0;
  std::string role;  // "analyzer", "planner", "reflector", ...
  AgentRequest request;
  std::string response;
};

/// Append-only audit log of backend exchanges: in memory, optionally
/// mirrored to a JSON-lines file (one object per exchange).
class TranscriptLog {
 public:
  TranscriptLog() = default;
  explicit TranscriptLog(std::filesystem::path file);

  void record(const std::string& role, const AgentRequest& request, const std::string& response);

  const std::vector<Exchange>& exchanges() const { return exchanges_; }

  static std::vector<Exchange> load(const std::filesystem::path& file);

 private:
  std::vector<Exchange> exchanges_;
  std::optional<std::filesystem::path> file_;
  std::mutex mutex_;
};

/// Serves the recorded responses in order; lets a pipeline run be replayed
/// byte-for-byte without any backend.
class ReplayBackend : public ChatBackend {
 public:
  explicit ReplayBackend(std::vector<Exchange> exchanges);

  std::string send(const AgentRequest& request) override;
  BackendCapabilities capabilities() const override {
    return {.accepts_audio = true, .accepts_image = true, .exposes_latents = true};
  }
  Eigen::MatrixXd reasoning_latents(const std::string& audio_ref, const std::string& transcript,
                                    int frames, int dim) override;

 private:
  std::vector<Exchange> exchanges_;
  std::size_t next_ = 0;
  std::mutex mutex_;
};

}  // namespace avatar::agents
