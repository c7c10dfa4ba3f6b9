#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace avatar::agents {

struct Attachment {
  enum class Kind { kImage, kAudio, kFrameSequence };
  Kind kind = Kind::kImage;
  std::string ref;
};

std::string to_string(Attachment::Kind k);

struct AgentRequest {
  std::string prompt_text;
  std::vector<Attachment> attachments;
  bool deterministic = true;
};

struct BackendCapabilities {
  bool accepts_audio = false;
  bool accepts_image = false;
  bool exposes_latents = false;
};

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedCapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Abstracts the MLLMs behind the Analyzer/Planner. Implementations must
/// tolerate concurrent sessions; a single session calls send() sequentially.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  virtual std::string send(const AgentRequest& request) = 0;
  virtual BackendCapabilities capabilities() const = 0;

  /// Per-audio-frame feature vectors from the backend's final transformer
  /// layer. Only meaningful when capabilities().exposes_latents.
  virtual Eigen::MatrixXd reasoning_latents(const std::string& audio_ref,
                                            const std::string& transcript, int frames, int dim);
};

/// Deterministic scripted backend. Responses are served by request ordinal.
class MockBackend : public ChatBackend {
 public:
  explicit MockBackend(std::vector<std::string> responses);

  /// Cue file: JSON array of responses, or an object mapping request
  /// ordinals ("0", "1", ...) to responses, or {"responses": [...]}.
  static MockBackend from_cue_file(const std::filesystem::path& path);
  static std::vector<std::string> load_cue_file(const std::filesystem::path& path);

  std::string send(const AgentRequest& request) override;
  BackendCapabilities capabilities() const override {
    return {.accepts_audio = true, .accepts_image = true, .exposes_latents = true};
  }
  Eigen::MatrixXd reasoning_latents(const std::string& audio_ref, const std::string& transcript,
                                    int frames, int dim) override;

  int requests_served() const;

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
  mutable std::mutex mutex_;
};

/// OpenAI-style chat-completions client. The bearer token is read from the
/// AGENT_BACKEND_TOKEN environment variable.
class HttpBackend : public ChatBackend {
 public:
  struct Config {
    std::string base_url;  // e.g. "http://localhost:8080"
    std::string model;
    std::string path = "/v1/chat/completions";
    int timeout_seconds = 60;
  };

  explicit HttpBackend(Config config);

  std::string send(const AgentRequest& request) override;
  BackendCapabilities capabilities() const override {
    return {.accepts_audio = true, .accepts_image = true, .exposes_latents = false};
  }

 private:
  Config config_;
};

}  // namespace avatar::agents
