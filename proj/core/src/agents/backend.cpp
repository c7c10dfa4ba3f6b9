#include "avatar/agents/backend.hpp"

namespace avatar::agents {

std::string to_string(Attachment::Kind k) {
  switch (k) {
    case Attachment::Kind::kImage: return "image";
    case Attachment::Kind::kAudio: return "audio";
    case Attachment::Kind::kFrameSequence: return "frame_sequence";
  }
  return "?";
}

Eigen::MatrixXd ChatBackend::reasoning_latents(const std::string&, const std::string&, int, int) {
  throw UnsupportedCapabilityError("backend does not expose reasoning latents");
}

}  // namespace avatar::agents
