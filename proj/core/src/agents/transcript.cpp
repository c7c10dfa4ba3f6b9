#include "avatar/agents/transcript.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace avatar::agents {

using nlohmann::json;

namespace {

json exchange_to_json(const Exchange& ex) {
  json attachments = json::array();
  for (const auto& a : ex.request.attachments)
    attachments.push_back({{"kind", to_string(a.kind)}, {"ref", a.ref}});
  return json{{"ordinal", ex.ordinal},
              {"role", ex.role},
              {"prompt_text", ex.request.prompt_text},
              {"attachments", attachments},
              {"deterministic", ex.request.deterministic},
              {"response", ex.response}};
}

Attachment::Kind kind_from_string(const std::string& s) {
  if (s == "image") return Attachment::Kind::kImage;
  if (s == "audio") return Attachment::Kind::kAudio;
  if (s == "frame_sequence") return Attachment::Kind::kFrameSequence;
  throw std::runtime_error("transcript: unknown attachment kind: " + s);
}

}  // namespace

TranscriptLog::TranscriptLog(std::filesystem::path file) : file_(std::move(file)) {
  if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
  // truncate: a log belongs to one run
  std::ofstream out(*file_, std::ios::trunc);
  if (!out) throw std::runtime_error("transcript: cannot open " + file_->string());
}

void TranscriptLog::record(const std::string& role, const AgentRequest& request,
                           const std::string& response) {
  std::lock_guard lock(mutex_);
  Exchange ex{static_cast<int>(exchanges_.size()), role, request, response};
  if (file_) {
    std::ofstream out(*file_, std::ios::app);
    out << exchange_to_json(ex).dump() << '\n';
  }
  exchanges_.push_back(std::move(ex));
}

std::vector<Exchange> TranscriptLog::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("transcript: cannot open " + file.string());
  std::vector<Exchange> exchanges;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json doc = json::parse(line);
    Exchange ex;
    ex.ordinal = doc.at("ordinal").get<int>();
    ex.role = doc.at("role").get<std::string>();
    ex.request.prompt_text = doc.at("prompt_text").get<std::string>();
    ex.request.deterministic = doc.at("deterministic").get<bool>();
    for (const auto& a : doc.at("attachments"))
      ex.request.attachments.push_back(
          {kind_from_string(a.at("kind").get<std::string>()), a.at("ref").get<std::string>()});
    ex.response = doc.at("response").get<std::string>();
    exchanges.push_back(std::move(ex));
  }
  return exchanges;
}

ReplayBackend::ReplayBackend(std::vector<Exchange> exchanges) : exchanges_(std::move(exchanges)) {}

std::string ReplayBackend::send(const AgentRequest& request) {
  std::lock_guard lock(mutex_);
  if (next_ >= exchanges_.size())
    throw TransportError("replay: transcript exhausted after " + std::to_string(next_) +
                         " exchanges");
  const Exchange& ex = exchanges_[next_];
  if (ex.request.prompt_text != request.prompt_text)
    throw TransportError("replay: request " + std::to_string(next_) +
                         " does not match the recorded prompt");
  ++next_;
  return ex.response;
}

Eigen::MatrixXd ReplayBackend::reasoning_latents(const std::string& audio_ref,
                                                 const std::string& transcript, int frames,
                                                 int dim) {
  // Latents are a pure function of their inputs for the deterministic mock,
  // so replay reuses the same derivation.
  MockBackend mock({});
  return mock.reasoning_latents(audio_ref, transcript, frames, dim);
}

}  // namespace avatar::agents
