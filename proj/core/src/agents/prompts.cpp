#include "avatar/agents/prompts.hpp"

#include <fstream>
#include <sstream>

namespace avatar::agents {

namespace {

constexpr const char* kAnalyzer = R"(You are the Analyzer for an avatar animation system.

Reference image: {{IMAGE_REF}}
Image caption: {{CAPTION}}
Speech audio: {{AUDIO_REF}}
User instruction (may be empty): {{USER_PROMPT}}

Infer the character and situation. Respond with a single JSON object and
nothing else:

{
  "schema_version": 1,
  "persona": "...",
  "language_style": "...",
  "speech_content": "...",
  "emotion": "...",
  "intent": "...",
  "environment": "..."
}

All six fields must be non-empty strings.
)";

constexpr const char* kPlanner = R"(You are the Planner for an avatar animation system.

Character analysis:
{{ANALYSIS_JSON}}

Reference image: {{IMAGE_REF}}
Active speaker id (empty when single-speaker): {{ACTIVE_SPEAKER}}

Devise an action plan as a sequence of exactly {{N_SHOTS}} shots. Each shot
spans one generation pass of {{PASS_FRAMES}} frames. Respond with a single
JSON object and nothing else:

{
  "schema_version": 1,
  "shots": [
    {"index": 0, "expression": "...", "action": "...", "duration_frames": {{PASS_FRAMES}}}
  ]
}

Indices must run 0..{{N_SHOTS}}-1 with no gaps; every duration_frames must
equal {{PASS_FRAMES}}; expression and action must be non-empty.
)";

constexpr const char* kReflector = R"(You are the Reflector for an avatar animation system.

Current plan:
{{SCHEDULE_JSON}}

Shots with index <= {{COMPLETED_UPTO}} have already been rendered. Last
generated frames: {{LAST_FRAMES_REF}}. Reference image: {{IMAGE_REF}}.

Review the remaining shots against what was actually rendered and revise them
if a more logical action fits better. Respond with the full plan as a single
JSON object in the same format. Shots with index <= {{COMPLETED_UPTO}} must be
reproduced exactly as given; only later shots may change. Keep exactly the
same number of shots and duration_frames of {{PASS_FRAMES}}.
)";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("prompts: cannot write " + p.string());
  out << text;
}

}  // namespace

PromptSet PromptSet::defaults() { return {kAnalyzer, kPlanner, kReflector}; }

PromptSet PromptSet::load(const std::filesystem::path& dir) {
  PromptSet set = defaults();
  if (std::filesystem::exists(dir / "analyzer.txt")) set.analyzer = read_file(dir / "analyzer.txt");
  if (std::filesystem::exists(dir / "planner.txt")) set.planner = read_file(dir / "planner.txt");
  if (std::filesystem::exists(dir / "reflector.txt"))
    set.reflector = read_file(dir / "reflector.txt");
  return set;
}

void PromptSet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_file(dir / "analyzer.txt", analyzer);
  write_file(dir / "planner.txt", planner);
  write_file(dir / "reflector.txt", reflector);
}

std::string substitute(const std::string& templ,
                       const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(templ.size());
  std::size_t pos = 0;
  while (pos < templ.size()) {
    const std::size_t open = templ.find("{{", pos);
    if (open == std::string::npos) {
      out.append(templ, pos, std::string::npos);
      break;
    }
    const std::size_t close = templ.find("}}", open + 2);
    if (close == std::string::npos) {
      out.append(templ, pos, std::string::npos);
      break;
    }
    out.append(templ, pos, open - pos);
    const std::string key = templ.substr(open + 2, close - open - 2);
    if (auto it = values.find(key); it != values.end()) {
      out += it->second;
    } else {
      out.append(templ, open, close + 2 - open);  // unknown placeholder kept visible
    }
    pos = close + 2;
  }
  return out;
}

}  // namespace avatar::agents
