#include "avatar/pipeline/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace avatar::pipeline {

using mmdit::Mat;
using nlohmann::json;

namespace {
constexpr char kMagic[4] = {'A', 'V', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

json to_json(const mmdit::ModelConfig& cfg) {
  return json{{"latent_frames", cfg.latent_frames},
              {"latent_height", cfg.latent_height},
              {"latent_width", cfg.latent_width},
              {"latent_channels", cfg.latent_channels},
              {"patch", cfg.patch},
              {"hidden_dim", cfg.hidden_dim},
              {"depth", cfg.depth},
              {"heads", cfg.heads},
              {"audio_dim", cfg.audio_dim},
              {"text_vocab", cfg.text_vocab},
              {"max_text_len", cfg.max_text_len},
              {"pseudo_gap", cfg.pseudo_gap},
              {"reasoning_dim", cfg.reasoning_dim},
              {"conditioning", to_string(cfg.conditioning)},
              {"audio_injection", to_string(cfg.audio_injection)}};
}

mmdit::ModelConfig model_config_from_json(const json& doc) {
  mmdit::ModelConfig cfg;
  cfg.latent_frames = doc.at("latent_frames").get<int>();
  cfg.latent_height = doc.at("latent_height").get<int>();
  cfg.latent_width = doc.at("latent_width").get<int>();
  cfg.latent_channels = doc.at("latent_channels").get<int>();
  cfg.patch = doc.at("patch").get<int>();
  cfg.hidden_dim = doc.at("hidden_dim").get<int>();
  cfg.depth = doc.at("depth").get<int>();
  cfg.heads = doc.at("heads").get<int>();
  cfg.audio_dim = doc.at("audio_dim").get<int>();
  cfg.text_vocab = doc.at("text_vocab").get<int>();
  cfg.max_text_len = doc.at("max_text_len").get<int>();
  cfg.pseudo_gap = doc.at("pseudo_gap").get<int>();
  cfg.reasoning_dim = doc.at("reasoning_dim").get<int>();
  cfg.conditioning = mmdit::conditioning_mode_from_string(doc.at("conditioning").get<std::string>());
  cfg.audio_injection =
      mmdit::audio_injection_from_string(doc.at("audio_injection").get<std::string>());
  cfg.validate();
  return cfg;
}

mmdit::Model Checkpoint::to_model() const {
  mmdit::Model model(config);
  for (auto& [name, mat] : model.params().arrays) {
    auto it = params.arrays.find(name);
    if (it == params.arrays.end())
      throw TransplantError("checkpoint is missing array " + name, {name});
    if (it->second.rows() != mat.rows() || it->second.cols() != mat.cols())
      throw std::invalid_argument("checkpoint array " + name + " has the wrong shape");
    mat = it->second;
  }
  return model;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json arrays = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, mat] : ckpt.params.arrays) {  // map order: name-sorted, stable
    arrays.push_back({{"name", name},
                      {"rows", mat.rows()},
                      {"cols", mat.cols()},
                      {"offset", offset}});
    offset += static_cast<std::uint64_t>(mat.size()) * sizeof(double);
  }
  const std::string header = json{{"config", to_json(ckpt.config)}, {"arrays", arrays}}.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  const std::uint64_t header_len = header.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, mat] : ckpt.params.arrays) {
    // row-major on disk so the layout is independent of Eigen defaults
    for (Eigen::Index i = 0; i < mat.rows(); ++i)
      out.write(reinterpret_cast<const char*>(mat.row(i).eval().data()),
                static_cast<std::streamsize>(mat.cols() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("short write on checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path.string());
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  json doc = json::parse(header);

  Checkpoint ckpt;
  ckpt.config = model_config_from_json(doc.at("config"));
  for (const auto& entry : doc.at("arrays")) {
    const auto name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    Mat mat(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      Eigen::RowVectorXd row(cols);
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(cols * sizeof(double)));
      mat.row(i) = row;
    }
    ckpt.params.arrays.emplace(name, std::move(mat));
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
  return ckpt;
}

bool bitwise_equal(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

Checkpoint assemble_stage2(const Checkpoint& pretrained, const Checkpoint& stage1) {
  if (!(pretrained.config == stage1.config))
    throw std::invalid_argument("assemble_stage2: checkpoint configs differ");

  Checkpoint out;
  out.config = pretrained.config;

  std::vector<std::string> missing_pretrained, missing_stage1;
  for (const auto& [name, shape] : mmdit::param_shapes(out.config)) {
    const bool audio = name.starts_with("audio.");
    const Checkpoint& src = audio ? stage1 : pretrained;
    auto it = src.params.arrays.find(name);
    if (it == src.params.arrays.end()) {
      (audio ? missing_stage1 : missing_pretrained).push_back(name);
      continue;
    }
    if (it->second.rows() != shape.first || it->second.cols() != shape.second)
      throw std::invalid_argument("assemble_stage2: array " + name + " has the wrong shape");
    out.params.arrays.emplace(name, it->second);
  }
  if (!missing_pretrained.empty() || !missing_stage1.empty()) {
    std::string what = "assemble_stage2: missing arrays:";
    for (const auto& n : missing_pretrained) what += " pretrained:" + n;
    for (const auto& n : missing_stage1) what += " stage1:" + n;
    std::vector<std::string> all = missing_pretrained;
    all.insert(all.end(), missing_stage1.begin(), missing_stage1.end());
    throw TransplantError(what, std::move(all));
  }
  return out;
}

}  // namespace avatar::pipeline
