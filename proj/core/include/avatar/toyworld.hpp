#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "avatar/mmdit/types.hpp"

namespace avatar::toyworld {

using mmdit::LatentClip;
using mmdit::Mat;

inline constexpr int kFrames = 24;       // one generation pass, 1 s at 24 fps
inline constexpr int kPixelSize = 32;    // square frames
inline constexpr int kLatentSize = 16;   // 2x spatial folding
inline constexpr int kLatentChannels = 12;
inline constexpr int kAudioDim = 4;      // [envelope, derivative, lag1, lag2]

enum class Shape { kSquare, kCircle, kTriangle };

std::string to_string(Shape s);
Shape shape_from_string(const std::string& s);

struct Identity {
  double hue = 0.0;  // [0, 1)
  Shape shape = Shape::kSquare;
};

/// Pixel video, values in [0, 1], row-major (t, y, x, c).
struct Video {
  int frames = 0, height = 0, width = 0, channels = 3;
  std::vector<double> values;

  Video() = default;
  Video(int t, int h, int w)
      : frames(t), height(h), width(w), values(static_cast<std::size_t>(t) * h * w * 3, 0.0) {}

  double& at(int t, int y, int x, int c) {
    return values[((static_cast<std::size_t>(t) * height + y) * width + x) * 3 + c];
  }
  double at(int t, int y, int x, int c) const {
    return values[((static_cast<std::size_t>(t) * height + y) * width + x) * 3 + c];
  }
};

/// Motion keyword set. Planner action text is mapped onto these labels via
/// label_from_action (documented keyword table).
const std::vector<std::string>& motion_labels();  // {"idle","walk left","walk right","wave"}
bool is_motion_label(const std::string& label);

/// Keyword table: "walk"+"left" -> walk left, "walk"+"right" -> walk right,
/// "wave" -> wave, anything else -> idle.
std::string label_from_action(const std::string& action_text);

struct ToySample {
  Video pixels;
  std::vector<double> envelope;  // per frame, [0, 1]
  std::string label;
  Identity identity;
  std::string transcript;
  bool sync_flag = true;
};

/// Deterministic per seed. The sprite moves per label; the mouth tracks the
/// envelope when sync_flag is set and an independent signal otherwise.
ToySample make_sample(std::uint64_t seed, const std::string& label, const Identity& identity,
                      bool sync_flag);

/// A single canonical frame of the identity (sprite centered, neutral mouth),
/// used as the reference image.
Video reference_frame(const Identity& identity);

/// Per-frame audio features for the model: [envelope, derivative, lag1, lag2].
Mat audio_features(const std::vector<double>& envelope);

// --- toy VAE stand-in: fixed orthogonal per-patch transform, 2x folding ---

LatentClip toy_encode(const Video& pixels);
Video toy_decode(const LatentClip& latents);

// --- measurements ---

struct DetectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UndefinedScoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pearson correlation between the measured mouth-aperture signal and the
/// envelope. Throws UndefinedScoreError on zero-variance signals.
double lip_sync_score(const Video& video, const std::vector<double>& envelope);

/// Variance of the per-frame sprite-centroid displacement from its clip mean.
double motion_variance(const Video& video);

/// Mean hue deviation (circular) plus bounding-box fill-ratio deviation from
/// the reference identity. Zero for an exact render.
double identity_error(const Video& video, const Identity& identity);

/// Classifies a clip into a motion label from its measured trajectory.
std::string classify_motion(const Video& video);

// --- corpus ---

struct CorpusManifest {
  std::uint64_t seed = 0;
  int count = 0;
  double sync_fraction = 0.3;  // synced stratum; the rest is audio-dropout data
  std::vector<std::string> labels = motion_labels();
};

struct SampleSpec {
  std::uint64_t seed;
  std::string label;
  Identity identity;
  bool sync_flag;
};

/// The deterministic sample plan a manifest expands to.
std::vector<SampleSpec> corpus_plan(const CorpusManifest& manifest);
ToySample make_sample(const SampleSpec& spec);

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
CorpusManifest load_manifest(const std::filesystem::path& path);

/// Chunked binary container (see docs/file_formats.md).
void write_corpus(const std::vector<ToySample>& samples, const std::filesystem::path& path);
std::vector<ToySample> read_corpus(const std::filesystem::path& path);

}  // namespace avatar::toyworld
