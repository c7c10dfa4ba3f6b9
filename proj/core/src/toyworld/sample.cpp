#include <algorithm>
#include <cmath>

#include "avatar/rng.hpp"
#include "avatar/toyworld.hpp"

namespace avatar::toyworld {

namespace {

constexpr double kBodyHalf = 6.0;    // sprite half-extent in pixels
constexpr double kBodyValue = 0.75;  // HSV value of the body color
constexpr double kWalkSpeed = 0.35;  // px per frame
constexpr double kWaveAmp = 3.0;
constexpr double kWavePeriods = 2.0;

// mouth window relative to sprite center; sized so the audio-driven signal
// is a meaningful share of the frame (the System-1 lip-sync task is only as
// learnable as this window is large)
constexpr int kMouthTop = 1, kMouthBottom = 5;  // rows center+1 .. center+5
constexpr int kMouthHalfWidth = 5;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  rgb[0] = r + m;
  rgb[1] = g + m;
  rgb[2] = b + m;
}

// Antialiased coverage of the shape at pixel (x, y) for center (cx, cy).
double shape_coverage(Shape shape, double x, double y, double cx, double cy) {
  const double s = kBodyHalf;
  switch (shape) {
    case Shape::kSquare: {
      const double d = std::max(std::fabs(x - cx), std::fabs(y - cy));
      return clamp01(s - d + 0.5);
    }
    case Shape::kCircle: {
      const double d = std::hypot(x - cx, y - cy);
      return clamp01(s + 0.5 - d);
    }
    case Shape::kTriangle: {
      // apex up; width grows linearly from apex to base
      const double v = y - (cy - s);  // 0 at apex row, 2s at base
      if (v < -0.5 || v > 2.0 * s + 0.5) return 0.0;
      const double halfw = 0.5 * std::clamp(v, 0.0, 2.0 * s);
      const double horiz = clamp01(halfw - std::fabs(x - cx) + 0.5);
      const double vert = clamp01(v + 0.5) * clamp01(2.0 * s - v + 0.5);
      return horiz * std::min(vert, 1.0);
    }
  }
  return 0.0;
}

// Envelopes are deliberately low-frequency (1-2.5 cycles per clip with a
// small second harmonic): a learner whose temporal audio-video alignment is
// still coarse gets partial credit instead of none, which keeps the lip-sync
// gradient alive.
std::vector<double> smooth_signal(Rng& rng, int frames) {
  const double f1 = 1.0 + 1.5 * rng.uniform();   // cycles per clip
  const double f2 = 2.0 + 2.0 * rng.uniform();
  const double p1 = 2.0 * M_PI * rng.uniform();
  const double p2 = 2.0 * M_PI * rng.uniform();
  std::vector<double> sig(frames);
  for (int t = 0; t < frames; ++t) {
    const double u = static_cast<double>(t) / frames;
    sig[t] = clamp01(0.5 + 0.4 * std::sin(2.0 * M_PI * f1 * u + p1) +
                     0.1 * std::sin(2.0 * M_PI * f2 * u + p2));
  }
  return sig;
}

void sprite_center(const std::string& label, int t, int frames, double& cx, double& cy) {
  const double c0 = kPixelSize / 2.0;
  cx = c0;
  cy = c0;
  if (label == "walk left") cx = c0 - kWalkSpeed * t;
  else if (label == "walk right") cx = c0 + kWalkSpeed * t;
  else if (label == "wave")
    cy = c0 + kWaveAmp * std::sin(2.0 * M_PI * kWavePeriods * t / frames);
  (void)frames;
}

}  // namespace

std::string to_string(Shape s) {
  switch (s) {
    case Shape::kSquare: return "square";
    case Shape::kCircle: return "circle";
    case Shape::kTriangle: return "triangle";
  }
  return "?";
}

Shape shape_from_string(const std::string& s) {
  if (s == "square") return Shape::kSquare;
  if (s == "circle") return Shape::kCircle;
  if (s == "triangle") return Shape::kTriangle;
  throw std::invalid_argument("unknown shape: " + s);
}

const std::vector<std::string>& motion_labels() {
  static const std::vector<std::string> labels = {"idle", "walk left", "walk right", "wave"};
  return labels;
}

bool is_motion_label(const std::string& label) {
  const auto& ls = motion_labels();
  return std::find(ls.begin(), ls.end(), label) != ls.end();
}

std::string label_from_action(const std::string& action_text) {
  std::string lower;
  lower.reserve(action_text.size());
  for (char c : action_text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const bool walk = lower.find("walk") != std::string::npos;
  if (walk && lower.find("left") != std::string::npos) return "walk left";
  if (walk && lower.find("right") != std::string::npos) return "walk right";
  if (lower.find("wave") != std::string::npos) return "wave";
  return "idle";
}

namespace detail {

Video render(const std::string& label, const Identity& identity,
             const std::vector<double>& aperture) {
  const int frames = static_cast<int>(aperture.size());
  Video video(frames, kPixelSize, kPixelSize);
  double rgb[3];
  hsv_to_rgb(identity.hue, 1.0, kBodyValue, rgb);
  for (int t = 0; t < frames; ++t) {
    double cx, cy;
    sprite_center(label, t, frames, cx, cy);
    const int mouth_y0 = static_cast<int>(std::lround(cy)) + kMouthTop;
    const int mouth_y1 = static_cast<int>(std::lround(cy)) + kMouthBottom;
    const int mouth_x0 = static_cast<int>(std::lround(cx)) - kMouthHalfWidth;
    const int mouth_x1 = static_cast<int>(std::lround(cx)) + kMouthHalfWidth;
    for (int y = 0; y < kPixelSize; ++y)
      for (int x = 0; x < kPixelSize; ++x) {
        const bool mouth = y >= mouth_y0 && y <= mouth_y1 && x >= mouth_x0 && x <= mouth_x1;
        if (mouth) {
          for (int c = 0; c < 3; ++c) video.at(t, y, x, c) = aperture[t];
          continue;
        }
        const double cov = shape_coverage(identity.shape, x, y, cx, cy);
        if (cov > 0.0)
          for (int c = 0; c < 3; ++c) video.at(t, y, x, c) = cov * rgb[c];
      }
  }
  return video;
}

}  // namespace detail

ToySample make_sample(std::uint64_t seed, const std::string& label, const Identity& identity,
                      bool sync_flag) {
  if (!is_motion_label(label)) throw std::invalid_argument("make_sample: unknown label '" + label + "'");
  ToySample sample;
  sample.label = label;
  sample.identity = identity;
  sample.sync_flag = sync_flag;

  Rng env_rng(mix_seed(seed, 0xe57));
  sample.envelope = smooth_signal(env_rng, kFrames);

  std::vector<double> aperture;
  if (sync_flag) {
    aperture = sample.envelope;
  } else {
    Rng noise_rng(mix_seed(seed, 0x0ff));
    aperture = smooth_signal(noise_rng, kFrames);
  }

  sample.pixels = detail::render(label, identity, aperture);
  sample.transcript = "utterance-" + std::to_string(seed % 100000) + " while doing: " + label;
  return sample;
}

Video reference_frame(const Identity& identity) {
  return detail::render("idle", identity, std::vector<double>(1, 0.5));
}

Mat audio_features(const std::vector<double>& envelope) {
  const int n = static_cast<int>(envelope.size());
  Mat feats = Mat::Zero(n, kAudioDim);
  for (int t = 0; t < n; ++t) {
    feats(t, 0) = envelope[t];
    feats(t, 1) = t > 0 ? envelope[t] - envelope[t - 1] : 0.0;
    feats(t, 2) = envelope[std::max(0, t - 1)];
    feats(t, 3) = envelope[std::max(0, t - 2)];
  }
  return feats;
}

}  // namespace avatar::toyworld
