#include <algorithm>
#include <cmath>

#include "avatar/toyworld.hpp"

namespace avatar::toyworld {

namespace {

constexpr double kSatThreshold = 0.2;  // body pixels are strongly saturated
constexpr int kMouthTop = 1, kMouthBottom = 5, kMouthHalfWidth = 5;  // must match the renderer

struct FrameGeometry {
  double cx = 0.0, cy = 0.0;      // body-pixel centroid
  double bbox_cx = 0.0, bbox_cy = 0.0;  // bounding-box center
  double fill_ratio = 0.0;
  double hue_x = 0.0, hue_y = 0.0;  // mean hue unit vector (weighted)
};

double pixel_saturation(const Video& v, int t, int y, int x) {
  const double r = v.at(t, y, x, 0), g = v.at(t, y, x, 1), b = v.at(t, y, x, 2);
  return std::max({r, g, b}) - std::min({r, g, b});
}

double pixel_hue(const Video& v, int t, int y, int x) {
  const double r = v.at(t, y, x, 0), g = v.at(t, y, x, 1), b = v.at(t, y, x, 2);
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double c = mx - mn;
  if (c <= 0.0) return 0.0;
  double h;
  if (mx == r) h = std::fmod((g - b) / c + 6.0, 6.0);
  else if (mx == g) h = (b - r) / c + 2.0;
  else h = (r - g) / c + 4.0;
  return h / 6.0;
}

FrameGeometry frame_geometry(const Video& v, int t) {
  FrameGeometry geo;
  double wsum = 0.0;
  int y0 = v.height, y1 = -1, x0 = v.width, x1 = -1;
  int count = 0;
  for (int y = 0; y < v.height; ++y)
    for (int x = 0; x < v.width; ++x) {
      const double sat = pixel_saturation(v, t, y, x);
      if (sat < kSatThreshold) continue;
      ++count;
      wsum += sat;
      geo.cx += sat * x;
      geo.cy += sat * y;
      const double h = 2.0 * M_PI * pixel_hue(v, t, y, x);
      geo.hue_x += sat * std::cos(h);
      geo.hue_y += sat * std::sin(h);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
    }
  if (count == 0) throw DetectionError("sprite not detectable in frame " + std::to_string(t));
  geo.cx /= wsum;
  geo.cy /= wsum;
  geo.bbox_cx = 0.5 * (x0 + x1);
  geo.bbox_cy = 0.5 * (y0 + y1);
  const double bbox_area = static_cast<double>(y1 - y0 + 1) * (x1 - x0 + 1);
  // count the mouth window as body area: it is interior to the sprite
  geo.fill_ratio = std::min(1.0, (count + (kMouthBottom - kMouthTop + 1) * (2 * kMouthHalfWidth + 1)) /
                                     bbox_area);
  return geo;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(a.size());
  double ma = 0, mb = 0;
  for (int i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 1e-12 || sbb <= 1e-12)
    throw UndefinedScoreError("zero-variance signal in lip-sync measurement");
  return sab / std::sqrt(saa * sbb);
}

double canonical_fill_ratio(Shape shape);

}  // namespace

double lip_sync_score(const Video& video, const std::vector<double>& envelope) {
  if (static_cast<int>(envelope.size()) != video.frames)
    throw std::invalid_argument("lip_sync_score: envelope length mismatch");
  std::vector<double> aperture(video.frames);
  for (int t = 0; t < video.frames; ++t) {
    const FrameGeometry geo = frame_geometry(video, t);
    const int cy = static_cast<int>(std::lround(geo.bbox_cy));
    const int cx = static_cast<int>(std::lround(geo.bbox_cx));
    double sum = 0.0;
    int n = 0;
    for (int y = cy + kMouthTop; y <= cy + kMouthBottom; ++y)
      for (int x = cx - kMouthHalfWidth; x <= cx + kMouthHalfWidth; ++x) {
        if (y < 0 || y >= video.height || x < 0 || x >= video.width) continue;
        sum += (video.at(t, y, x, 0) + video.at(t, y, x, 1) + video.at(t, y, x, 2)) / 3.0;
        ++n;
      }
    if (n == 0) throw DetectionError("mouth window outside frame " + std::to_string(t));
    aperture[t] = sum / n;
  }
  return pearson(aperture, envelope);
}

double motion_variance(const Video& video) {
  double mx = 0, my = 0;
  std::vector<double> xs(video.frames), ys(video.frames);
  for (int t = 0; t < video.frames; ++t) {
    const FrameGeometry geo = frame_geometry(video, t);
    xs[t] = geo.cx;
    ys[t] = geo.cy;
    mx += geo.cx;
    my += geo.cy;
  }
  mx /= video.frames;
  my /= video.frames;
  double var = 0;
  for (int t = 0; t < video.frames; ++t)
    var += (xs[t] - mx) * (xs[t] - mx) + (ys[t] - my) * (ys[t] - my);
  return var / video.frames;
}

double identity_error(const Video& video, const Identity& identity) {
  double hx = 0, hy = 0, fill = 0;
  for (int t = 0; t < video.frames; ++t) {
    const FrameGeometry geo = frame_geometry(video, t);
    hx += geo.hue_x;
    hy += geo.hue_y;
    fill += geo.fill_ratio;
  }
  fill /= video.frames;
  double hue_err = 0.5;  // degenerate hue vector counts as half a turn
  if (hx * hx + hy * hy > 1e-12) {
    double measured = std::atan2(hy, hx) / (2.0 * M_PI);
    if (measured < 0) measured += 1.0;
    double d = std::fabs(measured - identity.hue);
    hue_err = std::min(d, 1.0 - d);
  }
  const double fill_err = std::fabs(fill - canonical_fill_ratio(identity.shape));
  return hue_err + fill_err;
}

namespace {

// Fill ratio measured from an exact reference render of each shape, so that
// identity_error is exactly zero on ground-truth sprites.
double canonical_fill_ratio(Shape shape) {
  static const double ratios[3] = {
      frame_geometry(reference_frame({0.0, Shape::kSquare}), 0).fill_ratio,
      frame_geometry(reference_frame({0.0, Shape::kCircle}), 0).fill_ratio,
      frame_geometry(reference_frame({0.0, Shape::kTriangle}), 0).fill_ratio,
  };
  return ratios[static_cast<int>(shape)];
}

}  // namespace

std::string classify_motion(const Video& video) {
  std::vector<double> xs(video.frames), ys(video.frames);
  for (int t = 0; t < video.frames; ++t) {
    const FrameGeometry geo = frame_geometry(video, t);
    xs[t] = geo.cx;
    ys[t] = geo.cy;
  }
  const double dx = xs.back() - xs.front();
  double ymin = ys[0], ymax = ys[0];
  for (double y : ys) {
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  const double yosc = ymax - ymin;
  const double walk_extent = 0.35 * (video.frames - 1);  // ground-truth walk displacement
  if (std::fabs(dx) > 0.5 * walk_extent) return dx < 0 ? "walk left" : "walk right";
  if (yosc > 2.0) return "wave";
  return "idle";
}

}  // namespace avatar::toyworld
