#include "biopsim/trailseg.hpp"

#include "biopsim/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace biopsim {

namespace {

constexpr int kHistogramBins = 128;
constexpr double kSmoothingSigmaBins = 1.5;
constexpr double kAmbiguityRatio = 0.8;
constexpr double kTissueModeShare = 0.01;
constexpr double kBrightSigmas = 5.0;

double quantile_sorted(const std::vector<double>& v, double q) {
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void principal_axes(const GridGeometry& g, Component& c) {
  Point3 mean = Point3::Zero();
  for (const std::size_t n : c.voxels) mean += g.center(g.unravel(n));
  mean /= static_cast<double>(c.voxels.size());
  Mat3 cov = Mat3::Zero();
  for (const std::size_t n : c.voxels) {
    const Vec3 d = g.center(g.unravel(n)) - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(c.voxels.size());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const double voxel_var = g.spacing * g.spacing / 12.0;
  const double major = std::max(0.0, eig.eigenvalues()(2)) + voxel_var;
  const double minor = std::max(0.0, eig.eigenvalues()(0)) + voxel_var;
  c.centroid = mean;
  c.axis = eig.eigenvectors().col(2).normalized();
  c.elongation = std::sqrt(major / minor);
}

}  // namespace

double auto_threshold(const IntensityVolume& volume) {
  const auto& data = volume.data();
  if (data.empty()) throw Error(ErrorCode::NoTrailFound, "empty volume");
  const auto [mn_it, mx_it] = std::minmax_element(data.begin(), data.end());
  const double lo = *mn_it;
  const double hi = *mx_it;
  if (!(hi > lo)) throw Error(ErrorCode::NoTrailFound, "volume has a single intensity level");

  std::vector<double> hist(kHistogramBins, 0.0);
  const double width = (hi - lo) / kHistogramBins;
  for (const float v : data) {
    const int b = std::min(kHistogramBins - 1, static_cast<int>((v - lo) / width));
    hist[b] += 1.0;
  }
  // Gaussian smoothing with a truncated kernel.
  const int radius = static_cast<int>(std::ceil(3.0 * kSmoothingSigmaBins));
  std::vector<double> kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (kSmoothingSigmaBins * kSmoothingSigmaBins));
  }
  std::vector<double> smooth(kHistogramBins, 0.0);
  for (int b = 0; b < kHistogramBins; ++b) {
    double acc = 0.0, wsum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
      const int k = b + i;
      if (k < 0 || k >= kHistogramBins) continue;
      acc += kernel[i + radius] * hist[k];
      wsum += kernel[i + radius];
    }
    smooth[b] = acc / wsum;
  }

  // Local maxima that are well separated from every higher peak: the valley
  // between a peak and the nearest higher one must drop below half its height.
  const double min_height = std::max(3.0, 1e-5 * static_cast<double>(data.size()));
  std::vector<int> modes;
  for (int b = 0; b < kHistogramBins; ++b) {
    const double h = smooth[b];
    const double left = b > 0 ? smooth[b - 1] : -1.0;
    const double right = b + 1 < kHistogramBins ? smooth[b + 1] : -1.0;
    if (!(h > left && h >= right) || h < min_height) continue;
    double valley_left = h, valley_right = h;
    bool higher_left = false, higher_right = false;
    for (int k = b - 1; k >= 0; --k) {
      if (smooth[k] > h) { higher_left = true; break; }
      valley_left = std::min(valley_left, smooth[k]);
    }
    for (int k = b + 1; k < kHistogramBins; ++k) {
      if (smooth[k] > h) { higher_right = true; break; }
      valley_right = std::min(valley_right, smooth[k]);
    }
    double valley = 0.0;
    if (higher_left && higher_right) valley = std::max(valley_left, valley_right);
    else if (higher_left) valley = valley_left;
    else if (higher_right) valley = valley_right;
    if (valley <= 0.5 * h) modes.push_back(b);
  }
  if (modes.empty()) throw Error(ErrorCode::NoTrailFound, "intensity histogram has no mode");
  // Tissue level: brightest mode carrying a sizeable share of the volume.
  double tallest = 0.0;
  for (const int b : modes) tallest = std::max(tallest, smooth[b]);
  int tissue = modes.front();
  for (const int b : modes)
    if (smooth[b] >= kTissueModeShare * tallest) tissue = b;
  const double tissue_level = lo + (tissue + 0.5) * width;

  // Tissue spread from the half-maximum on the bright side of its peak.
  int half = tissue;
  while (half + 1 < kHistogramBins && smooth[half] > 0.5 * smooth[tissue]) ++half;
  const double sigma = std::max(width, (half - tissue) * width / std::sqrt(2.0 * std::log(2.0)));

  // Bright level: median of the voxels clearly above the tissue distribution.
  const double cut = tissue_level + std::max(kBrightSigmas * sigma, 3.0 * width);
  std::vector<float> bright;
  for (const float v : data)
    if (v > cut) bright.push_back(v);
  if (bright.size() < 3) throw Error(ErrorCode::NoTrailFound, "no voxels above tissue level");
  auto mid = bright.begin() + static_cast<std::ptrdiff_t>(bright.size() / 2);
  std::nth_element(bright.begin(), mid, bright.end());
  return 0.5 * (tissue_level + static_cast<double>(*mid));
}

std::vector<Component> bright_components(const IntensityVolume& volume, double threshold) {
  const GridGeometry& g = volume.geometry();
  const std::size_t n_vox = g.voxel_count();
  std::vector<std::int32_t> label(n_vox, -1);
  std::vector<Component> comps;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < n_vox; ++seed) {
    if (label[seed] >= 0 || !(volume[seed] > threshold)) continue;
    const auto id = static_cast<std::int32_t>(comps.size());
    Component c;
    label[seed] = id;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      c.voxels.push_back(cur);
      const Index3 p = g.unravel(cur);
      for (int dk = -1; dk <= 1; ++dk)
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            const Index3 q{p[0] + di, p[1] + dj, p[2] + dk};
            if (!g.in_bounds(q)) continue;
            const std::size_t nq = g.linear(q);
            if (label[nq] >= 0 || !(volume[nq] > threshold)) continue;
            label[nq] = id;
            stack.push_back(nq);
          }
    }
    std::sort(c.voxels.begin(), c.voxels.end());
    principal_axes(g, c);
    comps.push_back(std::move(c));
  }
  std::stable_sort(comps.begin(), comps.end(), [](const Component& a, const Component& b) {
    return a.voxels.size() > b.voxels.size();
  });
  return comps;
}

TrailSegmentation segment_trail(const IntensityVolume& volume, std::optional<double> threshold) {
  const double thr = threshold ? *threshold : auto_threshold(volume);
  std::vector<Component> comps = bright_components(volume, thr);
  std::erase_if(comps, [](const Component& c) { return c.elongation < kMinTrailElongation; });
  if (comps.empty()) throw Error(ErrorCode::NoTrailFound, "no elongated bright component");
  if (comps.size() > 1 &&
      static_cast<double>(comps[1].voxels.size()) >= kAmbiguityRatio * static_cast<double>(comps[0].voxels.size())) {
    throw Error(ErrorCode::AmbiguousTrail, "two trail candidates of similar size");
  }

  const Component& trail = comps.front();
  const GridGeometry& g = volume.geometry();
  std::vector<double> proj;
  proj.reserve(trail.voxels.size());
  for (const std::size_t n : trail.voxels) proj.push_back((g.center(g.unravel(n)) - trail.centroid).dot(trail.axis));
  std::sort(proj.begin(), proj.end());

  TrailSegmentation out;
  out.threshold = thr;
  out.fitted.start = trail.centroid + quantile_sorted(proj, 0.01) * trail.axis;
  out.fitted.end = trail.centroid + quantile_sorted(proj, 0.99) * trail.axis;
  if (!(out.fitted.length() > 0.0)) throw Error(ErrorCode::NoTrailFound, "degenerate trail component");

  double ss = 0.0;
  out.voxel_indices.reserve(trail.voxels.size());
  for (const std::size_t n : trail.voxels) {
    const Index3 idx = g.unravel(n);
    out.voxel_indices.push_back(idx);
    const double d = point_segment_distance(g.center(idx), out.fitted);
    ss += d * d;
  }
  out.inlier_rms = std::sqrt(ss / static_cast<double>(trail.voxels.size()));
  return out;
}

}  // namespace biopsim
