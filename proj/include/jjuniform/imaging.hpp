#pragma once

// Top-view junction micrographs: a synthetic renderer of the crossed
// electrodes, and width/overlap extraction by a sweep of mean-relative
// binarization thresholds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "image.hpp"
#include "shadow_model.hpp"

namespace jju {

struct RenderSettings {
  double scale_nm_per_px = 2.0;
  int width_px = 640;
  int height_px = 640;
  double noise_sigma = 0.0; // fraction of full scale (8/255 = 8 grey levels)
  std::uint64_t seed = 1;
  Fidelity fidelity = Fidelity::Basic; // Full takes the top width with lip shading
  double background = 10.0;
  double bottom = 160.0;
  double top = 200.0;
  double overlap = 230.0;
};

/// Where the renderer put the electrodes, in pixels.
struct RenderTruth {
  double top_start_px = 0.0;    // first row edge of the horizontal band
  double w_top_px = 0.0;
  double bottom_start_px = 0.0; // first column edge of the vertical band
  double w_bottom_px = 0.0;
};

struct EdgePair {
  int first = -1;
  int last = -1;
  bool valid() const { return first >= 0 && last >= first; }
  int width() const { return valid() ? last - first + 1 : 0; }
};

struct ThresholdEdges {
  double threshold = 0.0; // multiple of the mean pixel value
  EdgePair top_rows;
  EdgePair bottom_cols;
};

struct ExtractionResult {
  double w_top_nm = 0.0;
  double w_bottom_nm = 0.0;
  double a_overlap_um2 = 0.0;
  double w_top_px = 0.0;
  double w_bottom_px = 0.0;
  std::vector<ThresholdEdges> per_threshold;
  std::vector<double> thresholds_used;
};

namespace imaging {

namespace detail {

// Length of [lo, hi) covered by the unit cell [i, i + 1).
inline double coverage(int i, double lo, double hi) {
  return std::clamp(std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i)), 0.0, 1.0);
}

} // namespace detail

/// Widths the renderer draws at `p`, in nm.
inline std::pair<double, double> rendered_widths_nm(const EvaporatorGeometry& geom,
                                                    const JunctionDesign& design, WaferPoint p,
                                                    Fidelity fidelity) {
  const double wb = shadow::actual_width_vertical(geom, design.w_bottom_nm, p.x_mm);
  const double wt = fidelity == Fidelity::Full
                        ? shadow::actual_top_width(geom, design.w_top_nm, p)
                        : shadow::actual_width_horizontal(geom, design.w_top_nm, p.y_mm);
  return {wt, wb};
}

/// Bands drawn with exact area coverage: a band starts on a pixel boundary
/// and a fractional width shows up as one partially lit edge row or column.
inline GrayImage render_bands(double w_top_px, double w_bottom_px, const RenderSettings& s,
                              RenderTruth* truth = nullptr) {
  if (s.width_px <= 0 || s.height_px <= 0) throw DataError("canvas dimensions must be positive");
  const double top0 = std::floor((s.height_px - w_top_px) / 2.0);
  const double bot0 = std::floor((s.width_px - w_bottom_px) / 2.0);
  if (!(w_top_px > 0.0) || !(w_bottom_px > 0.0) || top0 < 1.0 || bot0 < 1.0 ||
      top0 + w_top_px > s.height_px - 1.0 || bot0 + w_bottom_px > s.width_px - 1.0)
    throw DataError("electrodes do not fit on the canvas");

  GrayImage img(s.width_px, s.height_px, s.scale_nm_per_px);
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> noise(0.0, s.noise_sigma * 255.0);
  std::vector<double> col_cov(s.width_px);
  for (int x = 0; x < s.width_px; ++x) col_cov[x] = detail::coverage(x, bot0, bot0 + w_bottom_px);
  for (int y = 0; y < s.height_px; ++y) {
    const double ct = detail::coverage(y, top0, top0 + w_top_px);
    for (int x = 0; x < s.width_px; ++x) {
      const double cb = col_cov[x];
      double v = s.background * (1 - ct) * (1 - cb) + s.top * ct * (1 - cb) +
                 s.bottom * (1 - ct) * cb + s.overlap * ct * cb;
      if (s.noise_sigma > 0.0) v += noise(rng);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  if (truth) *truth = {top0, w_top_px, bot0, w_bottom_px};
  return img;
}

/// Render the junction at wafer position `p`: a horizontal top electrode, a
/// dimmer vertical bottom electrode, brightest where they overlap.
inline GrayImage render_junction(const EvaporatorGeometry& geom, const JunctionDesign& design,
                                 WaferPoint p, const RenderSettings& s,
                                 RenderTruth* truth = nullptr) {
  const auto [wt, wb] = rendered_widths_nm(geom, design, p, s.fidelity);
  GrayImage img = render_bands(wt / s.scale_nm_per_px, wb / s.scale_nm_per_px, s, truth);
  img.position = p;
  return img;
}

inline std::vector<double> threshold_set(int count) {
  if (count < 1) throw DataError("threshold count must be at least 1");
  std::vector<double> t;
  for (int k = 0; k < count; ++k) t.push_back(count == 1 ? 1.0 : 1.0 + static_cast<double>(k) / (count - 1));
  return t;
}

inline double mean_pixel(const GrayImage& img) {
  std::uint64_t sum = 0;
  for (auto p : img.pixels) sum += p;
  return static_cast<double>(sum) / static_cast<double>(img.pixels.size());
}

struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> on;
  bool at(int x, int y) const { return on[static_cast<std::size_t>(y) * width + x] != 0; }
};

inline BinaryImage binarize(const GrayImage& img, double level) {
  BinaryImage b{img.width, img.height, std::vector<std::uint8_t>(img.pixels.size())};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) b.on[i] = img.pixels[i] > level ? 1 : 0;
  return b;
}

/// Contiguous run around the profile maximum above the midpoint between the
/// profile's minimum and maximum. Runs touching the border have a missing
/// edge and are rejected.
inline EdgePair find_band(const std::vector<int>& profile) {
  const auto [mn, mx] = std::minmax_element(profile.begin(), profile.end());
  if (*mx == 0 || *mx == *mn) return {};
  const double level = 0.5 * (*mn + *mx);
  const int n = static_cast<int>(profile.size());
  EdgePair best;
  for (int i = 0; i < n;) {
    if (profile[i] <= level) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && profile[j + 1] > level) ++j;
    if (j - i > best.last - best.first) best = {i, j};
    i = j + 1;
  }
  if (!best.valid() || best.first == 0 || best.last == n - 1) return {};
  return best;
}

/// 3x3 closing of the binary image, written back only on rows [r0, r1].
/// Pixels outside the image count as background for the dilation and as
/// foreground for the erosion.
inline void close_rows(BinaryImage& b, int r0, int r1) {
  const int w = b.width, h = b.height;
  const int d0 = std::max(0, r0 - 1), d1 = std::min(h - 1, r1 + 1);
  const int h0 = std::max(0, d0 - 1), h1 = std::min(h - 1, d1 + 1);
  const std::size_t n = static_cast<std::size_t>(w) * (h1 - h0 + 1);
  // Row y of the image lives at row y - h0 of the scratch buffers.
  auto at = [w, h0](std::vector<std::uint8_t>& v, int x, int y) -> std::uint8_t& {
    return v[static_cast<std::size_t>(y - h0) * w + x];
  };
  std::vector<std::uint8_t> horiz(n, 0), dil(n, 1), ero(n, 1);
  for (int y = h0; y <= h1; ++y) {
    const std::uint8_t* src = &b.on[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x)
      at(horiz, x, y) = src[x] | (x > 0 ? src[x - 1] : 0) | (x + 1 < w ? src[x + 1] : 0);
  }
  for (int y = d0; y <= d1; ++y)
    for (int x = 0; x < w; ++x)
      at(dil, x, y) = at(horiz, x, y) | (y > h0 ? at(horiz, x, y - 1) : 0) | (y < h1 ? at(horiz, x, y + 1) : 0);
  for (int y = d0; y <= d1; ++y)
    for (int x = 0; x < w; ++x)
      at(ero, x, y) = at(dil, x, y) & (x > 0 ? at(dil, x - 1, y) : 1) & (x + 1 < w ? at(dil, x + 1, y) : 1);
  for (int y = r0; y <= r1; ++y) {
    std::uint8_t* dst = &b.on[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x)
      dst[x] = at(ero, x, y) & (y > d0 ? at(ero, x, y - 1) : 1) & (y < d1 ? at(ero, x, y + 1) : 1);
  }
}

inline std::vector<int> row_sums(const BinaryImage& b) {
  std::vector<int> s(b.height, 0);
  for (int y = 0; y < b.height; ++y) {
    const std::uint8_t* r = &b.on[static_cast<std::size_t>(y) * b.width];
    s[y] = std::accumulate(r, r + b.width, 0);
  }
  return s;
}

inline std::vector<int> col_sums(const BinaryImage& b) {
  std::vector<int> s(b.width, 0);
  for (int y = 0; y < b.height; ++y) {
    const std::uint8_t* r = &b.on[static_cast<std::size_t>(y) * b.width];
    for (int x = 0; x < b.width; ++x) s[x] += r[x];
  }
  return s;
}

/// Binarize at `t` times the mean, locate the top band and fill it.
inline std::pair<BinaryImage, EdgePair> binarize_and_fill(const GrayImage& img, double mean, double t) {
  BinaryImage b = binarize(img, t * mean);
  const EdgePair top = find_band(row_sums(b));
  if (top.valid()) close_rows(b, top.first, top.last);
  return {std::move(b), top};
}

inline double widths_mean(const std::vector<int>& w) {
  double s = 0.0;
  int n = 0;
  for (int v : w)
    if (v > 0) {
      s += v;
      ++n;
    }
  return n ? s / n : 0.0;
}

namespace detail {

// Threshold sweep; keeps the filled binary images when `kept` is given.
inline ExtractionResult sweep(const GrayImage& img, int threshold_count, std::vector<BinaryImage>* kept) {
  img.validate();
  ExtractionResult res;
  res.thresholds_used = threshold_set(threshold_count);
  const double mean = mean_pixel(img);
  std::vector<int> wt, wb;
  for (double t : res.thresholds_used) {
    auto [b, top] = binarize_and_fill(img, mean, t);
    const EdgePair bottom = find_band(col_sums(b));
    res.per_threshold.push_back({t, top, bottom});
    wt.push_back(top.width());
    wb.push_back(bottom.width());
    if (kept) kept->push_back(std::move(b));
  }
  res.w_top_px = widths_mean(wt);
  res.w_bottom_px = widths_mean(wb);
  if (res.w_top_px == 0.0 && res.w_bottom_px == 0.0)
    throw ExtractionFailure("no electrode edges detected at any threshold");
  res.w_top_nm = res.w_top_px * img.scale_nm_per_px;
  res.w_bottom_nm = res.w_bottom_px * img.scale_nm_per_px;
  return res;
}

// Overlap area from the filled images of a sweep, one per threshold.
inline double overlap_area(const GrayImage& img, const ExtractionResult& res,
                           const std::vector<BinaryImage>& filled) {
  int outer_first = -1, outer_last = -1, inner_first = -1, inner_last = -1;
  std::vector<std::size_t> usable;
  for (std::size_t k = 0; k < res.per_threshold.size(); ++k) {
    const auto& e = res.per_threshold[k];
    if (!e.top_rows.valid() || !e.bottom_cols.valid()) continue;
    usable.push_back(k);
    outer_first = outer_first < 0 ? e.top_rows.first : std::min(outer_first, e.top_rows.first);
    outer_last = std::max(outer_last, e.top_rows.last);
    inner_first = std::max(inner_first, e.bottom_cols.first);
    inner_last = inner_last < 0 ? e.bottom_cols.last : std::min(inner_last, e.bottom_cols.last);
  }
  if (usable.empty())
    throw ExtractionFailure("overlap needs both electrodes' edges at one threshold at least");
  if (outer_last >= img.height || inner_last >= img.width || inner_first > inner_last)
    throw ExtractionFailure("inconsistent electrode edges");
  double total = 0.0;
  for (std::size_t k : usable) {
    const BinaryImage& b = filled[k];
    long count = 0;
    for (int y = outer_first; y <= outer_last; ++y)
      for (int x = inner_first; x <= inner_last; ++x) count += b.at(x, y);
    total += static_cast<double>(count);
  }
  const double px = total / static_cast<double>(usable.size());
  return px * img.scale_nm_per_px * img.scale_nm_per_px / kNm2PerUm2;
}

} // namespace detail

/// Edge detection at every threshold without the area step.
inline ExtractionResult detect_edges(const GrayImage& img, int threshold_count = 11) {
  return detail::sweep(img, threshold_count, nullptr);
}

/// Overlap area in um^2: bright pixels between the outer row edges of the
/// top electrode and the inner column edges of the bottom electrode,
/// averaged over the thresholds where both electrodes were found.
inline double extract_overlap_area(const GrayImage& img, const ExtractionResult& res) {
  const double mean = mean_pixel(img);
  std::vector<BinaryImage> filled;
  for (const auto& e : res.per_threshold) filled.push_back(binarize_and_fill(img, mean, e.threshold).first);
  return detail::overlap_area(img, res, filled);
}

/// Widths and overlap area of the single junction cross in `img`.
inline ExtractionResult extract_widths(const GrayImage& img, int threshold_count = 11) {
  std::vector<BinaryImage> filled;
  ExtractionResult res = detail::sweep(img, threshold_count, &filled);
  res.a_overlap_um2 = detail::overlap_area(img, res, filled);
  return res;
}

} // namespace imaging
} // namespace jju
