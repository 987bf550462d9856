#include "hsicnet/cam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "hsicnet/error.hpp"
#include "hsicnet/rng.hpp"
#include "hsicnet/stats.hpp"

namespace hsicnet::cam {

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

long ms_to_samples(double ms, double fs) {
  return std::lround(ms * fs / 1000.0);
}

// Shared core of aligned_templates / noise_analysis: the landmark lists are
// already resolved to (possibly shifted) sample indices.
AlignedTemplate build_templates(const std::vector<ActivationMap>& maps,
                                const std::vector<std::vector<long>>& landmarks,
                                double fs, WindowMs window) {
  if (!(window.lo_ms < window.hi_ms))
    fail(ErrorKind::invalid_argument,
         "aligned_templates: window.lo_ms must be below window.hi_ms");
  const long o_lo = ms_to_samples(window.lo_ms, fs);
  const long o_hi = ms_to_samples(window.hi_ms, fs);
  const std::size_t width = static_cast<std::size_t>(o_hi - o_lo) + 1;

  AlignedTemplate tpl;
  tpl.fs = fs;
  tpl.window = window;
  tpl.time_ms.resize(width);
  for (std::size_t j = 0; j < width; ++j)
    tpl.time_ms[j] = static_cast<double>(o_lo + static_cast<long>(j)) * 1000.0 / fs;

  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto& map = maps[i];
    for (long idx : landmarks[i]) {
      long lo = idx + o_lo, hi = idx + o_hi;
      if (lo < 0 || hi >= static_cast<long>(map.orig_len)) {
        ++tpl.n_skipped;
        continue;
      }
      std::vector<double> profile(width);
      for (std::size_t j = 0; j < width; ++j)
        profile[j] = map.values[static_cast<std::size_t>(lo) + j];
      double mn = *std::min_element(profile.begin(), profile.end());
      double mx = *std::max_element(profile.begin(), profile.end());
      if (mx > mn) {
        for (auto& v : profile) v = (v - mn) / (mx - mn);
      } else {
        std::fill(profile.begin(), profile.end(), 0.5);
      }
      tpl.profiles.push_back(std::move(profile));
    }
  }
  tpl.n_events = tpl.profiles.size();

  tpl.mean_profile.assign(width, 0.0);
  if (tpl.n_events > 0) {
    for (const auto& p : tpl.profiles)
      for (std::size_t j = 0; j < width; ++j) tpl.mean_profile[j] += p[j];
    for (auto& v : tpl.mean_profile) v /= static_cast<double>(tpl.n_events);
  }
  return tpl;
}

double check_common_fs(const std::vector<ActivationMap>& maps,
                       const std::vector<EventList>& events) {
  if (maps.size() != events.size())
    fail(ErrorKind::invalid_argument,
         "aligned_templates: one event list per activation map required");
  if (maps.empty())
    fail(ErrorKind::invalid_argument, "aligned_templates: no activation maps");
  double fs = maps[0].fs;
  if (!(fs > 0.0))
    fail(ErrorKind::invalid_argument, "aligned_templates: fs must be positive");
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (maps[i].fs != fs || events[i].fs != fs)
      fail(ErrorKind::invalid_argument,
           "aligned_templates: all maps and events must share one sampling rate");
    if (maps[i].values.size() < maps[i].orig_len)
      fail(ErrorKind::invalid_argument,
           "aligned_templates: map shorter than its original length");
  }
  return fs;
}

}  // namespace

ActivationMap compute_cam(const Matrix& feature_maps,
                          const std::vector<double>& weights, double fs,
                          std::size_t input_len, std::size_t orig_len) {
  if (feature_maps.rows == 0 || feature_maps.cols == 0)
    fail(ErrorKind::invalid_argument, "compute_cam: empty feature maps");
  if (weights.size() != feature_maps.rows)
    fail(ErrorKind::invalid_argument,
         "compute_cam: one weight per feature-map channel required");
  if (!(fs > 0.0))
    fail(ErrorKind::invalid_argument, "compute_cam: fs must be positive");
  if (orig_len > input_len)
    fail(ErrorKind::invalid_argument,
         "compute_cam: orig_len exceeds input_len");

  const std::size_t t_half = feature_maps.cols;
  std::vector<double> raw(t_half, 0.0);
  for (std::size_t c = 0; c < feature_maps.rows; ++c) {
    const double wc = weights[c];
    const double* row = feature_maps.row(c);
    for (std::size_t t = 0; t < t_half; ++t) raw[t] += wc * row[t];
  }

  // Stretch x2 onto the input grid: even samples copy, odd samples take the
  // midpoint of their neighbours (the trailing odd sample replicates).
  if (2 * t_half < input_len)
    fail(ErrorKind::invalid_argument,
         "compute_cam: feature maps too short for the requested input length");
  std::vector<double> up(2 * t_half);
  for (std::size_t t = 0; t < t_half; ++t) {
    up[2 * t] = raw[t];
    up[2 * t + 1] = t + 1 < t_half ? 0.5 * (raw[t] + raw[t + 1]) : raw[t];
  }
  up.resize(input_len);
  for (std::size_t t = orig_len; t < input_len; ++t) up[t] = 0.0;

  ActivationMap out;
  out.values = std::move(up);
  out.fs = fs;
  out.orig_len = orig_len;
  return out;
}

AlignedTemplate aligned_templates(const std::vector<ActivationMap>& maps,
                                  const std::vector<EventList>& events,
                                  WindowMs window) {
  double fs = check_common_fs(maps, events);
  std::vector<std::vector<long>> landmarks(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    landmarks[i].reserve(events[i].indices.size());
    for (auto idx : events[i].indices)
      landmarks[i].push_back(static_cast<long>(idx));
  }
  return build_templates(maps, landmarks, fs, window);
}

AlignedTemplate noise_analysis(const std::vector<ActivationMap>& maps,
                               const std::vector<EventList>& events,
                               WindowMs window, double intensity_ms,
                               std::uint64_t seed) {
  if (intensity_ms < 0.0)
    fail(ErrorKind::invalid_argument,
         "noise_analysis: intensity must be non-negative");
  double fs = check_common_fs(maps, events);
  Rng rng(seed);
  std::vector<std::vector<long>> landmarks(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    landmarks[i].reserve(events[i].indices.size());
    for (auto idx : events[i].indices) {
      double shift_ms = rng.uniform() * intensity_ms;
      landmarks[i].push_back(static_cast<long>(idx) +
                             ms_to_samples(shift_ms, fs));
    }
  }
  return build_templates(maps, landmarks, fs, window);
}

std::vector<double> window_means(const AlignedTemplate& tpl, WindowMs sub) {
  if (tpl.profiles.empty())
    fail(ErrorKind::invalid_argument, "window_means: template has no events");
  if (!(sub.lo_ms < sub.hi_ms))
    fail(ErrorKind::invalid_argument,
         "window_means: sub.lo_ms must be below sub.hi_ms");
  const long o_lo = ms_to_samples(tpl.window.lo_ms, tpl.fs);
  const long s_lo = ms_to_samples(sub.lo_ms, tpl.fs);
  const long s_hi = ms_to_samples(sub.hi_ms, tpl.fs);
  const long width = static_cast<long>(tpl.time_ms.size());
  long j_lo = s_lo - o_lo, j_hi = s_hi - o_lo;
  if (j_lo < 0 || j_hi >= width)
    fail(ErrorKind::invalid_argument,
         "window_means: sub-window leaves the template window");

  std::vector<double> means;
  means.reserve(tpl.profiles.size());
  for (const auto& p : tpl.profiles) {
    double s = 0.0;
    for (long j = j_lo; j <= j_hi; ++j) s += p[static_cast<std::size_t>(j)];
    means.push_back(s / static_cast<double>(j_hi - j_lo + 1));
  }
  return means;
}

double peak_prominence(const std::vector<double>& profile) {
  if (profile.empty())
    fail(ErrorKind::invalid_argument, "peak_prominence: empty profile");
  double mx = *std::max_element(profile.begin(), profile.end());
  return mx - median_of(profile);
}

TTestResult paired_ttest(const std::vector<double>& a,
                         const std::vector<double>& b, bool greater_only) {
  if (a.size() != b.size())
    fail(ErrorKind::invalid_argument, "paired_ttest: unequal sample sizes");
  if (a.size() < 2)
    fail(ErrorKind::invalid_argument,
         "paired_ttest: need at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult r;
  r.df = n - 1;
  if (sd == 0.0) {
    if (mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      // All differences identical and nonzero: the statistic is unbounded.
      r.t = mean > 0.0 ? HUGE_VAL : -HUGE_VAL;
      r.p = greater_only && mean < 0.0 ? 1.0 : 0.0;
      r.degenerate = true;
    }
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  double cdf = stats::t_cdf(r.t, static_cast<int>(r.df));
  r.p = greater_only ? 1.0 - cdf
                     : 2.0 * std::min(cdf, 1.0 - cdf);
  return r;
}

}  // namespace hsicnet::cam
