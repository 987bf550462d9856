#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hsicnet/events.hpp"
#include "hsicnet/matrix.hpp"

namespace hsicnet::cam {

// Class activation profile on the input timeline. Values beyond the
// original (pre-padding) length are zeroed.
struct ActivationMap {
  std::vector<double> values;  // length = input_len (possibly trimmed)
  double fs = 0.0;
  std::size_t orig_len = 0;
};

// Weighted channel sum of the pre-pooling maps (rows = channels), stretched
// x2 onto the input timeline by linear midpoint interpolation and masked
// beyond orig_len. weights.size() must equal maps.rows.
ActivationMap compute_cam(const Matrix& feature_maps,
                          const std::vector<double>& weights, double fs,
                          std::size_t input_len, std::size_t orig_len);

// Landmark-relative extraction window, signed milliseconds (lo < hi; the
// landmark sits at 0).
struct WindowMs {
  double lo_ms = 0.0;
  double hi_ms = 0.0;
};

struct AlignedTemplate {
  std::vector<double> time_ms;               // window grid relative to landmark
  std::vector<double> mean_profile;          // pointwise mean of profiles
  std::vector<std::vector<double>> profiles; // per-event, min-max normalized
  std::size_t n_events = 0;                  // profiles kept
  std::size_t n_skipped = 0;                 // windows that left the signal
  double fs = 0.0;
  WindowMs window;
};

// Cuts one window per event out of each record's activation map, min-max
// normalizes each profile to [0, 1] (constant profiles become flat 0.5), and
// averages pointwise. maps[i] pairs with events[i]; windows that cross the
// record boundary (orig_len) are skipped and counted.
AlignedTemplate aligned_templates(const std::vector<ActivationMap>& maps,
                                  const std::vector<EventList>& events,
                                  WindowMs window);

// aligned_templates after corrupting every event index by a uniform shift in
// [0, intensity_ms] (rounded to samples). intensity 0 reproduces
// aligned_templates bit-for-bit.
AlignedTemplate noise_analysis(const std::vector<ActivationMap>& maps,
                               const std::vector<EventList>& events,
                               WindowMs window, double intensity_ms,
                               std::uint64_t seed);

// Per-event mean of the normalized profile inside a sub-window (relative to
// the landmark, must lie inside the template window). Errors on an empty
// event set or an out-of-range sub-window.
std::vector<double> window_means(const AlignedTemplate& tpl, WindowMs sub);

// Peak prominence of a mean profile: max minus median (robust baseline).
double peak_prominence(const std::vector<double>& profile);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
  bool degenerate = false;  // zero-variance differences with nonzero mean
};

// Paired t-test over equal-length samples; p is two-sided by default,
// one-sided (a > b) when greater_only. Zero-variance differences yield
// p = 1 when the mean difference is zero, else the degenerate p = 0 flag.
TTestResult paired_ttest(const std::vector<double>& a,
                         const std::vector<double>& b,
                         bool greater_only = false);

}  // namespace hsicnet::cam
