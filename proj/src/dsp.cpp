#include "hsicnet/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>

#include <fftw3.h>

#include "hsicnet/error.hpp"

namespace hsicnet::dsp {

namespace {
constexpr double kPi = 3.14159265358979323846;

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x); }

// reflect index into [0, n)
std::size_t reflect(long long i, std::size_t n) {
  if (n == 1) return 0;
  auto m = static_cast<long long>(n);
  while (i < 0 || i >= m) {
    if (i < 0) i = -i;
    if (i >= m) i = 2 * m - 2 - i;
  }
  return static_cast<std::size_t>(i);
}
}  // namespace

std::vector<double> design_lowpass_fir(double cutoff_hz, double fs,
                                       std::size_t taps) {
  if (taps % 2 == 0 || taps < 3)
    fail(ErrorKind::invalid_argument, "FIR taps must be odd and >= 3");
  if (cutoff_hz <= 0.0 || cutoff_hz >= 0.5 * fs)
    fail(ErrorKind::invalid_argument, "FIR cutoff must sit below Nyquist");
  double fc = cutoff_hz / fs;
  auto mid = static_cast<double>(taps / 2);
  std::vector<double> h(taps);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps; ++i) {
    double x = static_cast<double>(i) - mid;
    double w = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                      static_cast<double>(taps - 1));
    h[i] = 2.0 * fc * sinc(2.0 * fc * x) * w;
    sum += h[i];
  }
  for (auto& v : h) v /= sum;  // exact unit DC gain
  return h;
}

std::vector<double> design_bandpass_fir(double lo_hz, double hi_hz, double fs,
                                        std::size_t taps) {
  if (lo_hz <= 0.0 || hi_hz <= lo_hz)
    fail(ErrorKind::invalid_argument, "band edges must satisfy 0 < lo < hi");
  auto hi = design_lowpass_fir(hi_hz, fs, taps);
  auto lo = design_lowpass_fir(lo_hz, fs, taps);
  for (std::size_t i = 0; i < taps; ++i) hi[i] -= lo[i];
  return hi;
}

std::vector<double> filter_same(const std::vector<double>& x,
                                const std::vector<double>& kernel) {
  if (kernel.size() % 2 == 0)
    fail(ErrorKind::invalid_argument, "filter_same: kernel length must be odd");
  if (x.empty()) return {};
  auto half = static_cast<long long>(kernel.size() / 2);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < kernel.size(); ++j) {
      long long src = static_cast<long long>(i) + static_cast<long long>(j) - half;
      acc += kernel[j] * x[reflect(src, x.size())];
    }
    y[i] = acc;
  }
  return y;
}

// --- Welch ----------------------------------------------------------------------

namespace {
// FFTW plans are cached per segment length; all calls run on one thread.
struct FftPlan {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;
  std::size_t n = 0;

  explicit FftPlan(std::size_t len) : n(len) {
    in = fftw_alloc_real(len);
    out = fftw_alloc_complex(len / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in, out, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    if (plan) fftw_destroy_plan(plan);
    if (in) fftw_free(in);
    if (out) fftw_free(out);
  }
};

FftPlan& plan_for(std::size_t len) {
  static std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
  auto& slot = cache[len];
  if (!slot) slot = std::make_unique<FftPlan>(len);
  return *slot;
}
}  // namespace

PowerSpectrum welch_psd(const std::vector<double>& samples, double fs,
                        std::size_t segment_len, double overlap) {
  if (samples.size() < 2)
    fail(ErrorKind::invalid_argument, "welch_psd: need at least two samples");
  if (fs <= 0.0) fail(ErrorKind::invalid_argument, "welch_psd: fs must be positive");
  if (overlap < 0.0 || overlap >= 1.0)
    fail(ErrorKind::invalid_argument, "welch_psd: overlap must be in [0, 1)");

  std::size_t n = samples.size();
  if (segment_len == 0)
    segment_len = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::llround(4.0 * fs)));
  segment_len = std::min(segment_len, n);
  if (segment_len < 2)
    fail(ErrorKind::invalid_argument, "welch_psd: segment too short");

  std::vector<double> window(segment_len);
  double win_power = 0.0;  // sum of squared window samples
  for (std::size_t i = 0; i < segment_len; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                      static_cast<double>(segment_len - 1)));
    win_power += window[i] * window[i];
  }

  auto hop = static_cast<std::size_t>(
      std::llround(static_cast<double>(segment_len) * (1.0 - overlap)));
  hop = std::max<std::size_t>(1, hop);

  std::size_t bins = segment_len / 2 + 1;
  std::vector<double> acc(bins, 0.0);
  std::size_t n_segments = 0;
  auto& fft = plan_for(segment_len);
  for (std::size_t start = 0; start + segment_len <= n; start += hop) {
    for (std::size_t i = 0; i < segment_len; ++i)
      fft.in[i] = samples[start + i] * window[i];
    fftw_execute(fft.plan);
    for (std::size_t k = 0; k < bins; ++k)
      acc[k] += fft.out[k][0] * fft.out[k][0] + fft.out[k][1] * fft.out[k][1];
    ++n_segments;
  }

  // one-sided density scaling; sum(power) * df recovers the variance of
  // zero-mean input (Parseval, up to window leakage)
  PowerSpectrum psd;
  psd.freqs.resize(bins);
  psd.power.resize(bins);
  double scale = 1.0 / (fs * win_power * static_cast<double>(n_segments));
  for (std::size_t k = 0; k < bins; ++k) {
    psd.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(segment_len);
    double p = acc[k] * scale;
    bool interior = k > 0 && !(segment_len % 2 == 0 && k == bins - 1);
    psd.power[k] = interior ? 2.0 * p : p;
  }
  return psd;
}

std::vector<double> relative_bandpower(
    const PowerSpectrum& psd, const std::vector<FrequencyBand>& bands) {
  if (bands.empty()) fail(ErrorKind::invalid_argument, "bandpower: no bands");
  if (psd.freqs.size() < 2)
    fail(ErrorKind::invalid_argument, "bandpower: degenerate spectrum");
  double lo_all = bands.front().lo_hz, hi_all = bands.front().hi_hz;
  for (const auto& b : bands) {
    if (b.hi_hz <= b.lo_hz)
      fail(ErrorKind::invalid_argument, "bandpower: band " + b.name +
                                            " has hi <= lo");
    lo_all = std::min(lo_all, b.lo_hz);
    hi_all = std::max(hi_all, b.hi_hz);
  }

  double df = psd.freqs[1] - psd.freqs[0];
  auto band_power = [&](double lo, double hi) {
    double acc = 0.0;
    for (std::size_t k = 0; k < psd.freqs.size(); ++k)
      if (psd.freqs[k] >= lo && psd.freqs[k] < hi) acc += psd.power[k] * df;
    return acc;
  };

  double total = band_power(lo_all, hi_all);
  if (total <= 0.0)
    fail(ErrorKind::numeric, "bandpower: zero power in the covering range");
  std::vector<double> out;
  out.reserve(bands.size());
  for (const auto& b : bands) out.push_back(band_power(b.lo_hz, b.hi_hz) / total);
  return out;
}

const std::vector<FrequencyBand>& eeg_bands() {
  static const std::vector<FrequencyBand> bands = {
      {"Delta", 0.5, 4.0}, {"Theta", 4.0, 8.0}, {"Alpha", 8.0, 12.0},
      {"Beta", 12.0, 30.0}};
  return bands;
}

// --- QRS detection ----------------------------------------------------------------

EventList detect_r_peaks(const std::vector<double>& samples, double fs) {
  if (fs <= 0.0) fail(ErrorKind::invalid_argument, "detect_r_peaks: fs <= 0");
  if (static_cast<double>(samples.size()) < fs)
    fail(ErrorKind::invalid_argument,
         "detect_r_peaks: need at least one second of signal");

  // band-pass keeps the QRS energy and kills baseline wander + offset
  double hi = std::min(20.0, 0.45 * fs);
  double lo = std::min(5.0, 0.5 * hi);
  auto bp = filter_same(samples, design_bandpass_fir(lo, hi, fs, 61));

  std::size_t n = bp.size();
  std::vector<double> sq(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double d = 0.5 * (bp[i + 1] - bp[i - 1]);
    sq[i] = d * d;
  }

  // centered moving-window integration, 150 ms
  auto win = static_cast<std::size_t>(std::llround(0.150 * fs)) | 1u;
  auto half = static_cast<long long>(win / 2);
  std::vector<double> integ(n, 0.0);
  {
    // prefix sums; the window is clipped at the edges
    std::vector<double> pre(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) pre[i + 1] = pre[i] + sq[i];
    for (std::size_t i = 0; i < n; ++i) {
      auto a = std::max<long long>(0, static_cast<long long>(i) - half);
      auto b = std::min<long long>(static_cast<long long>(n) - 1,
                                   static_cast<long long>(i) + half);
      integ[i] = (pre[b + 1] - pre[a]) / static_cast<double>(b - a + 1);
    }
  }

  double peak_cap = *std::max_element(integ.begin(), integ.end());
  EventList out;
  out.kind = EventKind::r_peak;
  out.fs = fs;
  if (peak_cap < 1e-14) return out;  // flat input

  // adaptive signal/noise levels seeded on the first two seconds
  auto warm = std::min<std::size_t>(n, static_cast<std::size_t>(2.0 * fs));
  double spk = *std::max_element(integ.begin(), integ.begin() + warm);
  double npk =
      std::accumulate(integ.begin(), integ.begin() + warm, 0.0) /
      static_cast<double>(warm);
  auto threshold = [&] { return npk + 0.25 * (spk - npk); };

  auto refractory = static_cast<std::size_t>(std::llround(0.200 * fs));
  auto refine_half = static_cast<long long>(std::llround(0.100 * fs));
  long long last = -static_cast<long long>(refractory) - 1;

  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(integ[i] > integ[i - 1] && integ[i] >= integ[i + 1])) continue;
    if (static_cast<long long>(i) - last < static_cast<long long>(refractory))
      continue;
    if (integ[i] > threshold()) {
      spk = 0.125 * integ[i] + 0.875 * spk;
      last = static_cast<long long>(i);
      // put the landmark on the band-passed maximum near the energy peak
      auto a = static_cast<std::size_t>(
          std::max<long long>(0, static_cast<long long>(i) - refine_half));
      auto b = std::min(n - 1, i + static_cast<std::size_t>(refine_half));
      std::size_t best = a;
      for (std::size_t j = a + 1; j <= b; ++j)
        if (bp[j] > bp[best]) best = j;
      if (out.indices.empty() ||
          best >= out.indices.back() + refractory)
        out.indices.push_back(best);
    } else {
      npk = 0.125 * integ[i] + 0.875 * npk;
    }
  }
  return out;
}

// --- complexity ------------------------------------------------------------------

namespace {
double population_std(const std::vector<double>& x) {
  double mean = std::accumulate(x.begin(), x.end(), 0.0) /
                static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(x.size()));
}
}  // namespace

std::optional<double> sample_entropy(const std::vector<double>& series,
                                     std::size_t m, double r) {
  if (m < 1) fail(ErrorKind::invalid_argument, "sample_entropy: m >= 1 required");
  if (r <= 0.0) fail(ErrorKind::invalid_argument, "sample_entropy: r must be positive");
  if (series.size() < m + 2)
    fail(ErrorKind::invalid_argument, "sample_entropy: series shorter than m + 2");

  double tol = r * population_std(series);
  std::size_t n_templates = series.size() - m;  // every m-template extends by one
  std::size_t a = 0, b = 0;
  for (std::size_t i = 0; i + 1 < n_templates; ++i) {
    for (std::size_t j = i + 1; j < n_templates; ++j) {
      double dist = 0.0;
      for (std::size_t k = 0; k < m; ++k)
        dist = std::max(dist, std::abs(series[i + k] - series[j + k]));
      if (dist <= tol) {
        ++b;
        if (std::max(dist, std::abs(series[i + m] - series[j + m])) <= tol) ++a;
      }
    }
  }
  if (a == 0 || b == 0) return std::nullopt;
  return -std::log(static_cast<double>(a) / static_cast<double>(b));
}

std::vector<std::optional<double>> multiscale_entropy(
    const std::vector<double>& series, const std::vector<std::size_t>& scales,
    std::size_t m, double r) {
  if (scales.empty()) fail(ErrorKind::invalid_argument, "multiscale_entropy: no scales");
  for (auto tau : scales) {
    if (tau < 1) fail(ErrorKind::invalid_argument, "multiscale_entropy: scale < 1");
    if (tau * (m + 2) > series.size())
      fail(ErrorKind::invalid_argument,
           "multiscale_entropy: series too short for scale " + std::to_string(tau));
  }
  std::vector<std::optional<double>> out;
  out.reserve(scales.size());
  for (auto tau : scales) {
    std::vector<double> coarse(series.size() / tau);
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < tau; ++k) acc += series[i * tau + k];
      coarse[i] = acc / static_cast<double>(tau);
    }
    out.push_back(sample_entropy(coarse, m, r));
  }
  return out;
}

std::optional<double> higuchi_fd(const std::vector<double>& series,
                                 std::size_t k_max) {
  if (k_max < 2) fail(ErrorKind::invalid_argument, "higuchi_fd: k_max >= 2 required");
  if (series.size() < 2 * k_max)
    fail(ErrorKind::invalid_argument, "higuchi_fd: series shorter than 2*k_max");

  auto n = series.size();
  std::vector<double> log_inv_k, log_len;
  for (std::size_t k = 1; k <= k_max; ++k) {
    double mean_len = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      auto steps = (n - 1 - m) / k;
      if (steps == 0) continue;
      double len = 0.0;
      for (std::size_t i = 1; i <= steps; ++i)
        len += std::abs(series[m + i * k] - series[m + (i - 1) * k]);
      len *= static_cast<double>(n - 1) /
             (static_cast<double>(steps) * static_cast<double>(k) *
              static_cast<double>(k));
      mean_len += len;
    }
    mean_len /= static_cast<double>(k);
    if (mean_len > 0.0) {
      log_inv_k.push_back(std::log(1.0 / static_cast<double>(k)));
      log_len.push_back(std::log(mean_len));
    }
  }
  if (log_len.size() < 2) return std::nullopt;  // constant (or nearly empty) curve

  auto pts = static_cast<double>(log_len.size());
  double sx = std::accumulate(log_inv_k.begin(), log_inv_k.end(), 0.0);
  double sy = std::accumulate(log_len.begin(), log_len.end(), 0.0);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < log_len.size(); ++i) {
    sxx += log_inv_k[i] * log_inv_k[i];
    sxy += log_inv_k[i] * log_len[i];
  }
  return (pts * sxy - sx * sy) / (pts * sxx - sx * sx);
}

CorrelationResult correlation_matrix(
    const std::vector<std::vector<double>>& windows) {
  if (windows.empty())
    fail(ErrorKind::invalid_argument, "correlation_matrix: no windows");
  auto len = windows.front().size();
  if (len < 2)
    fail(ErrorKind::invalid_argument, "correlation_matrix: windows too short");
  for (const auto& w : windows)
    if (w.size() != len)
      fail(ErrorKind::invalid_argument, "correlation_matrix: ragged windows");

  CorrelationResult res;
  std::vector<double> mean(windows.size()), sd(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    mean[i] = std::accumulate(windows[i].begin(), windows[i].end(), 0.0) /
              static_cast<double>(len);
    double acc = 0.0;
    for (double v : windows[i]) acc += (v - mean[i]) * (v - mean[i]);
    sd[i] = std::sqrt(acc);
    (sd[i] > 0.0 ? res.kept_rows : res.dropped_rows).push_back(i);
  }
  if (res.kept_rows.size() < 2)
    fail(ErrorKind::numeric,
         "correlation_matrix: fewer than two windows with variance");

  auto k = res.kept_rows.size();
  res.matrix.assign(k, std::vector<double>(k, 1.0));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      auto i = res.kept_rows[a], j = res.kept_rows[b];
      double acc = 0.0;
      for (std::size_t t = 0; t < len; ++t)
        acc += (windows[i][t] - mean[i]) * (windows[j][t] - mean[j]);
      double r = std::clamp(acc / (sd[i] * sd[j]), -1.0, 1.0);
      res.matrix[a][b] = res.matrix[b][a] = r;
    }
  }
  return res;
}

}  // namespace hsicnet::dsp
