#include "hsicnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hsicnet/dsp.hpp"
#include "hsicnet/error.hpp"
#include "hsicnet/rng.hpp"

namespace hsicnet::synth {

using json = nlohmann::json;

namespace {

std::string padded_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%05zu", prefix, i);
  return buf;
}

// Poisson draw by Knuth's product-of-uniforms; fine for the small rates used
// here.
std::size_t poisson(Rng& rng, double rate) {
  if (rate <= 0.0) return 0;
  double limit = std::exp(-rate), p = 1.0;
  std::size_t k = 0;
  while (true) {
    p *= rng.uniform();
    if (p <= limit) return k;
    ++k;
  }
}

// Uniform positions in [lo, hi] at least min_sep apart (rejection sampling;
// candidates that cannot be placed are dropped).
std::vector<double> scatter(Rng& rng, std::size_t count, double lo, double hi,
                            double min_sep) {
  std::vector<double> out;
  if (hi <= lo) return out;
  for (std::size_t i = 0; i < count; ++i) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      double t = lo + rng.uniform() * (hi - lo);
      bool ok = true;
      for (double u : out)
        if (std::abs(u - t) < min_sep) { ok = false; break; }
      if (ok) {
        out.push_back(t);
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void add_gaussian_bump(std::vector<double>& x, double fs, double centre_s,
                       double amp, double sigma_s) {
  double span = 5.0 * sigma_s;
  long lo = std::lround((centre_s - span) * fs);
  long hi = std::lround((centre_s + span) * fs);
  for (long j = std::max(lo, 0L);
       j <= std::min(hi, static_cast<long>(x.size()) - 1); ++j) {
    double t = static_cast<double>(j) / fs - centre_s;
    x[static_cast<std::size_t>(j)] +=
        amp * std::exp(-0.5 * t * t / (sigma_s * sigma_s));
  }
}

EventList make_events(EventKind kind, double fs,
                      const std::vector<double>& times_s, std::size_t len) {
  EventList e;
  e.kind = kind;
  e.fs = fs;
  for (double t : times_s) {
    long idx = std::lround(t * fs);
    if (idx < 0 || idx >= static_cast<long>(len)) continue;
    e.indices.push_back(static_cast<std::size_t>(idx));
  }
  std::sort(e.indices.begin(), e.indices.end());
  e.indices.erase(std::unique(e.indices.begin(), e.indices.end()),
                  e.indices.end());
  return e;
}

}  // namespace

void EcgSynthParams::validate() const {
  if (!(fs >= 40.0))
    fail(ErrorKind::config, "ecg synth: fs must be at least 40 Hz");
  if (!(duration_s >= 1.0))
    fail(ErrorKind::config, "ecg synth: duration must be at least 1 s");
  if (!(qrs_sigma_s > 0.0) || !(pwave_sigma_s > 0.0))
    fail(ErrorKind::config, "ecg synth: waveform widths must be positive");
  if (!(rr_mean_s >= 18.0 * qrs_sigma_s))
    fail(ErrorKind::config,
         "ecg synth: rr_mean must clear three QRS widths (18 sigma)");
  if (rr_jitter_class0_s < 0.0 || rr_jitter_class1_s < 0.0)
    fail(ErrorKind::config, "ecg synth: jitter must be non-negative");
  for (double p : {pwave_present_class0, pwave_present_class1})
    if (p < 0.0 || p > 1.0)
      fail(ErrorKind::config, "ecg synth: P probabilities must be in [0, 1]");
  if (!(qrs_amp > 0.0) || !(pwave_amp > 0.0))
    fail(ErrorKind::config, "ecg synth: amplitudes must be positive");
  if (noise_std < 0.0)
    fail(ErrorKind::config, "ecg synth: noise_std must be non-negative");
  if (!(pwave_offset_s > 0.0) ||
      !(pwave_offset_s + 2.0 * pwave_sigma_s < rr_mean_s))
    fail(ErrorKind::config,
         "ecg synth: P bump must sit strictly between consecutive beats");
}

SynthOutput gen_ecg_like(std::size_t n, const EcgSynthParams& params,
                         std::uint64_t seed) {
  params.validate();
  if (n == 0) fail(ErrorKind::invalid_argument, "gen_ecg_like: n must be >= 1");

  SynthOutput out;
  out.dataset.num_classes = 2;
  out.events[EventKind::r_peak] = {};
  out.events[EventKind::synthetic] = {};

  const auto len = static_cast<std::size_t>(std::lround(params.duration_s * params.fs));
  // First beat leaves room for its P bump; the last leaves room for the QRS
  // tail.
  const double start_margin =
      std::max(0.30, params.pwave_offset_s + 3.0 * params.pwave_sigma_s);
  const double end_margin = 5.0 * params.qrs_sigma_s;
  const double min_rr = 18.0 * params.qrs_sigma_s;

  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(Rng::mix(seed, i));
    const int label = static_cast<int>(i % 2);
    const double jitter =
        label == 0 ? params.rr_jitter_class0_s : params.rr_jitter_class1_s;
    const double p_pwave =
        label == 0 ? params.pwave_present_class0 : params.pwave_present_class1;

    // Beat grid: jittered intervals around rr_mean, floored so beats never
    // collapse onto each other.
    std::vector<double> beats;
    double t = start_margin + std::abs(rng.normal()) * jitter;
    while (t < params.duration_s - end_margin) {
      beats.push_back(t);
      t += std::max(params.rr_mean_s + rng.normal() * jitter, min_rr);
    }

    std::vector<double> x(len, 0.0);
    std::vector<double> p_onsets;
    for (double tr : beats) {
      add_gaussian_bump(x, params.fs, tr, params.qrs_amp, params.qrs_sigma_s);
      if (rng.uniform() < p_pwave) {
        double tp = tr - params.pwave_offset_s;
        add_gaussian_bump(x, params.fs, tp, params.pwave_amp,
                          params.pwave_sigma_s);
        p_onsets.push_back(tp - 2.0 * params.pwave_sigma_s);
      }
    }
    if (params.noise_std > 0.0)
      for (auto& v : x) v += params.noise_std * rng.normal();

    sig::SignalRecord rec;
    rec.id = padded_id("ecg", i);
    rec.fs = params.fs;
    rec.label = label;
    rec.samples = std::move(x);
    out.dataset.records.push_back(std::move(rec));
    out.events[EventKind::r_peak].push_back(
        make_events(EventKind::r_peak, params.fs, beats, len));
    out.events[EventKind::synthetic].push_back(
        make_events(EventKind::synthetic, params.fs, p_onsets, len));
  }
  return out;
}

void EegSynthParams::validate() const {
  if (!(fs >= 50.0))
    fail(ErrorKind::config, "eeg synth: fs must be at least 50 Hz");
  if (!(duration_s >= 8.0))
    fail(ErrorKind::config, "eeg synth: duration must be at least 8 s");
  for (const auto* mix : {&mix_class0, &mix_class1}) {
    if (mix->size() != 4)
      fail(ErrorKind::config,
           "eeg synth: band mixtures need exactly 4 weights");
    double sum = 0.0;
    for (double w : *mix) {
      if (w < 0.0)
        fail(ErrorKind::config, "eeg synth: mixture weights must be >= 0");
      sum += w;
    }
    if (!(sum > 0.0))
      fail(ErrorKind::config, "eeg synth: mixture must have some power");
  }
  for (double r : {slow_wave_rate, spindle_rate, rem_rate})
    if (r < 0.0) fail(ErrorKind::config, "eeg synth: rates must be >= 0");
  for (double a : {slow_wave_amp, spindle_amp, rem_amp_eog})
    if (!(a > 0.0))
      fail(ErrorKind::config, "eeg synth: event amplitudes must be positive");
  if (!(spindle_freq_hz > 0.0) || !(spindle_freq_hz < fs / 2.0))
    fail(ErrorKind::config, "eeg synth: spindle frequency must be below Nyquist");
  if (rem_leak_eeg < 0.0 || rem_leak_eeg > 1.0)
    fail(ErrorKind::config, "eeg synth: rem_leak_eeg must be in [0, 1]");
  if (!(noise_std > 0.0))
    fail(ErrorKind::config, "eeg synth: noise_std must be positive");
}

SynthOutput gen_eeg_like(std::size_t n, const EegSynthParams& params,
                         std::uint64_t seed) {
  params.validate();
  if (n == 0) fail(ErrorKind::invalid_argument, "gen_eeg_like: n must be >= 1");

  SynthOutput out;
  out.dataset.num_classes = 2;
  out.events[EventKind::slow_wave] = {};
  out.events[EventKind::spindle] = {};
  out.events[EventKind::rem] = {};

  const auto len = static_cast<std::size_t>(std::lround(params.duration_s * params.fs));
  // Detectors band-pass with a 4 s kernel whose edge transients are ignored;
  // keep injected events clear of that zone.
  const double margin = 2.0;
  const auto& bands = dsp::eeg_bands();
  const std::size_t band_taps = static_cast<std::size_t>(2.0 * params.fs) | 1;
  std::vector<std::vector<double>> kernels;
  for (const auto& b : bands)
    kernels.push_back(
        dsp::design_bandpass_fir(b.lo_hz, b.hi_hz, params.fs, band_taps));

  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(Rng::mix(seed, i));
    const int label = static_cast<int>(i % 2);
    const auto& mix = label == 0 ? params.mix_class0 : params.mix_class1;

    // Colored background: per band, filtered white noise rescaled so its
    // standard deviation equals weight * noise_std.
    std::vector<double> eeg(len, 0.0);
    double nominal_var = 0.0;
    for (std::size_t b = 0; b < bands.size(); ++b) {
      std::vector<double> white(len);
      for (auto& v : white) v = rng.normal();
      if (mix[b] == 0.0) continue;  // draw order stays fixed regardless
      auto colored = dsp::filter_same(white, kernels[b]);
      double m = std::accumulate(colored.begin(), colored.end(), 0.0) /
                 static_cast<double>(len);
      double var = 0.0;
      for (double v : colored) var += (v - m) * (v - m);
      var /= static_cast<double>(len);
      if (var <= 0.0) continue;
      double target = mix[b] * params.noise_std;
      double scale = target / std::sqrt(var);
      for (std::size_t j = 0; j < len; ++j) eeg[j] += scale * (colored[j] - m);
      nominal_var += target * target;
    }
    const double bg_std = std::sqrt(nominal_var);

    // EOG background: a slow sinusoidal drift plus faint sensor noise. Both
    // have strictly bounded first differences, so sustained above-threshold
    // slopes can only come from injected deflections, never from background.
    std::vector<double> eog(len);
    {
      const double drift_hz = 0.2 + 0.15 * rng.uniform();
      const double phase = 2.0 * M_PI * rng.uniform();
      const double drift_amp = std::sqrt(2.0) * params.noise_std;
      for (std::size_t j = 0; j < len; ++j) {
        double ts = static_cast<double>(j) / params.fs;
        eog[j] = drift_amp * std::sin(2.0 * M_PI * drift_hz * ts + phase) +
                 0.03 * params.noise_std * rng.normal();
      }
    }

    std::vector<double> sw_troughs, spindle_centres, rem_onsets;
    if (label == 0) {
      // Slow waves: one full sine cycle, negative lobe first, period
      // 0.8-1.2 s. A zero-mean cycle at 0.83-1.25 Hz passes a 0.5-2 Hz
      // band-pass nearly unattenuated (a unipolar pulse would lose most of
      // its depth to the filter's high-pass edge). Trough ground truth sits
      // at the centre of the negative lobe, a quarter period in.
      auto centres = scatter(rng, poisson(rng, params.slow_wave_rate), margin,
                             params.duration_s - margin, 2.0);
      for (double c : centres) {
        double period = 0.8 + 0.4 * rng.uniform();
        double depth = params.slow_wave_amp * bg_std;
        double start = c - period / 4.0;
        long lo = std::lround(start * params.fs);
        long hi = std::lround((start + period) * params.fs);
        for (long j = std::max(lo, 0L);
             j <= std::min(hi, static_cast<long>(len) - 1); ++j) {
          double u = (static_cast<double>(j) / params.fs - start) / period;
          if (u >= 0.0 && u <= 1.0)
            eeg[static_cast<std::size_t>(j)] -= depth * std::sin(2.0 * M_PI * u);
        }
        sw_troughs.push_back(c);
      }

      // Spindles: Hann-windowed tone bursts around spindle_freq_hz.
      auto s_centres = scatter(rng, poisson(rng, params.spindle_rate), margin,
                               params.duration_s - margin, 1.5);
      for (double c : s_centres) {
        double dur = 1.0;
        double amp = params.spindle_amp * bg_std;
        long lo = std::lround((c - dur / 2.0) * params.fs);
        for (long j = std::max(lo, 0L);
             j <= std::min(std::lround((c + dur / 2.0) * params.fs),
                           static_cast<long>(len) - 1);
             ++j) {
          double ts = static_cast<double>(j) / params.fs;
          double u = (ts - (c - dur / 2.0)) / dur;
          if (u < 0.0 || u > 1.0) continue;
          double hann = 0.5 - 0.5 * std::cos(2.0 * M_PI * u);
          eeg[static_cast<std::size_t>(j)] +=
              amp * hann * std::sin(2.0 * M_PI * params.spindle_freq_hz * ts);
        }
        spindle_centres.push_back(c);
      }
    } else {
      // REM deflections: fast ramp up (0.1 s), hold (0.25 s), slow decay
      // (0.5 s) whose gentle slope stays under the detector threshold.
      auto onsets = scatter(rng, poisson(rng, params.rem_rate), margin,
                            params.duration_s - margin - 0.85, 1.0);
      int sign = 1;
      for (double onset : onsets) {
        double amp = params.rem_amp_eog * params.noise_std * sign;
        sign = -sign;
        auto shape = [&](double ts) {
          double dt = ts - onset;
          if (dt < 0.0) return 0.0;
          if (dt < 0.1) return dt / 0.1;
          if (dt < 0.35) return 1.0;
          if (dt < 0.85) return 1.0 - (dt - 0.35) / 0.5;
          return 0.0;
        };
        long lo = std::lround(onset * params.fs);
        long hi = std::lround((onset + 0.85) * params.fs);
        for (long j = std::max(lo, 0L);
             j <= std::min(hi, static_cast<long>(len) - 1); ++j) {
          double v = amp * shape(static_cast<double>(j) / params.fs);
          eog[static_cast<std::size_t>(j)] += v;
          eeg[static_cast<std::size_t>(j)] += params.rem_leak_eeg * v;
        }
        rem_onsets.push_back(onset);
      }
    }

    sig::SignalRecord rec;
    rec.id = padded_id("eeg", i);
    rec.fs = params.fs;
    rec.label = label;
    rec.samples = std::move(eeg);
    rec.aux["eog"] = std::move(eog);
    out.dataset.records.push_back(std::move(rec));
    out.events[EventKind::slow_wave].push_back(
        make_events(EventKind::slow_wave, params.fs, sw_troughs, len));
    out.events[EventKind::spindle].push_back(
        make_events(EventKind::spindle, params.fs, spindle_centres, len));
    out.events[EventKind::rem].push_back(
        make_events(EventKind::rem, params.fs, rem_onsets, len));
  }
  return out;
}

void write_events_json(const SynthOutput& out, const std::string& path) {
  if (out.dataset.records.empty())
    fail(ErrorKind::invalid_argument, "write_events_json: empty dataset");
  json root;
  root["fs"] = out.dataset.records.front().fs;
  json records = json::object();
  for (std::size_t i = 0; i < out.dataset.records.size(); ++i) {
    json per_kind = json::object();
    for (const auto& [kind, lists] : out.events) {
      if (lists.size() != out.dataset.records.size())
        fail(ErrorKind::invalid_argument,
             "write_events_json: event lists not parallel to records");
      per_kind[to_string(kind)] = lists[i].indices;
    }
    records[out.dataset.records[i].id] = std::move(per_kind);
  }
  root["records"] = std::move(records);
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(ErrorKind::data, "cannot open for writing: " + path);
  f << root.dump(2) << '\n';
  if (!f) fail(ErrorKind::data, "write failed: " + path);
}

std::map<std::string, std::map<EventKind, EventList>> read_events_json(
    const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::data, "cannot open events file: " + path);
  json root;
  try {
    f >> root;
  } catch (const json::exception& e) {
    fail(ErrorKind::data, "bad events json " + path + ": " + e.what());
  }
  std::map<std::string, std::map<EventKind, EventList>> out;
  try {
    double fs = root.at("fs").get<double>();
    for (const auto& [id, per_kind] : root.at("records").items()) {
      for (const auto& [kind_name, indices] : per_kind.items()) {
        EventList e;
        e.kind = event_kind_from_string(kind_name);
        e.fs = fs;
        e.indices = indices.get<std::vector<std::size_t>>();
        for (std::size_t j = 1; j < e.indices.size(); ++j)
          if (e.indices[j] <= e.indices[j - 1])
            fail(ErrorKind::data,
                 "events json: indices must be strictly increasing");
        out[id][e.kind] = std::move(e);
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::data, "bad events json " + path + ": " + e.what());
  }
  return out;
}

}  // namespace hsicnet::synth
