#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hsicnet/events.hpp"
#include "hsicnet/signal.hpp"

namespace hsicnet::synth {

// Two-class ECG-like strips. Class 0: regular rhythm, P bumps usually
// present; class 1: jittered rhythm, P bumps usually absent. Both cues are
// individually predictive, which is the point of the synthetic task.
struct EcgSynthParams {
  double fs = 90.0;
  double duration_s = 3.0;
  double rr_mean_s = 0.5;
  double rr_jitter_class0_s = 0.010;  // std of the per-interval noise
  double rr_jitter_class1_s = 0.120;
  double pwave_present_class0 = 0.95;  // per-beat probability
  double pwave_present_class1 = 0.05;
  double pwave_amp = 0.18;
  double qrs_amp = 1.0;
  double noise_std = 0.05;

  // waveform shape (seconds)
  double qrs_sigma_s = 0.012;
  double pwave_sigma_s = 0.028;
  double pwave_offset_s = 0.175;  // bump centre this far before the R peak

  void validate() const;  // rr_mean must clear 3x the QRS width, rates > 0
};

// Two-class EEG-like epochs with an EOG auxiliary channel. Class 0
// (NREM-like): delta-heavy mixture, slow waves and spindles injected.
// Class 1 (REM-like): mixed theta/beta, step deflections mirrored large into
// the EOG channel and faintly into the EEG channel.
struct EegSynthParams {
  double fs = 80.0;
  double duration_s = 30.0;
  // relative band weights {delta, theta, alpha, beta} per class
  std::vector<double> mix_class0 = {1.0, 0.3, 0.2, 0.1};
  std::vector<double> mix_class1 = {0.25, 0.6, 0.3, 0.5};
  double slow_wave_rate = 4.0;    // expected events per epoch, class 0
  double slow_wave_amp = 4.0;     // multiple of background std
  double spindle_rate = 2.0;      // class 0
  double spindle_amp = 1.5;
  double spindle_freq_hz = 13.0;
  double rem_rate = 6.0;          // class 1
  double rem_amp_eog = 4.0;       // multiple of EOG background std
  double rem_leak_eeg = 0.15;     // fraction of the deflection visible in EEG
  double noise_std = 1.0;

  void validate() const;
};

// Generated records plus exact ground-truth landmark indices, keyed by kind
// and parallel to dataset.records. Record i draws its own sub-seed from
// (seed, i), so any prefix of the dataset is reproducible independent of n.
struct SynthOutput {
  sig::Dataset dataset;
  std::map<EventKind, std::vector<EventList>> events;
};

// Labels alternate 0,1,0,1,... so requested balance is exact. ECG ground
// truth: r_peak indices and P-bump onsets (kind synthetic). EEG ground
// truth: slow_wave troughs, spindle centres, rem onsets (EOG timeline).
SynthOutput gen_ecg_like(std::size_t n, const EcgSynthParams& params,
                         std::uint64_t seed);
SynthOutput gen_eeg_like(std::size_t n, const EegSynthParams& params,
                         std::uint64_t seed);

// Ground-truth sidecar: {"fs": .., "records": {id: {kind: [indices]}}}.
void write_events_json(const SynthOutput& out, const std::string& path);
std::map<std::string, std::map<EventKind, EventList>> read_events_json(
    const std::string& path);

}  // namespace hsicnet::synth
