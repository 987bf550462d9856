#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hsicnet/events.hpp"
#include "hsicnet/signal.hpp"

namespace hsicnet::feat {

// Hand-engineered features for one record and one feature family.
struct FeatureVector {
  std::vector<double> values;      // finite, zeros when imputed
  std::vector<std::string> names;  // parallel to values
  std::string set_id;              // "rr", "pwave", "eeg_freq", joined by '+'
  bool imputed = false;            // true when the sentinel zero vector is used
};

// --- ECG rhythm features (dim 8) --------------------------------------------
// [rr_median, rr_std, rr_rms, rr_mse_mean, rr_min, rr_max, pnn20, pnn50]
// computed from successive R-peak intervals in seconds. Fewer than three
// detected peaks yields the zero sentinel with imputed=true. The multiscale
// entropy summary averages scales {1,2,3} (m=2, r=0.2), skipping undefined
// scales; all-undefined collapses to 0.
FeatureVector rr_features(const sig::SignalRecord& record);
FeatureVector rr_features_from_intervals(const std::vector<double>& rr_seconds);

// --- ECG P-wave shape features (dim 7) ---------------------------------------
// Windows of length round(0.15*fs) starting 250 ms before each R-peak (the
// 250..100 ms pre-R region). Features: max amplitude, amplitude std, mean
// energy, correlation-matrix median and std (strict upper triangle), median
// Higuchi FD across windows, mean time-of-max from window start (seconds).
// Fewer than two windows fully inside the record yields the zero sentinel.
FeatureVector pwave_features(const sig::SignalRecord& record);
FeatureVector pwave_features_from_windows(
    const std::vector<std::vector<double>>& windows, double fs);

// --- EEG frequency features (dim 4) -------------------------------------------
// Relative Delta/Theta/Alpha/Beta bandpower from a Welch PSD with library
// defaults. Zero total band power yields the zero sentinel.
FeatureVector eeg_frequency_features(const sig::SignalRecord& record);

// --- event detectors -----------------------------------------------------------

// Slow waves: 0.5-2 Hz band-pass, negative half-waves lasting 0.25-1.5 s whose
// trough drops below -1.5 * std of the filtered epoch. Event index = trough.
EventList detect_slow_waves(const std::vector<double>& samples, double fs);

// Rapid eye movements on an EOG channel: |first difference| above 4 * MAD
// sustained for at least 50 ms, 300 ms refractory. Event index = onset.
EventList detect_rapid_eye_movements(const std::vector<double>& eog, double fs);

// --- combination and scaling ----------------------------------------------------

// Concatenates values and names; clashing names get the right operand's
// set_id suffixed. set_id becomes "a+b".
FeatureVector concat_features(const FeatureVector& a, const FeatureVector& b);

// Feature families by id for one record: any of "rr", "pwave", "eeg_freq",
// concatenated in the order given. Unknown ids are a config error.
FeatureVector extract_feature_sets(const sig::SignalRecord& record,
                                   const std::vector<std::string>& set_ids);

// Z-scoring with training-split statistics. Zero-variance columns keep their
// mean subtracted but are not scaled (std treated as 1).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const std::vector<std::vector<double>>& rows);
  std::vector<double> transform(const std::vector<double>& row) const;
};

// --- feature table (CSV interface) ----------------------------------------------

// One row per record: id, <feature columns>, label, split.
struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::string> names;            // feature column names
  std::vector<std::vector<double>> values;   // rows parallel to ids
  std::vector<int> labels;
  std::vector<sig::Split> splits;
  std::vector<bool> imputed;                 // bookkeeping, not serialized

  std::size_t dim() const { return names.size(); }
  std::size_t size() const { return ids.size(); }
};

void write_features_csv(const FeatureTable& table, const std::string& path);
FeatureTable read_features_csv(const std::string& path);

}  // namespace hsicnet::feat
