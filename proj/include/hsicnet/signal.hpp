#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hsicnet::sig {

// One physiological record: a primary channel plus optional auxiliary
// channels sampled at the same rate (e.g. an EOG trace next to an EEG one).
struct SignalRecord {
  std::string id;
  std::vector<double> samples;
  double fs = 0.0;  // Hz
  int label = -1;   // class index, -1 = unlabeled
  std::map<std::string, std::vector<double>> aux;   // name -> channel
  std::map<std::string, std::string> meta;          // free-form string pairs

  // Length before zero padding (meta "orig_len"), or the current length.
  std::size_t original_length() const;
};

enum class Split { train, val, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct Dataset {
  std::vector<SignalRecord> records;
  int num_classes = 0;
  // Parallel to `records`; empty until assign_splits() ran.
  std::vector<Split> splits;
};

// --- sampling-rate handling -------------------------------------------------

// Rate conversion with an anti-aliasing low-pass (61-tap windowed sinc,
// cutoff 0.45*fs_out, zero phase) applied before resampling to the new grid.
// Output length = floor(len * fs_out / fs_in). Equal rates pass through
// untouched. Rates must be positive and fs_out <= fs_in.
std::vector<double> resample(const std::vector<double>& samples, double fs_in,
                             double fs_out);

// Appends zeros up to target_len. Shrinking is refused.
std::vector<double> zero_pad(const std::vector<double>& samples,
                             std::size_t target_len);

// zero_pad applied to a record in place; remembers the pre-padding length in
// meta["orig_len"] so downstream windows can stay inside real data.
void pad_record(SignalRecord& record, std::size_t target_len);

// --- splits and class balance ----------------------------------------------

struct SplitRatios {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

// Deterministic stratified assignment: per class, a seeded shuffle followed by
// largest-remainder rounding, so each split count is within one record of the
// exact ratio. Classes with fewer than three records raise a data error that
// names the class. Ratios must sum to 1 (1e-9 slack).
std::vector<Split> split_dataset(const std::vector<SignalRecord>& records,
                                 const SplitRatios& ratios, bool stratify,
                                 std::uint64_t seed);

// Duplicates minority-class training records (sampling with replacement)
// until minority/majority reaches target_ratio within one record. Only ever
// applied to the training split; returns the index multiset into `records`
// (original order first, duplicates appended).
std::vector<std::size_t> upsample_minority(
    const std::vector<SignalRecord>& records,
    const std::vector<std::size_t>& train_indices, double target_ratio,
    std::uint64_t seed);

// Same policy keyed by bare labels, for callers that never materialize
// records (auxiliary probes working on latent/feature matrices).
std::vector<std::size_t> upsample_minority(
    const std::vector<int>& labels,
    const std::vector<std::size_t>& train_indices, double target_ratio,
    std::uint64_t seed);

// --- manifest I/O ------------------------------------------------------------

// Reads a dataset manifest (JSON): {"classes": k, "records": [{"id", "path",
// "fs", "label", "aux": {name: path}, "meta": {...}}]}. Payload files are
// either .csv (one value per line) or .f32 (little-endian float32). Records
// whose meta has exclude=true are dropped. Paths are resolved relative to the
// manifest's directory.
Dataset load_manifest(const std::string& manifest_path);

// Writes manifest + payload files under dir (signals/<id>.f32, aux channels
// as signals/<id>.<aux>.f32). Returns the manifest path.
std::string save_manifest(const Dataset& dataset, const std::string& dir);

// Payload helpers shared by the manifest reader/writer.
std::vector<double> read_payload(const std::string& path);
void write_payload_f32(const std::string& path,
                       const std::vector<double>& samples);

}  // namespace hsicnet::sig
