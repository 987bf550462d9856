#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hsicnet/cam.hpp"
#include "hsicnet/eval.hpp"
#include "hsicnet/model.hpp"
#include "hsicnet/synth.hpp"

namespace hsicnet::cli {

// Parsed experiment configuration. The JSON schema mirrors this struct
// section by section; unknown keys anywhere are a config error.
struct DatasetConfig {
  std::string manifest;      // dataset manifest path (consumers)
  std::string events;        // ground-truth events sidecar (cam/noise)
  std::string features_csv;  // extracted features table (train/eval)
  sig::SplitRatios split;
  bool stratify = true;
  bool upsample = true;
  double upsample_ratio = 1.0;
  double resample_hz = 0.0;  // 0 = keep native rate

  // generator settings for the synth stage
  std::string synth_kind;  // "ecg" | "eeg" | "" (no synth section)
  std::size_t synth_n = 0;
  synth::EcgSynthParams ecg;
  synth::EegSynthParams eeg;
};

struct CamConfig {
  EventKind landmark = EventKind::r_peak;
  bool use_truth_events = false;
  cam::WindowMs window_ms{-400.0, 200.0};
  cam::WindowMs sub_window_ms{-50.0, 25.0};
  std::vector<double> intensities_ms = {0, 50, 100, 200};
  std::size_t target_class = 1;
  std::string baseline_checkpoint;  // optional second model for the t-test
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  std::vector<std::string> features;  // feature-set ids, order = concat order
  model::ModelConfig model;
  std::string checkpoint;             // model under inspection (eval/cam/noise)
  model::LambdaConfig lambda;
  std::vector<double> lambda_sweep;
  CamConfig cam;
  eval::AuxNetConfig aux;
  std::vector<std::string> report_runs;  // run dirs merged by `report`

  bool input_len_given = false;  // false -> pad to the longest record

  // Post-override document with sorted keys; hashed into run manifests so a
  // run can be traced back to the exact configuration that produced it.
  std::string canonical_json;
};

// Load + validate a config file, then apply dotted-path overrides of the form
// "section.key=value" (values parsed as JSON when possible). Throws config
// errors with the offending path in the message.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides);
ExperimentConfig parse_config_json(const std::string& json_text,
                                   const std::vector<std::string>& overrides);

extern const char* const kSubcommands[8];  // synth features train sweep eval cam noise report

// Runs one pipeline stage, writing its artifacts plus run_manifest.json under
// out_dir. All artifacts are deterministic for a fixed config + seed.
void run_subcommand(const ExperimentConfig& cfg, const std::string& subcommand,
                    const std::string& out_dir);

std::string library_version();

}  // namespace hsicnet::cli
