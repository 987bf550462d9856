#include "hsicnet/experiment.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsicnet/checkpoint.hpp"
#include "hsicnet/dsp.hpp"
#include "hsicnet/error.hpp"
#include "hsicnet/features.hpp"
#include "hsicnet/stats.hpp"

namespace hsicnet::cli {
namespace {

using json = nlohmann::json;
namespace fsys = std::filesystem;

// --- small utilities -------------------------------------------------------------

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::data, "cannot write " + path);
  f << content;
  if (!f) fail(ErrorKind::data, "write failed: " + path);
}

std::string path_join(const std::string& dir, const std::string& leaf) {
  return (fsys::path(dir) / leaf).string();
}

// --- schema helpers ---------------------------------------------------------------
// Every section lists its allowed keys; anything else is rejected with the
// full dotted path so the first violation is easy to locate.

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object())
    fail(ErrorKind::config, path + ": expected an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      fail(ErrorKind::config, path + "." + item.key() + ": unknown key");
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double need_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(ErrorKind::config, path + ": expected a number");
  return v.get<double>();
}

bool need_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(ErrorKind::config, path + ": expected a boolean");
  return v.get<bool>();
}

std::string need_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(ErrorKind::config, path + ": expected a string");
  return v.get<std::string>();
}

std::size_t need_size(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.is_number_float() || v.get<double>() < 0)
    fail(ErrorKind::config, path + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

std::uint64_t need_uint(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<double>() < 0)
    fail(ErrorKind::config, path + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::vector<double> need_number_array(const json& v, const std::string& path) {
  if (!v.is_array()) fail(ErrorKind::config, path + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(need_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::size_t> need_size_array(const json& v,
                                         const std::string& path) {
  if (!v.is_array()) fail(ErrorKind::config, path + ": expected an array");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(need_size(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::string> need_string_array(const json& v,
                                           const std::string& path) {
  if (!v.is_array()) fail(ErrorKind::config, path + ": expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(need_string(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

cam::WindowMs need_window(const json& v, const std::string& path) {
  auto a = need_number_array(v, path);
  if (a.size() != 2)
    fail(ErrorKind::config, path + ": expected [lo_ms, hi_ms]");
  return {a[0], a[1]};
}

// --- section parsers ----------------------------------------------------------------

void parse_ecg(const json& o, const std::string& path,
               synth::EcgSynthParams& p) {
  check_keys(o, path,
             {"fs", "duration_s", "rr_mean_s", "rr_jitter_class0_s",
              "rr_jitter_class1_s", "pwave_present_class0",
              "pwave_present_class1", "pwave_amp", "qrs_amp", "noise_std",
              "qrs_sigma_s", "pwave_sigma_s", "pwave_offset_s"});
  if (auto* v = find(o, "fs")) p.fs = need_number(*v, path + ".fs");
  if (auto* v = find(o, "duration_s"))
    p.duration_s = need_number(*v, path + ".duration_s");
  if (auto* v = find(o, "rr_mean_s"))
    p.rr_mean_s = need_number(*v, path + ".rr_mean_s");
  if (auto* v = find(o, "rr_jitter_class0_s"))
    p.rr_jitter_class0_s = need_number(*v, path + ".rr_jitter_class0_s");
  if (auto* v = find(o, "rr_jitter_class1_s"))
    p.rr_jitter_class1_s = need_number(*v, path + ".rr_jitter_class1_s");
  if (auto* v = find(o, "pwave_present_class0"))
    p.pwave_present_class0 = need_number(*v, path + ".pwave_present_class0");
  if (auto* v = find(o, "pwave_present_class1"))
    p.pwave_present_class1 = need_number(*v, path + ".pwave_present_class1");
  if (auto* v = find(o, "pwave_amp"))
    p.pwave_amp = need_number(*v, path + ".pwave_amp");
  if (auto* v = find(o, "qrs_amp"))
    p.qrs_amp = need_number(*v, path + ".qrs_amp");
  if (auto* v = find(o, "noise_std"))
    p.noise_std = need_number(*v, path + ".noise_std");
  if (auto* v = find(o, "qrs_sigma_s"))
    p.qrs_sigma_s = need_number(*v, path + ".qrs_sigma_s");
  if (auto* v = find(o, "pwave_sigma_s"))
    p.pwave_sigma_s = need_number(*v, path + ".pwave_sigma_s");
  if (auto* v = find(o, "pwave_offset_s"))
    p.pwave_offset_s = need_number(*v, path + ".pwave_offset_s");
}

void parse_eeg(const json& o, const std::string& path,
               synth::EegSynthParams& p) {
  check_keys(o, path,
             {"fs", "duration_s", "mix_class0", "mix_class1", "slow_wave_rate",
              "slow_wave_amp", "spindle_rate", "spindle_amp", "spindle_freq_hz",
              "rem_rate", "rem_amp_eog", "rem_leak_eeg", "noise_std"});
  if (auto* v = find(o, "fs")) p.fs = need_number(*v, path + ".fs");
  if (auto* v = find(o, "duration_s"))
    p.duration_s = need_number(*v, path + ".duration_s");
  if (auto* v = find(o, "mix_class0"))
    p.mix_class0 = need_number_array(*v, path + ".mix_class0");
  if (auto* v = find(o, "mix_class1"))
    p.mix_class1 = need_number_array(*v, path + ".mix_class1");
  if (auto* v = find(o, "slow_wave_rate"))
    p.slow_wave_rate = need_number(*v, path + ".slow_wave_rate");
  if (auto* v = find(o, "slow_wave_amp"))
    p.slow_wave_amp = need_number(*v, path + ".slow_wave_amp");
  if (auto* v = find(o, "spindle_rate"))
    p.spindle_rate = need_number(*v, path + ".spindle_rate");
  if (auto* v = find(o, "spindle_amp"))
    p.spindle_amp = need_number(*v, path + ".spindle_amp");
  if (auto* v = find(o, "spindle_freq_hz"))
    p.spindle_freq_hz = need_number(*v, path + ".spindle_freq_hz");
  if (auto* v = find(o, "rem_rate"))
    p.rem_rate = need_number(*v, path + ".rem_rate");
  if (auto* v = find(o, "rem_amp_eog"))
    p.rem_amp_eog = need_number(*v, path + ".rem_amp_eog");
  if (auto* v = find(o, "rem_leak_eeg"))
    p.rem_leak_eeg = need_number(*v, path + ".rem_leak_eeg");
  if (auto* v = find(o, "noise_std"))
    p.noise_std = need_number(*v, path + ".noise_std");
}

void parse_dataset(const json& o, const std::string& path, DatasetConfig& d) {
  check_keys(o, path,
             {"manifest", "events", "features_csv", "split", "stratify",
              "upsample", "upsample_ratio", "resample_hz", "synth"});
  if (auto* v = find(o, "manifest"))
    d.manifest = need_string(*v, path + ".manifest");
  if (auto* v = find(o, "events")) d.events = need_string(*v, path + ".events");
  if (auto* v = find(o, "features_csv"))
    d.features_csv = need_string(*v, path + ".features_csv");
  if (auto* v = find(o, "split")) {
    check_keys(*v, path + ".split", {"train", "val", "test"});
    if (auto* t = find(*v, "train"))
      d.split.train = need_number(*t, path + ".split.train");
    if (auto* t = find(*v, "val"))
      d.split.val = need_number(*t, path + ".split.val");
    if (auto* t = find(*v, "test"))
      d.split.test = need_number(*t, path + ".split.test");
  }
  if (auto* v = find(o, "stratify"))
    d.stratify = need_bool(*v, path + ".stratify");
  if (auto* v = find(o, "upsample"))
    d.upsample = need_bool(*v, path + ".upsample");
  if (auto* v = find(o, "upsample_ratio"))
    d.upsample_ratio = need_number(*v, path + ".upsample_ratio");
  if (auto* v = find(o, "resample_hz"))
    d.resample_hz = need_number(*v, path + ".resample_hz");
  if (auto* v = find(o, "synth")) {
    check_keys(*v, path + ".synth", {"kind", "n", "ecg", "eeg"});
    if (auto* k = find(*v, "kind")) {
      d.synth_kind = need_string(*k, path + ".synth.kind");
      if (d.synth_kind != "ecg" && d.synth_kind != "eeg")
        fail(ErrorKind::config,
             path + ".synth.kind: expected \"ecg\" or \"eeg\"");
    }
    if (auto* k = find(*v, "n")) d.synth_n = need_size(*k, path + ".synth.n");
    if (auto* k = find(*v, "ecg")) parse_ecg(*k, path + ".synth.ecg", d.ecg);
    if (auto* k = find(*v, "eeg")) parse_eeg(*k, path + ".synth.eeg", d.eeg);
  }
}

void parse_model(const json& o, const std::string& path, ExperimentConfig& c) {
  check_keys(o, path,
             {"input_len", "channels", "residual_blocks", "head_channels",
              "dropout", "num_classes", "epochs", "batch_size", "lr_max",
              "lr_min"});
  auto& m = c.model;
  if (auto* v = find(o, "input_len")) {
    m.input_len = need_size(*v, path + ".input_len");
    c.input_len_given = true;
  }
  if (auto* v = find(o, "channels"))
    m.channels = need_size(*v, path + ".channels");
  if (auto* v = find(o, "residual_blocks"))
    m.residual_blocks = need_size(*v, path + ".residual_blocks");
  if (auto* v = find(o, "head_channels"))
    m.head_channels = need_size_array(*v, path + ".head_channels");
  if (auto* v = find(o, "dropout"))
    m.dropout = need_number(*v, path + ".dropout");
  if (auto* v = find(o, "num_classes"))
    m.num_classes = need_size(*v, path + ".num_classes");
  if (auto* v = find(o, "epochs")) m.epochs = need_size(*v, path + ".epochs");
  if (auto* v = find(o, "batch_size"))
    m.batch_size = need_size(*v, path + ".batch_size");
  if (auto* v = find(o, "lr_max")) m.lr_max = need_number(*v, path + ".lr_max");
  if (auto* v = find(o, "lr_min")) m.lr_min = need_number(*v, path + ".lr_min");
}

void parse_lambda(const json& o, const std::string& path,
                  model::LambdaConfig& l) {
  check_keys(o, path, {"strategy", "value", "rho", "warm_epochs"});
  if (auto* v = find(o, "strategy")) {
    std::string s = need_string(*v, path + ".strategy");
    if (s == "fixed")
      l.strategy = model::LambdaConfig::Strategy::fixed;
    else if (s == "ratio")
      l.strategy = model::LambdaConfig::Strategy::ratio;
    else
      fail(ErrorKind::config,
           path + ".strategy: expected \"fixed\" or \"ratio\"");
  }
  if (auto* v = find(o, "value")) l.value = need_number(*v, path + ".value");
  if (auto* v = find(o, "rho")) l.rho = need_number(*v, path + ".rho");
  if (auto* v = find(o, "warm_epochs"))
    l.warm_epochs = need_size(*v, path + ".warm_epochs");
}

void parse_cam(const json& o, const std::string& path, CamConfig& c) {
  check_keys(o, path,
             {"landmark", "use_truth_events", "window_ms", "sub_window_ms",
              "intensities_ms", "target_class", "baseline_checkpoint"});
  if (auto* v = find(o, "landmark")) {
    std::string s = need_string(*v, path + ".landmark");
    try {
      c.landmark = event_kind_from_string(s);
    } catch (const Error&) {
      fail(ErrorKind::config, path + ".landmark: unknown event kind " + s);
    }
  }
  if (auto* v = find(o, "use_truth_events"))
    c.use_truth_events = need_bool(*v, path + ".use_truth_events");
  if (auto* v = find(o, "window_ms"))
    c.window_ms = need_window(*v, path + ".window_ms");
  if (auto* v = find(o, "sub_window_ms"))
    c.sub_window_ms = need_window(*v, path + ".sub_window_ms");
  if (auto* v = find(o, "intensities_ms"))
    c.intensities_ms = need_number_array(*v, path + ".intensities_ms");
  if (auto* v = find(o, "target_class"))
    c.target_class = need_size(*v, path + ".target_class");
  if (auto* v = find(o, "baseline_checkpoint"))
    c.baseline_checkpoint = need_string(*v, path + ".baseline_checkpoint");
}

void parse_aux(const json& o, const std::string& path, eval::AuxNetConfig& a) {
  check_keys(o, path,
             {"hidden", "epochs", "batch_size", "lr", "folds", "seed"});
  if (auto* v = find(o, "hidden"))
    a.hidden = need_size_array(*v, path + ".hidden");
  if (auto* v = find(o, "epochs")) a.epochs = need_size(*v, path + ".epochs");
  if (auto* v = find(o, "batch_size"))
    a.batch_size = need_size(*v, path + ".batch_size");
  if (auto* v = find(o, "lr")) a.lr = need_number(*v, path + ".lr");
  if (auto* v = find(o, "folds")) a.folds = need_size(*v, path + ".folds");
  if (auto* v = find(o, "seed")) a.seed = need_uint(*v, path + ".seed");
}

// --- overrides -----------------------------------------------------------------------

void apply_override(json& root, const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    fail(ErrorKind::config, "override '" + spec + "': expected path=value");
  std::string dotted = spec.substr(0, eq);
  std::string value = spec.substr(eq + 1);

  std::vector<std::string> keys;
  std::size_t start = 0;
  while (true) {
    auto dot = dotted.find('.', start);
    std::string part = dotted.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty())
      fail(ErrorKind::config,
           "override '" + spec + "': empty path component");
    keys.push_back(part);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }

  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // bare words are strings
  }

  json* cur = &root;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    json& next = (*cur)[keys[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object())
      fail(ErrorKind::config,
           "override '" + spec + "': " + keys[i] + " is not an object");
    cur = &next;
  }
  (*cur)[keys.back()] = std::move(parsed);
}

// --- shared pipeline helpers ------------------------------------------------------------

void write_run_manifest(const ExperimentConfig& cfg,
                        const std::string& subcommand,
                        const std::string& out_dir) {
  json m;
  m["config_hash"] = hex64(fnv1a64(cfg.canonical_json));
  m["seed"] = cfg.seed;
  m["subcommand"] = subcommand;
  m["version"] = library_version();
  write_text(path_join(out_dir, "run_manifest.json"), m.dump(2) + "\n");
}

// Loads the manifest, applies optional resampling, and attaches splits: the
// per-record "split" meta written by the synth stage when present, otherwise
// a fresh deterministic assignment from the config.
sig::Dataset load_dataset_for(const ExperimentConfig& cfg) {
  if (cfg.dataset.manifest.empty())
    fail(ErrorKind::config, "dataset.manifest: required by this subcommand");
  sig::Dataset ds = sig::load_manifest(cfg.dataset.manifest);
  if (cfg.dataset.resample_hz > 0.0) {
    for (auto& rec : ds.records) {
      rec.samples =
          sig::resample(rec.samples, rec.fs, cfg.dataset.resample_hz);
      for (auto& [name, chan] : rec.aux)
        chan = sig::resample(chan, rec.fs, cfg.dataset.resample_hz);
      rec.fs = cfg.dataset.resample_hz;
    }
  }
  bool have_meta_splits =
      !ds.records.empty() &&
      std::all_of(ds.records.begin(), ds.records.end(),
                  [](const sig::SignalRecord& r) {
                    return r.meta.count("split") > 0;
                  });
  if (have_meta_splits) {
    ds.splits.clear();
    for (const auto& rec : ds.records)
      ds.splits.push_back(sig::split_from_string(rec.meta.at("split")));
  } else {
    ds.splits = sig::split_dataset(ds.records, cfg.dataset.split,
                                   cfg.dataset.stratify, cfg.seed);
  }
  return ds;
}

// Reads the features CSV and reorders its rows to dataset order (keyed by
// record id); stale or mismatched tables are a data error.
feat::FeatureTable load_features_for(const ExperimentConfig& cfg,
                                     const sig::Dataset& ds) {
  if (cfg.dataset.features_csv.empty())
    fail(ErrorKind::config,
         "dataset.features_csv: required by this subcommand");
  feat::FeatureTable raw = feat::read_features_csv(cfg.dataset.features_csv);
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < raw.size(); ++i) by_id[raw.ids[i]] = i;

  feat::FeatureTable out;
  out.names = raw.names;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    auto it = by_id.find(ds.records[i].id);
    if (it == by_id.end())
      fail(ErrorKind::data, "features table misses record " + ds.records[i].id);
    std::size_t r = it->second;
    if (raw.labels[r] != ds.records[i].label)
      fail(ErrorKind::data,
           "features table label differs from manifest for record " +
               ds.records[i].id);
    out.ids.push_back(raw.ids[r]);
    out.values.push_back(raw.values[r]);
    out.labels.push_back(raw.labels[r]);
    out.splits.push_back(ds.splits[i]);
    out.imputed.push_back(false);
  }
  return out;
}

// Zero-pads every record (and remembers pre-pad lengths) to a common model
// input length: the configured one when given, else the longest record.
std::size_t pad_dataset(sig::Dataset& ds, std::size_t configured,
                        bool configured_given) {
  std::size_t longest = 0;
  for (const auto& rec : ds.records)
    longest = std::max(longest, rec.samples.size());
  std::size_t target = configured_given ? configured : longest;
  if (longest > target)
    fail(ErrorKind::data,
         "record longer than model.input_len (" + std::to_string(longest) +
             " > " + std::to_string(target) + ")");
  for (auto& rec : ds.records) sig::pad_record(rec, target);
  return target;
}

Matrix table_matrix(const feat::FeatureTable& t) {
  Matrix m(t.size(), t.dim());
  for (std::size_t i = 0; i < t.size(); ++i)
    std::copy(t.values[i].begin(), t.values[i].end(), m.row(i));
  return m;
}

json metrics_json(const model::Metrics& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["f1_positive"] = m.f1_positive;
  j["f1_per_class"] = m.f1_per_class;
  j["confusion"] = m.confusion;
  j["n"] = m.n;
  return j;
}

// --- model checkpoints -------------------------------------------------------------------

struct LoadedModel {
  std::shared_ptr<model::Net> net;
  feat::Standardizer scaler;
  double sigma_f = 0.0, sigma_g = 0.0;
};

void save_model_checkpoint(const model::TrainResult& tr,
                           const std::string& path) {
  json cfg_doc;
  cfg_doc["model"] = json::parse(model::model_config_to_json(tr.net->config()));
  cfg_doc["sigma_f"] = tr.sigma_f;
  cfg_doc["sigma_g"] = tr.sigma_g;

  ckpt::Checkpoint c;
  c.config_json = cfg_doc.dump();
  c.arrays = tr.net->state_arrays();
  c.arrays["scaler.mean"] = tr.scaler.mean;
  c.arrays["scaler.stddev"] = tr.scaler.stddev;
  ckpt::save_checkpoint(c, path);
}

LoadedModel load_model_checkpoint(const std::string& path) {
  if (path.empty())
    fail(ErrorKind::config, "checkpoint: required by this subcommand");
  ckpt::Checkpoint c = ckpt::load_checkpoint(path);
  json cfg_doc;
  try {
    cfg_doc = json::parse(c.config_json);
  } catch (const json::exception& e) {
    fail(ErrorKind::data,
         "checkpoint config block is not valid JSON: " + std::string(e.what()));
  }
  if (!cfg_doc.contains("model"))
    fail(ErrorKind::data, "checkpoint config block misses the model section");

  LoadedModel lm;
  model::ModelConfig mc = model::model_config_from_json(cfg_doc["model"].dump());
  lm.net = std::make_shared<model::Net>(mc, /*seed=*/0);
  auto grab = [&](const char* name, std::vector<double>& dst) {
    auto it = c.arrays.find(name);
    if (it != c.arrays.end()) {
      dst = it->second;
      c.arrays.erase(it);  // the net loader expects exactly its own arrays
    }
  };
  grab("scaler.mean", lm.scaler.mean);
  grab("scaler.stddev", lm.scaler.stddev);
  lm.net->load_state_arrays(c.arrays);
  if (cfg_doc.contains("sigma_f")) lm.sigma_f = cfg_doc["sigma_f"].get<double>();
  if (cfg_doc.contains("sigma_g")) lm.sigma_g = cfg_doc["sigma_g"].get<double>();
  return lm;
}

// --- events for cam/noise -----------------------------------------------------------------

// One landmark list per record, either generator ground truth from the events
// sidecar or a detector run on the unpadded samples.
std::vector<EventList> landmarks_for(const ExperimentConfig& cfg,
                                     const sig::Dataset& ds) {
  std::vector<EventList> out;
  if (cfg.cam.use_truth_events) {
    if (cfg.dataset.events.empty())
      fail(ErrorKind::config,
           "dataset.events: required when cam.use_truth_events is set");
    auto truth = synth::read_events_json(cfg.dataset.events);
    for (const auto& rec : ds.records) {
      auto it = truth.find(rec.id);
      if (it == truth.end())
        fail(ErrorKind::data, "events sidecar misses record " + rec.id);
      auto kt = it->second.find(cfg.cam.landmark);
      EventList ev;
      ev.kind = cfg.cam.landmark;
      ev.fs = rec.fs;
      if (kt != it->second.end()) {
        if (kt->second.fs != rec.fs)
          fail(ErrorKind::data,
               "events sidecar sampling rate differs from record " + rec.id);
        ev = kt->second;
      }
      out.push_back(std::move(ev));
    }
    return out;
  }

  for (const auto& rec : ds.records) {
    std::vector<double> body(
        rec.samples.begin(),
        rec.samples.begin() +
            static_cast<std::ptrdiff_t>(rec.original_length()));
    EventList ev;
    switch (cfg.cam.landmark) {
      case EventKind::r_peak:
        ev = dsp::detect_r_peaks(body, rec.fs);
        break;
      case EventKind::slow_wave:
        ev = feat::detect_slow_waves(body, rec.fs);
        break;
      case EventKind::rem: {
        auto it = rec.aux.find("eog");
        if (it == rec.aux.end())
          fail(ErrorKind::data,
               "record " + rec.id + " has no eog channel for rem landmarks");
        std::vector<double> eog(
            it->second.begin(),
            it->second.begin() +
                static_cast<std::ptrdiff_t>(std::min(
                    it->second.size(), rec.original_length())));
        ev = feat::detect_rapid_eye_movements(eog, rec.fs);
        break;
      }
      default:
        fail(ErrorKind::config,
             "cam.landmark: no detector for this event kind; "
             "set cam.use_truth_events");
    }
    out.push_back(std::move(ev));
  }
  return out;
}

// Activation maps + landmark lists for the records of the cam target class.
struct CamInputs {
  std::vector<cam::ActivationMap> maps;
  std::vector<EventList> events;
  std::size_t n_records = 0;
};

CamInputs cam_inputs(const ExperimentConfig& cfg, sig::Dataset& ds,
                     model::Net& net) {
  auto events_all = landmarks_for(cfg, ds);
  std::size_t input_len = net.config().input_len;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.records.size(); ++i)
    if (ds.records[i].label == static_cast<int>(cfg.cam.target_class))
      keep.push_back(i);
  if (keep.empty())
    fail(ErrorKind::data, "cam: no records of target class " +
                              std::to_string(cfg.cam.target_class));

  CamInputs in;
  std::vector<double> weights = net.cam_weights(cfg.cam.target_class);
  for (std::size_t i : keep) {
    const auto& rec = ds.records[i];
    Matrix fm = model::feature_maps(net, rec);
    in.maps.push_back(cam::compute_cam(fm, weights, rec.fs, input_len,
                                       rec.original_length()));
    in.events.push_back(events_all[i]);
  }
  in.n_records = keep.size();
  return in;
}

std::string template_csv(const cam::AlignedTemplate& tpl) {
  std::ostringstream os;
  os << "time_ms,mean_activation\n";
  for (std::size_t i = 0; i < tpl.time_ms.size(); ++i)
    os << fmt_double(tpl.time_ms[i]) << ',' << fmt_double(tpl.mean_profile[i])
       << '\n';
  return os.str();
}

// --- subcommand runners -----------------------------------------------------------------

void run_synth(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto& d = cfg.dataset;
  if (d.synth_kind.empty())
    fail(ErrorKind::config, "dataset.synth.kind: required by synth");
  if (d.synth_n == 0)
    fail(ErrorKind::config, "dataset.synth.n: must be positive");

  synth::SynthOutput so = d.synth_kind == "ecg"
                              ? synth::gen_ecg_like(d.synth_n, d.ecg, cfg.seed)
                              : synth::gen_eeg_like(d.synth_n, d.eeg, cfg.seed);
  so.dataset.splits =
      sig::split_dataset(so.dataset.records, d.split, d.stratify, cfg.seed);
  for (std::size_t i = 0; i < so.dataset.records.size(); ++i)
    so.dataset.records[i].meta["split"] =
        sig::to_string(so.dataset.splits[i]);

  std::string manifest_path =
      sig::save_manifest(so.dataset, path_join(out_dir, "data"));
  std::string events_path = path_join(out_dir, "events.json");
  synth::write_events_json(so, events_path);

  json summary;
  summary["kind"] = d.synth_kind;
  summary["n"] = d.synth_n;
  summary["classes"] = so.dataset.num_classes;
  summary["manifest"] = manifest_path;
  summary["events"] = events_path;
  json counts = json::object();
  for (std::size_t i = 0; i < so.dataset.records.size(); ++i) {
    std::string key = sig::to_string(so.dataset.splits[i]) + "_class_" +
                      std::to_string(so.dataset.records[i].label);
    counts[key] = counts.value(key, 0) + 1;
  }
  summary["split_counts"] = counts;
  write_text(path_join(out_dir, "synth_summary.json"), summary.dump(2) + "\n");
  write_run_manifest(cfg, "synth", out_dir);
}

void run_features(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.features.empty())
    fail(ErrorKind::config, "features: at least one feature set id required");
  sig::Dataset ds = load_dataset_for(cfg);

  feat::FeatureTable table;
  std::size_t imputed = 0;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    feat::FeatureVector fv =
        feat::extract_feature_sets(ds.records[i], cfg.features);
    if (table.names.empty()) table.names = fv.names;
    if (fv.values.size() != table.names.size())
      fail(ErrorKind::data, "inconsistent feature dimension for record " +
                                ds.records[i].id);
    table.ids.push_back(ds.records[i].id);
    table.values.push_back(fv.values);
    table.labels.push_back(ds.records[i].label);
    table.splits.push_back(ds.splits[i]);
    table.imputed.push_back(fv.imputed);
    if (fv.imputed) ++imputed;
  }
  std::string csv_path = path_join(out_dir, "features.csv");
  feat::write_features_csv(table, csv_path);

  json summary;
  summary["sets"] = cfg.features;
  summary["dim"] = table.dim();
  summary["rows"] = table.size();
  summary["imputed_rows"] = imputed;
  summary["csv"] = csv_path;
  write_text(path_join(out_dir, "features_summary.json"),
             summary.dump(2) + "\n");
  write_run_manifest(cfg, "features", out_dir);
}

// Shared by train and sweep. Returns the result plus the padded dataset and
// (optional) aligned features so callers can evaluate further.
struct TrainedRun {
  model::TrainResult result;
  model::Metrics train_m, val_m, test_m;
};

TrainedRun train_once(const ExperimentConfig& cfg, sig::Dataset& ds,
                      const feat::FeatureTable* table,
                      const model::LambdaConfig& lambda, std::ostream* log) {
  model::ModelConfig mc = cfg.model;
  mc.feature_dim = table ? table->dim() : 0;
  mc.input_len = pad_dataset(ds, cfg.model.input_len, cfg.input_len_given);
  if (ds.num_classes > 0) mc.num_classes = static_cast<std::size_t>(ds.num_classes);
  mc.validate();

  model::TrainData data{&ds, table};
  model::TrainOptions opts;
  opts.lambda = lambda;
  opts.upsample_train = cfg.dataset.upsample;
  opts.upsample_ratio = cfg.dataset.upsample_ratio;
  opts.seed = cfg.seed;
  opts.log_stream = log;

  TrainedRun run{model::train(data, mc, opts), {}, {}, {}};
  run.train_m = model::evaluate(*run.result.net, run.result.scaler, data,
                                sig::Split::train);
  run.val_m =
      model::evaluate(*run.result.net, run.result.scaler, data, sig::Split::val);
  run.test_m = model::evaluate(*run.result.net, run.result.scaler, data,
                               sig::Split::test);
  return run;
}

std::string train_log_csv(const std::vector<model::TrainLogRow>& log) {
  std::ostringstream os;
  os << "epoch,ce,hsic,lambda,lr,sigma_g,val_accuracy,val_f1\n";
  for (const auto& r : log)
    os << r.epoch << ',' << fmt_double(r.ce) << ',' << fmt_double(r.hsic)
       << ',' << fmt_double(r.lambda) << ',' << fmt_double(r.lr) << ','
       << fmt_double(r.sigma_g) << ',' << fmt_double(r.val_accuracy) << ','
       << fmt_double(r.val_f1) << '\n';
  return os.str();
}

void run_train(const ExperimentConfig& cfg, const std::string& out_dir) {
  sig::Dataset ds = load_dataset_for(cfg);
  feat::FeatureTable table;
  bool with_features = !cfg.dataset.features_csv.empty();
  if (with_features) table = load_features_for(cfg, ds);

  TrainedRun run = train_once(cfg, ds, with_features ? &table : nullptr,
                              cfg.lambda, &std::cout);

  save_model_checkpoint(run.result, path_join(out_dir, "checkpoint.ckpt"));
  write_text(path_join(out_dir, "train_log.csv"),
             train_log_csv(run.result.log));

  json m;
  m["seed"] = cfg.seed;
  m["feature_dim"] = run.result.net->config().feature_dim;
  m["lambda_strategy"] =
      cfg.lambda.strategy == model::LambdaConfig::Strategy::fixed ? "fixed"
                                                                  : "ratio";
  m["lambda_value"] = cfg.lambda.value;
  m["best_val_accuracy"] = run.result.best_val_accuracy;
  m["best_val_epoch"] = run.result.best_val_epoch;
  m["sigma_f"] = run.result.sigma_f;
  m["sigma_g"] = run.result.sigma_g;
  m["splits"]["train"] = metrics_json(run.train_m);
  m["splits"]["val"] = metrics_json(run.val_m);
  m["splits"]["test"] = metrics_json(run.test_m);
  write_text(path_join(out_dir, "metrics.json"), m.dump(2) + "\n");
  write_run_manifest(cfg, "train", out_dir);
}

void run_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.lambda_sweep.empty())
    fail(ErrorKind::config, "lambda_sweep: at least one value required");
  sig::Dataset ds = load_dataset_for(cfg);
  feat::FeatureTable table = load_features_for(cfg, ds);
  Matrix f = table_matrix(table);

  std::ostringstream csv;
  csv << "lambda,val_accuracy,test_accuracy,test_f1,independence_avg_r2\n";
  json rows = json::array();
  for (double lam : cfg.lambda_sweep) {
    model::LambdaConfig lc;
    lc.strategy = model::LambdaConfig::Strategy::fixed;
    lc.value = lam;
    sig::Dataset ds_run = ds;  // train pads in place; keep the original
    TrainedRun run = train_once(cfg, ds_run, &table, lc, &std::cout);

    Matrix g = model::latents(*run.result.net, ds_run);
    eval::AuxNetConfig aux = cfg.aux;
    eval::IndependenceResult ind =
        eval::independence_task(g, f, table.splits, aux);

    csv << fmt_double(lam) << ',' << fmt_double(run.val_m.accuracy) << ','
        << fmt_double(run.test_m.accuracy) << ','
        << fmt_double(run.test_m.f1_positive) << ','
        << fmt_double(ind.avg_r2) << '\n';
    json row;
    row["lambda"] = lam;
    row["val_accuracy"] = run.val_m.accuracy;
    row["test_accuracy"] = run.test_m.accuracy;
    row["test_f1"] = run.test_m.f1_positive;
    row["independence_avg_r2"] = ind.avg_r2;
    rows.push_back(std::move(row));
  }
  write_text(path_join(out_dir, "sweep.csv"), csv.str());
  json doc;
  doc["rows"] = std::move(rows);
  write_text(path_join(out_dir, "sweep.json"), doc.dump(2) + "\n");
  write_run_manifest(cfg, "sweep", out_dir);
}

void run_eval(const ExperimentConfig& cfg, const std::string& out_dir) {
  LoadedModel lm = load_model_checkpoint(cfg.checkpoint);
  sig::Dataset ds = load_dataset_for(cfg);
  feat::FeatureTable table = load_features_for(cfg, ds);
  pad_dataset(ds, lm.net->config().input_len, true);
  if (lm.net->config().feature_dim > 0 &&
      lm.net->config().feature_dim != table.dim())
    fail(ErrorKind::data,
         "features table dimension does not match the checkpoint");

  model::TrainData data{&ds, &table};
  model::Metrics val_m =
      model::evaluate(*lm.net, lm.scaler, data, sig::Split::val);
  model::Metrics test_m =
      model::evaluate(*lm.net, lm.scaler, data, sig::Split::test);

  Matrix f = table_matrix(table);
  Matrix g = model::latents(*lm.net, ds);
  eval::RelevanceResult rel =
      eval::relevance_task(f, table.labels, table.splits, cfg.aux);
  eval::IndependenceResult ind =
      eval::independence_task(g, f, table.splits, cfg.aux);

  std::vector<std::size_t> test_rows;
  for (std::size_t i = 0; i < table.splits.size(); ++i)
    if (table.splits[i] == sig::Split::test) test_rows.push_back(i);
  Matrix g_test(test_rows.size(), g.cols);
  std::vector<int> labels_test;
  for (std::size_t r = 0; r < test_rows.size(); ++r) {
    std::copy(g.row(test_rows[r]), g.row(test_rows[r]) + g.cols,
              g_test.row(r));
    labels_test.push_back(table.labels[test_rows[r]]);
  }
  eval::Rep2LabelResult r2l =
      eval::rep2label_task(g_test, labels_test, cfg.aux);

  json m;
  m["seed"] = cfg.seed;
  m["checkpoint"] = cfg.checkpoint;
  m["splits"]["val"] = metrics_json(val_m);
  m["splits"]["test"] = metrics_json(test_m);
  m["relevance"]["accuracy"] = rel.accuracy;
  m["relevance"]["f1"] = rel.f1;
  m["independence"]["avg_r2"] = ind.avg_r2;
  m["independence"]["per_dim_r2"] = ind.per_dim_r2;
  m["independence"]["excluded_dims"] = ind.excluded_dims;
  m["rep2label"]["accuracy"] = r2l.accuracy;
  m["rep2label"]["p_value"] = r2l.p_value;
  m["rep2label"]["chance"] = r2l.chance;
  m["rep2label"]["n"] = r2l.n;
  write_text(path_join(out_dir, "metrics.json"), m.dump(2) + "\n");
  write_run_manifest(cfg, "eval", out_dir);
}

void run_cam(const ExperimentConfig& cfg, const std::string& out_dir) {
  LoadedModel lm = load_model_checkpoint(cfg.checkpoint);
  sig::Dataset ds = load_dataset_for(cfg);
  pad_dataset(ds, lm.net->config().input_len, true);

  CamInputs in = cam_inputs(cfg, ds, *lm.net);
  cam::AlignedTemplate tpl =
      cam::aligned_templates(in.maps, in.events, cfg.cam.window_ms);
  std::vector<double> means = cam::window_means(tpl, cfg.cam.sub_window_ms);
  double mean_avg = 0.0;
  for (double v : means) mean_avg += v;
  if (!means.empty()) mean_avg /= static_cast<double>(means.size());

  write_text(path_join(out_dir, "template.csv"), template_csv(tpl));

  json m;
  m["target_class"] = cfg.cam.target_class;
  m["landmark"] = to_string(cfg.cam.landmark);
  m["n_records"] = in.n_records;
  m["n_events"] = tpl.n_events;
  m["n_skipped"] = tpl.n_skipped;
  m["window_ms"] = {cfg.cam.window_ms.lo_ms, cfg.cam.window_ms.hi_ms};
  m["sub_window_ms"] = {cfg.cam.sub_window_ms.lo_ms,
                        cfg.cam.sub_window_ms.hi_ms};
  m["sub_window_mean"] = mean_avg;
  m["peak_prominence"] = cam::peak_prominence(tpl.mean_profile);

  if (!cfg.cam.baseline_checkpoint.empty()) {
    LoadedModel base = load_model_checkpoint(cfg.cam.baseline_checkpoint);
    if (base.net->config().input_len != lm.net->config().input_len)
      fail(ErrorKind::data,
           "baseline checkpoint expects a different input length");
    CamInputs in_b = cam_inputs(cfg, ds, *base.net);
    cam::AlignedTemplate tpl_b =
        cam::aligned_templates(in_b.maps, in_b.events, cfg.cam.window_ms);
    std::vector<double> means_b =
        cam::window_means(tpl_b, cfg.cam.sub_window_ms);
    cam::TTestResult tt =
        cam::paired_ttest(means, means_b, /*greater_only=*/true);
    double mean_b = 0.0;
    for (double v : means_b) mean_b += v;
    if (!means_b.empty()) mean_b /= static_cast<double>(means_b.size());
    write_text(path_join(out_dir, "template_baseline.csv"),
               template_csv(tpl_b));
    m["baseline"]["sub_window_mean"] = mean_b;
    m["baseline"]["peak_prominence"] = cam::peak_prominence(tpl_b.mean_profile);
    m["compare"]["t"] = tt.t;
    m["compare"]["p_one_sided"] = tt.p;
    m["compare"]["df"] = tt.df;
    m["compare"]["degenerate"] = tt.degenerate;
    m["compare"]["n_pairs"] = means.size();
  }
  write_text(path_join(out_dir, "cam_metrics.json"), m.dump(2) + "\n");
  write_run_manifest(cfg, "cam", out_dir);
}

void run_noise(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.cam.intensities_ms.empty())
    fail(ErrorKind::config, "cam.intensities_ms: at least one value required");
  LoadedModel lm = load_model_checkpoint(cfg.checkpoint);
  sig::Dataset ds = load_dataset_for(cfg);
  pad_dataset(ds, lm.net->config().input_len, true);
  CamInputs in = cam_inputs(cfg, ds, *lm.net);

  std::ostringstream csv;
  csv << "intensity_ms,peak_prominence\n";
  std::vector<double> proms;
  for (double intensity : cfg.cam.intensities_ms) {
    cam::AlignedTemplate tpl = cam::noise_analysis(
        in.maps, in.events, cfg.cam.window_ms, intensity, cfg.seed);
    double p = cam::peak_prominence(tpl.mean_profile);
    proms.push_back(p);
    csv << fmt_double(intensity) << ',' << fmt_double(p) << '\n';
  }
  write_text(path_join(out_dir, "noise.csv"), csv.str());

  bool non_increasing = true;
  for (std::size_t i = 1; i < proms.size(); ++i)
    if (proms[i] > proms[i - 1]) non_increasing = false;
  json m;
  m["intensities_ms"] = cfg.cam.intensities_ms;
  m["peak_prominences"] = proms;
  m["non_increasing"] = non_increasing;
  m["spearman_rho"] = stats::spearman_rho(cfg.cam.intensities_ms, proms);
  std::size_t total_events = 0;
  for (const auto& ev : in.events) total_events += ev.size();
  m["n_events"] = total_events;
  write_text(path_join(out_dir, "noise.json"), m.dump(2) + "\n");
  write_run_manifest(cfg, "noise", out_dir);
}

void run_report(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.report_runs.empty())
    fail(ErrorKind::config, "report_runs: at least one run directory required");

  std::ostringstream csv;
  csv << "run,test_accuracy,test_f1,relevance_accuracy,independence_avg_r2,"
         "rep2label_accuracy,rep2label_p\n";
  for (const std::string& dir : cfg.report_runs) {
    std::string path = path_join(dir, "metrics.json");
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::data, "cannot read " + path);
    json m;
    try {
      m = json::parse(f);
    } catch (const json::exception& e) {
      fail(ErrorKind::data, path + ": invalid JSON: " + e.what());
    }
    // Runs contribute only the columns their metrics carry; the rest stay
    // empty so train-only and eval runs can share one table.
    auto cell = [&](std::initializer_list<const char*> keys) {
      const json* cur = &m;
      for (const char* k : keys) {
        if (!cur->is_object() || !cur->contains(k)) return std::string();
        cur = &cur->at(k);
      }
      return cur->is_number() ? fmt_double(cur->get<double>()) : std::string();
    };
    csv << dir << ',' << cell({"splits", "test", "accuracy"}) << ','
        << cell({"splits", "test", "f1_positive"}) << ','
        << cell({"relevance", "accuracy"}) << ','
        << cell({"independence", "avg_r2"}) << ','
        << cell({"rep2label", "accuracy"}) << ','
        << cell({"rep2label", "p_value"}) << '\n';
  }
  write_text(path_join(out_dir, "report.csv"), csv.str());
  write_run_manifest(cfg, "report", out_dir);
}

}  // namespace

// --- public entry points ---------------------------------------------------------------

const char* const kSubcommands[8] = {"synth", "features", "train", "sweep",
                                     "eval",  "cam",      "noise", "report"};

std::string library_version() { return "0.1.0"; }

ExperimentConfig parse_config_json(const std::string& json_text,
                                   const std::vector<std::string>& overrides) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object())
    fail(ErrorKind::config, "config: top level must be an object");
  for (const auto& ov : overrides) apply_override(root, ov);

  check_keys(root, "config",
             {"seed", "dataset", "features", "model", "checkpoint", "lambda",
              "lambda_sweep", "cam", "eval", "report_runs"});

  ExperimentConfig cfg;
  cfg.canonical_json = root.dump();
  if (auto* v = find(root, "seed")) cfg.seed = need_uint(*v, "config.seed");
  if (auto* v = find(root, "dataset"))
    parse_dataset(*v, "config.dataset", cfg.dataset);
  if (auto* v = find(root, "features"))
    cfg.features = need_string_array(*v, "config.features");
  if (auto* v = find(root, "model")) parse_model(*v, "config.model", cfg);
  if (auto* v = find(root, "checkpoint"))
    cfg.checkpoint = need_string(*v, "config.checkpoint");
  if (auto* v = find(root, "lambda"))
    parse_lambda(*v, "config.lambda", cfg.lambda);
  if (auto* v = find(root, "lambda_sweep"))
    cfg.lambda_sweep = need_number_array(*v, "config.lambda_sweep");
  if (auto* v = find(root, "cam")) parse_cam(*v, "config.cam", cfg.cam);
  cfg.aux.seed = cfg.seed;  // unless the eval section pins its own
  if (auto* v = find(root, "eval")) parse_aux(*v, "config.eval", cfg.aux);
  if (auto* v = find(root, "report_runs"))
    cfg.report_runs = need_string_array(*v, "config.report_runs");

  if (cfg.cam.window_ms.lo_ms >= cfg.cam.window_ms.hi_ms)
    fail(ErrorKind::config, "config.cam.window_ms: lo must be below hi");
  if (cfg.cam.sub_window_ms.lo_ms >= cfg.cam.sub_window_ms.hi_ms)
    fail(ErrorKind::config, "config.cam.sub_window_ms: lo must be below hi");
  return cfg;
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::config, "cannot open config file " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_json(buf.str(), overrides);
}

void run_subcommand(const ExperimentConfig& cfg, const std::string& subcommand,
                    const std::string& out_dir) {
  bool known = false;
  for (const char* s : kSubcommands) known = known || subcommand == s;
  if (!known)
    fail(ErrorKind::invalid_argument, "unknown subcommand " + subcommand);
  if (out_dir.empty())
    fail(ErrorKind::invalid_argument, "output directory must not be empty");
  std::error_code ec;
  fsys::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::data, "cannot create output directory " + out_dir);

  if (subcommand == "synth") return run_synth(cfg, out_dir);
  if (subcommand == "features") return run_features(cfg, out_dir);
  if (subcommand == "train") return run_train(cfg, out_dir);
  if (subcommand == "sweep") return run_sweep(cfg, out_dir);
  if (subcommand == "eval") return run_eval(cfg, out_dir);
  if (subcommand == "cam") return run_cam(cfg, out_dir);
  if (subcommand == "noise") return run_noise(cfg, out_dir);
  run_report(cfg, out_dir);
}

}  // namespace hsicnet::cli
