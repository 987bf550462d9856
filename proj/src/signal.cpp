#include "hsicnet/signal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hsicnet/dsp.hpp"
#include "hsicnet/error.hpp"
#include "hsicnet/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hsicnet {

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::r_peak: return "r_peak";
    case EventKind::slow_wave: return "slow_wave";
    case EventKind::rem: return "rem";
    case EventKind::spindle: return "spindle";
    case EventKind::synthetic: return "synthetic";
  }
  return "?";
}

EventKind event_kind_from_string(const std::string& s) {
  if (s == "r_peak") return EventKind::r_peak;
  if (s == "slow_wave") return EventKind::slow_wave;
  if (s == "rem") return EventKind::rem;
  if (s == "spindle") return EventKind::spindle;
  if (s == "synthetic") return EventKind::synthetic;
  fail(ErrorKind::config, "unknown event kind '" + s + "'");
}

}  // namespace hsicnet

namespace hsicnet::sig {

static_assert(std::endian::native == std::endian::little,
              "f32 payload I/O assumes a little-endian host");

std::size_t SignalRecord::original_length() const {
  auto it = meta.find("orig_len");
  if (it == meta.end()) return samples.size();
  return static_cast<std::size_t>(std::stoull(it->second));
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  fail(ErrorKind::data, "unknown split name: " + s);
}

// --- resampling ---------------------------------------------------------------

std::vector<double> resample(const std::vector<double>& samples, double fs_in,
                             double fs_out) {
  if (fs_in <= 0.0 || fs_out <= 0.0)
    fail(ErrorKind::invalid_argument, "resample: rates must be positive");
  if (fs_out > fs_in)
    fail(ErrorKind::invalid_argument, "resample: upsampling not supported");
  if (fs_in == fs_out) return samples;
  if (samples.empty()) return {};

  // Anti-alias below the new Nyquist, zero phase (symmetric kernel + reflect
  // padding), then sample the filtered trace on the coarser grid.
  auto kernel = dsp::design_lowpass_fir(0.45 * fs_out, fs_in, 61);
  auto filtered = dsp::filter_same(samples, kernel);

  auto out_len = static_cast<std::size_t>(
      std::floor(static_cast<double>(samples.size()) * fs_out / fs_in));
  std::vector<double> out(out_len);
  double step = fs_in / fs_out;
  for (std::size_t i = 0; i < out_len; ++i) {
    double pos = static_cast<double>(i) * step;
    auto i0 = static_cast<std::size_t>(pos);
    if (i0 >= filtered.size() - 1) {
      out[i] = filtered.back();
      continue;
    }
    double frac = pos - static_cast<double>(i0);
    out[i] = filtered[i0] + frac * (filtered[i0 + 1] - filtered[i0]);
  }
  return out;
}

std::vector<double> zero_pad(const std::vector<double>& samples,
                             std::size_t target_len) {
  if (target_len < samples.size())
    fail(ErrorKind::invalid_argument, "zero_pad: target shorter than input");
  std::vector<double> out = samples;
  out.resize(target_len, 0.0);
  return out;
}

void pad_record(SignalRecord& record, std::size_t target_len) {
  if (!record.meta.contains("orig_len"))
    record.meta["orig_len"] = std::to_string(record.samples.size());
  record.samples = zero_pad(record.samples, target_len);
}

// --- splitting -----------------------------------------------------------------

std::vector<Split> split_dataset(const std::vector<SignalRecord>& records,
                                 const SplitRatios& ratios, bool stratify,
                                 std::uint64_t seed) {
  double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9)
    fail(ErrorKind::config, "split ratios must sum to 1");
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0)
    fail(ErrorKind::config, "split ratios must be non-negative");
  if (records.empty()) fail(ErrorKind::data, "split: empty dataset");

  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i)
    groups[stratify ? records[i].label : 0].push_back(i);

  std::vector<Split> out(records.size(), Split::train);
  Rng rng(seed);
  const double want[3] = {ratios.train, ratios.val, ratios.test};
  for (auto& [label, idx] : groups) {
    if (idx.size() < 3)
      fail(ErrorKind::data, "split: class " + std::to_string(label) +
                                " has fewer records than splits");
    // seeded Fisher-Yates, then largest-remainder apportioning
    for (std::size_t i = idx.size() - 1; i > 0; --i)
      std::swap(idx[i], idx[rng.integer(i + 1)]);

    auto n = static_cast<double>(idx.size());
    std::size_t counts[3];
    double frac[3];
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      double exact = want[s] * n;
      counts[s] = static_cast<std::size_t>(std::floor(exact));
      frac[s] = exact - std::floor(exact);
      assigned += counts[s];
    }
    for (std::size_t left = idx.size() - assigned; left > 0; --left) {
      int best = 0;
      for (int s = 1; s < 3; ++s)
        if (frac[s] > frac[best]) best = s;
      ++counts[best];
      frac[best] = -1.0;
    }
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t c = 0; c < counts[s]; ++c)
        out[idx[pos++]] = static_cast<Split>(s);
  }
  return out;
}

std::vector<std::size_t> upsample_minority(
    const std::vector<SignalRecord>& records,
    const std::vector<std::size_t>& train_indices, double target_ratio,
    std::uint64_t seed) {
  std::vector<int> labels(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) labels[i] = records[i].label;
  return upsample_minority(labels, train_indices, target_ratio, seed);
}

std::vector<std::size_t> upsample_minority(
    const std::vector<int>& labels,
    const std::vector<std::size_t>& train_indices, double target_ratio,
    std::uint64_t seed) {
  if (target_ratio <= 0.0 || target_ratio > 1.0)
    fail(ErrorKind::invalid_argument, "upsample: ratio must be in (0, 1]");
  std::map<int, std::vector<std::size_t>> by_label;
  for (auto i : train_indices) by_label[labels[i]].push_back(i);
  if (by_label.size() < 2)
    fail(ErrorKind::data, "upsample: training split holds a single class");
  if (by_label.size() > 2)
    fail(ErrorKind::invalid_argument, "upsample: expects a two-class split");

  auto it = by_label.begin();
  auto* minority = &it->second;
  auto* majority = &std::next(it)->second;
  if (minority->size() > majority->size()) std::swap(minority, majority);

  std::vector<std::size_t> out = train_indices;
  auto target = static_cast<std::size_t>(
      std::llround(target_ratio * static_cast<double>(majority->size())));
  Rng rng(seed);
  while (minority->size() + (out.size() - train_indices.size()) < target)
    out.push_back((*minority)[rng.integer(minority->size())]);
  return out;
}

// --- payload + manifest I/O -----------------------------------------------------

std::vector<double> read_payload(const std::string& path) {
  fs::path p(path);
  std::ifstream f(p, std::ios::binary);
  if (!f) fail(ErrorKind::data, "cannot open payload " + path);
  if (p.extension() == ".csv") {
    std::vector<double> out;
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      try {
        out.push_back(std::stod(line));
      } catch (const std::exception&) {
        fail(ErrorKind::data, "bad sample in " + path + ": '" + line + "'");
      }
    }
    return out;
  }
  if (p.extension() == ".f32") {
    f.seekg(0, std::ios::end);
    auto bytes = static_cast<std::size_t>(f.tellg());
    f.seekg(0);
    if (bytes % 4 != 0)
      fail(ErrorKind::data, "truncated f32 payload " + path);
    std::vector<float> raw(bytes / 4);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    if (!f) fail(ErrorKind::data, "short read on " + path);
    return {raw.begin(), raw.end()};
  }
  fail(ErrorKind::data, "unsupported payload extension on " + path);
}

void write_payload_f32(const std::string& path,
                       const std::vector<double>& samples) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::data, "cannot write payload " + path);
  std::vector<float> raw(samples.begin(), samples.end());
  f.write(reinterpret_cast<const char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * 4));
}

static bool meta_truthy(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) return v.get<std::string>() == "true";
  return false;
}

Dataset load_manifest(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) fail(ErrorKind::data, "cannot open manifest " + manifest_path);
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    fail(ErrorKind::data, "manifest parse error: " + std::string(e.what()));
  }
  if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array())
    fail(ErrorKind::data, "manifest must be an object with a records array");

  fs::path base = fs::path(manifest_path).parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  Dataset ds;
  int max_label = -1;
  for (const auto& r : doc["records"]) {
    if (!r.contains("id") || !r.contains("path") || !r.contains("fs"))
      fail(ErrorKind::data, "manifest record missing id/path/fs");
    if (r.contains("meta") && r["meta"].contains("exclude") &&
        meta_truthy(r["meta"]["exclude"]))
      continue;
    SignalRecord rec;
    rec.id = r["id"].get<std::string>();
    rec.fs = r["fs"].get<double>();
    rec.label = r.value("label", -1);
    if (rec.fs <= 0) fail(ErrorKind::data, "record " + rec.id + ": fs <= 0");
    rec.samples = read_payload(resolve(r["path"].get<std::string>()));
    if (rec.samples.empty())
      fail(ErrorKind::data, "record " + rec.id + ": empty payload");
    if (r.contains("aux"))
      for (auto& [name, path] : r["aux"].items())
        rec.aux[name] = read_payload(resolve(path.get<std::string>()));
    if (r.contains("meta"))
      for (auto& [k, v] : r["meta"].items())
        rec.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    max_label = std::max(max_label, rec.label);
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) fail(ErrorKind::data, "manifest holds no usable records");
  ds.num_classes = doc.value("classes", max_label + 1);
  return ds;
}

std::string save_manifest(const Dataset& dataset, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "signals");
  json doc;
  doc["classes"] = dataset.num_classes;
  doc["records"] = json::array();
  for (const auto& rec : dataset.records) {
    std::string rel = "signals/" + rec.id + ".f32";
    write_payload_f32((fs::path(dir) / rel).string(), rec.samples);
    json r{{"id", rec.id}, {"path", rel}, {"fs", rec.fs}, {"label", rec.label}};
    if (!rec.aux.empty()) {
      json aux = json::object();
      for (const auto& [name, samples] : rec.aux) {
        std::string arel = "signals/" + rec.id + "." + name + ".f32";
        write_payload_f32((fs::path(dir) / arel).string(), samples);
        aux[name] = arel;
      }
      r["aux"] = aux;
    }
    if (!rec.meta.empty()) {
      json meta = json::object();
      for (const auto& [k, v] : rec.meta) meta[k] = v;
      r["meta"] = meta;
    }
    doc["records"].push_back(std::move(r));
  }
  std::string path = (fs::path(dir) / "manifest.json").string();
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(ErrorKind::data, "cannot write manifest " + path);
  f << doc.dump(2) << '\n';
  return path;
}

}  // namespace hsicnet::sig
