#include "hsicnet/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hsicnet/dsp.hpp"
#include "hsicnet/error.hpp"

namespace hsicnet::feat {

namespace {
double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population standard deviation (shared convention across all features).
double stddev_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

FeatureVector sentinel(std::vector<std::string> names, std::string set_id) {
  FeatureVector fv;
  fv.values.assign(names.size(), 0.0);
  fv.names = std::move(names);
  fv.set_id = std::move(set_id);
  fv.imputed = true;
  return fv;
}

const std::vector<std::string> kRrNames = {
    "rr_median", "rr_std", "rr_rms", "rr_mse_mean",
    "rr_min",    "rr_max", "rr_pnn20", "rr_pnn50"};

const std::vector<std::string> kPwaveNames = {
    "pw_amp_max",  "pw_amp_std",  "pw_energy_mean", "pw_corr_median",
    "pw_corr_std", "pw_fd_median", "pw_tmax_mean"};

const std::vector<std::string> kEegNames = {
    "eeg_rel_delta", "eeg_rel_theta", "eeg_rel_alpha", "eeg_rel_beta"};

std::vector<double> primary_slice(const sig::SignalRecord& record) {
  std::size_t n = std::min(record.original_length(), record.samples.size());
  return {record.samples.begin(), record.samples.begin() + static_cast<long>(n)};
}
}  // namespace

FeatureVector rr_features_from_intervals(const std::vector<double>& rr_seconds) {
  if (rr_seconds.size() < 2) return sentinel(kRrNames, "rr");

  FeatureVector fv;
  fv.names = kRrNames;
  fv.set_id = "rr";

  double rms = 0.0;
  for (double r : rr_seconds) rms += r * r;
  rms = std::sqrt(rms / static_cast<double>(rr_seconds.size()));

  // multiscale entropy mean over scales {1,2,3}, skipping undefined scales
  double mse_mean = 0.0;
  {
    std::vector<std::size_t> scales;
    for (std::size_t tau : {1u, 2u, 3u})
      if (tau * 4 <= rr_seconds.size()) scales.push_back(tau);  // len >= tau*(m+2)
    double acc = 0.0;
    std::size_t defined = 0;
    if (!scales.empty())
      for (auto& e : dsp::multiscale_entropy(rr_seconds, scales, 2, 0.2))
        if (e.has_value()) {
          acc += *e;
          ++defined;
        }
    mse_mean = defined > 0 ? acc / static_cast<double>(defined) : 0.0;
  }

  std::size_t over20 = 0, over50 = 0, diffs = rr_seconds.size() - 1;
  for (std::size_t i = 0; i + 1 < rr_seconds.size(); ++i) {
    double d_ms = std::abs(rr_seconds[i + 1] - rr_seconds[i]) * 1000.0;
    if (d_ms > 20.0) ++over20;
    if (d_ms > 50.0) ++over50;
  }

  fv.values = {median_of(rr_seconds),
               stddev_of(rr_seconds),
               rms,
               mse_mean,
               *std::min_element(rr_seconds.begin(), rr_seconds.end()),
               *std::max_element(rr_seconds.begin(), rr_seconds.end()),
               static_cast<double>(over20) / static_cast<double>(diffs),
               static_cast<double>(over50) / static_cast<double>(diffs)};
  return fv;
}

FeatureVector rr_features(const sig::SignalRecord& record) {
  auto samples = primary_slice(record);
  EventList peaks;
  try {
    peaks = dsp::detect_r_peaks(samples, record.fs);
  } catch (const Error&) {
    return sentinel(kRrNames, "rr");
  }
  if (peaks.indices.size() < 3) return sentinel(kRrNames, "rr");
  std::vector<double> rr(peaks.indices.size() - 1);
  for (std::size_t i = 0; i + 1 < peaks.indices.size(); ++i)
    rr[i] = static_cast<double>(peaks.indices[i + 1] - peaks.indices[i]) / record.fs;
  return rr_features_from_intervals(rr);
}

FeatureVector pwave_features_from_windows(
    const std::vector<std::vector<double>>& windows, double fs) {
  if (windows.size() < 2) return sentinel(kPwaveNames, "pwave");
  if (fs <= 0.0) fail(ErrorKind::invalid_argument, "pwave_features: fs must be > 0");

  FeatureVector fv;
  fv.names = kPwaveNames;
  fv.set_id = "pwave";

  double amp_max = -std::numeric_limits<double>::infinity();
  std::vector<double> pooled;
  double energy = 0.0;
  std::vector<double> tmax, fds;
  for (const auto& w : windows) {
    if (w.empty()) fail(ErrorKind::invalid_argument, "pwave_features: empty window");
    std::size_t arg = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      pooled.push_back(w[i]);
      energy += w[i] * w[i];
      if (w[i] > w[arg]) arg = i;
    }
    amp_max = std::max(amp_max, w[arg]);
    tmax.push_back(static_cast<double>(arg) / fs);
    std::size_t k_max = std::min<std::size_t>(10, w.size() / 2);
    if (k_max >= 2) {
      auto fd = dsp::higuchi_fd(w, k_max);
      if (fd.has_value()) fds.push_back(*fd);
    }
  }
  energy /= static_cast<double>(pooled.size());

  double corr_median = 0.0, corr_std = 0.0;
  try {
    auto corr = dsp::correlation_matrix(windows);
    std::vector<double> upper;
    std::size_t m = corr.matrix.size();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) upper.push_back(corr.matrix[i][j]);
    if (!upper.empty()) {
      corr_median = median_of(upper);
      corr_std = stddev_of(upper);
    }
  } catch (const Error&) {
    // fewer than two non-constant windows: correlation dims stay imputed at 0
  }

  fv.values = {amp_max,
               stddev_of(pooled),
               energy,
               corr_median,
               corr_std,
               fds.empty() ? 0.0 : median_of(fds),
               mean_of(tmax)};
  return fv;
}

FeatureVector pwave_features(const sig::SignalRecord& record) {
  auto samples = primary_slice(record);
  EventList peaks;
  try {
    peaks = dsp::detect_r_peaks(samples, record.fs);
  } catch (const Error&) {
    return sentinel(kPwaveNames, "pwave");
  }
  long win_len = std::lround(0.15 * record.fs);
  long back = std::lround(0.25 * record.fs);
  std::vector<std::vector<double>> windows;
  for (auto r : peaks.indices) {
    long start = static_cast<long>(r) - back;
    if (start < 0 || start + win_len > static_cast<long>(samples.size())) continue;
    windows.emplace_back(samples.begin() + start, samples.begin() + start + win_len);
  }
  return pwave_features_from_windows(windows, record.fs);
}

FeatureVector eeg_frequency_features(const sig::SignalRecord& record) {
  auto samples = primary_slice(record);
  try {
    auto psd = dsp::welch_psd(samples, record.fs);
    auto rel = dsp::relative_bandpower(psd, dsp::eeg_bands());
    FeatureVector fv;
    fv.values = rel;
    fv.names = kEegNames;
    fv.set_id = "eeg_freq";
    return fv;
  } catch (const Error&) {
    return sentinel(kEegNames, "eeg_freq");
  }
}

EventList detect_slow_waves(const std::vector<double>& samples, double fs) {
  if (fs < 50.0)
    fail(ErrorKind::invalid_argument, "detect_slow_waves: fs must be >= 50 Hz");
  EventList out;
  out.kind = EventKind::slow_wave;
  out.fs = fs;
  std::size_t min_len = static_cast<std::size_t>(std::lround(0.25 * fs));
  std::size_t max_len = static_cast<std::size_t>(std::lround(1.5 * fs));
  if (samples.size() < min_len) return out;

  std::size_t taps = static_cast<std::size_t>(4.0 * fs);
  taps |= 1;  // odd
  auto bp = dsp::filter_same(samples, dsp::design_bandpass_fir(0.5, 2.0, fs, taps));
  double sd = stddev_of(bp);
  if (sd <= 0.0) return out;
  double threshold = -1.5 * sd;
  // The reflect-padded filter rings near the record edges; troughs inside the
  // transient zone are artifacts, not physiology.
  std::size_t guard = std::min(taps / 2, bp.size() / 2);

  std::size_t i = 0;
  while (i < bp.size()) {
    if (bp[i] >= 0.0) {
      ++i;
      continue;
    }
    std::size_t start = i, trough = i;
    while (i < bp.size() && bp[i] < 0.0) {
      if (bp[i] < bp[trough]) trough = i;
      ++i;
    }
    std::size_t run = i - start;
    if (run >= min_len && run <= max_len && bp[trough] < threshold &&
        trough >= guard && trough + guard < bp.size())
      out.indices.push_back(trough);
  }
  return out;
}

EventList detect_rapid_eye_movements(const std::vector<double>& eog, double fs) {
  if (fs <= 0.0)
    fail(ErrorKind::invalid_argument, "detect_rapid_eye_movements: fs must be > 0");
  EventList out;
  out.kind = EventKind::rem;
  out.fs = fs;
  if (eog.size() < 2) return out;

  std::vector<double> diff(eog.size() - 1);
  for (std::size_t i = 0; i + 1 < eog.size(); ++i)
    diff[i] = std::abs(eog[i + 1] - eog[i]);

  double med = median_of(diff);
  std::vector<double> dev(diff.size());
  for (std::size_t i = 0; i < diff.size(); ++i) dev[i] = std::abs(diff[i] - med);
  double threshold = 4.0 * median_of(dev);

  std::size_t sustain = static_cast<std::size_t>(std::lround(0.05 * fs));
  std::size_t refractory = static_cast<std::size_t>(std::lround(0.3 * fs));
  long last_onset = -static_cast<long>(refractory) - 1;
  std::size_t i = 0;
  while (i < diff.size()) {
    if (diff[i] <= threshold) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < diff.size() && diff[i] > threshold) ++i;
    if (i - start >= sustain &&
        static_cast<long>(start) - last_onset >= static_cast<long>(refractory)) {
      out.indices.push_back(start);
      last_onset = static_cast<long>(start);
    }
  }
  return out;
}

FeatureVector concat_features(const FeatureVector& a, const FeatureVector& b) {
  FeatureVector fv;
  fv.set_id = a.set_id.empty() ? b.set_id : a.set_id + "+" + b.set_id;
  fv.values = a.values;
  fv.names = a.names;
  fv.imputed = a.imputed || b.imputed;
  for (std::size_t i = 0; i < b.values.size(); ++i) {
    std::string name = b.names[i];
    if (std::find(fv.names.begin(), fv.names.end(), name) != fv.names.end())
      name += "_" + b.set_id;
    fv.names.push_back(std::move(name));
    fv.values.push_back(b.values[i]);
  }
  return fv;
}

FeatureVector extract_feature_sets(const sig::SignalRecord& record,
                                   const std::vector<std::string>& set_ids) {
  if (set_ids.empty())
    fail(ErrorKind::config, "extract_feature_sets: no feature sets requested");
  FeatureVector acc;
  for (const auto& id : set_ids) {
    FeatureVector next;
    if (id == "rr")
      next = rr_features(record);
    else if (id == "pwave")
      next = pwave_features(record);
    else if (id == "eeg_freq")
      next = eeg_frequency_features(record);
    else
      fail(ErrorKind::config, "unknown feature set id: " + id);
    acc = acc.names.empty() ? next : concat_features(acc, next);
  }
  return acc;
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& rows) {
  if (rows.empty())
    fail(ErrorKind::invalid_argument, "Standardizer::fit: no rows");
  std::size_t dim = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != dim)
      fail(ErrorKind::invalid_argument, "Standardizer::fit: ragged rows");
  Standardizer s;
  s.mean.assign(dim, 0.0);
  s.stddev.assign(dim, 1.0);
  double n = static_cast<double>(rows.size());
  for (std::size_t d = 0; d < dim; ++d) {
    double m = 0.0;
    for (const auto& r : rows) m += r[d];
    m /= n;
    double v = 0.0;
    for (const auto& r : rows) v += (r[d] - m) * (r[d] - m);
    v /= n;
    s.mean[d] = m;
    s.stddev[d] = v > 0.0 ? std::sqrt(v) : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::transform(const std::vector<double>& row) const {
  if (row.size() != mean.size())
    fail(ErrorKind::invalid_argument, "Standardizer::transform: dim mismatch");
  std::vector<double> out(row.size());
  for (std::size_t d = 0; d < row.size(); ++d)
    out[d] = (row[d] - mean[d]) / stddev[d];
  return out;
}

void write_features_csv(const FeatureTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::data, "cannot open for writing: " + path);
  out << "id";
  for (const auto& n : table.names) out << ',' << n;
  out << ",label,split\n";
  out.precision(17);
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.ids[i];
    for (double v : table.values[i]) out << ',' << v;
    out << ',' << table.labels[i] << ',' << sig::to_string(table.splits[i]) << '\n';
  }
  if (!out) fail(ErrorKind::data, "write failed: " + path);
}

FeatureTable read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::data, "empty feature file: " + path);

  auto split_line = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };

  auto header = split_line(line);
  if (header.size() < 3 || header.front() != "id" ||
      header[header.size() - 2] != "label" || header.back() != "split")
    fail(ErrorKind::data, "feature csv header must be id,<names>,label,split");

  FeatureTable table;
  table.names.assign(header.begin() + 1, header.end() - 2);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      fail(ErrorKind::data, "feature csv row has wrong column count: " + path);
    table.ids.push_back(cells[0]);
    std::vector<double> row(table.names.size());
    for (std::size_t d = 0; d < table.names.size(); ++d) {
      try {
        row[d] = std::stod(cells[1 + d]);
      } catch (const std::exception&) {
        fail(ErrorKind::data, "feature csv: bad number in row for id " + cells[0]);
      }
    }
    table.values.push_back(std::move(row));
    try {
      table.labels.push_back(std::stoi(cells[header.size() - 2]));
    } catch (const std::exception&) {
      fail(ErrorKind::data, "feature csv: bad label for id " + cells[0]);
    }
    table.splits.push_back(sig::split_from_string(cells.back()));
    table.imputed.push_back(false);
  }
  return table;
}

}  // namespace hsicnet::feat
