#include "hsicnet.h"

#include <cstring>
#include <string>
#include <vector>

#include "hsicnet/error.hpp"
#include "hsicnet/experiment.hpp"
#include "hsicnet/hsic.hpp"
#include "hsicnet/matrix.hpp"

struct hsn_experiment {
  hsicnet::cli::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

hsn_status status_from(hsicnet::ErrorKind kind) {
  switch (kind) {
    case hsicnet::ErrorKind::invalid_argument:
      return HSN_ERROR_INVALID_ARGUMENT;
    case hsicnet::ErrorKind::config:
      return HSN_ERROR_CONFIG;
    case hsicnet::ErrorKind::data:
      return HSN_ERROR_DATA;
    case hsicnet::ErrorKind::numeric:
      return HSN_ERROR_NUMERIC;
  }
  return HSN_ERROR_INTERNAL;
}

// Every entry point funnels through here: exceptions become status codes and
// the message lands in the thread-local error slot.
template <typename Fn>
hsn_status guarded(Fn&& fn) {
  try {
    fn();
    return HSN_OK;
  } catch (const hsicnet::Error& e) {
    g_last_error = e.what();
    return status_from(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HSN_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return HSN_ERROR_INTERNAL;
  }
}

std::vector<std::string> collect_overrides(const char* const* overrides,
                                           size_t n_overrides) {
  if (n_overrides > 0 && overrides == nullptr)
    hsicnet::fail(hsicnet::ErrorKind::invalid_argument,
                  "overrides is null with n_overrides > 0");
  std::vector<std::string> out;
  out.reserve(n_overrides);
  for (size_t i = 0; i < n_overrides; ++i) {
    if (overrides[i] == nullptr)
      hsicnet::fail(hsicnet::ErrorKind::invalid_argument,
                    "override entry is null");
    out.emplace_back(overrides[i]);
  }
  return out;
}

hsicnet::Matrix wrap_matrix(const double* p, size_t n, size_t d,
                            const char* name) {
  if (p == nullptr)
    hsicnet::fail(hsicnet::ErrorKind::invalid_argument,
                  std::string(name) + " is null");
  if (d == 0)
    hsicnet::fail(hsicnet::ErrorKind::invalid_argument,
                  std::string(name) + " has zero columns");
  hsicnet::Matrix m(n, d);
  std::memcpy(m.data.data(), p, n * d * sizeof(double));
  return m;
}

}  // namespace

extern "C" {

hsn_status hsn_experiment_open(const char* config_path,
                               const char* const* overrides,
                               size_t n_overrides, hsn_experiment** out) {
  return guarded([&] {
    if (out == nullptr)
      hsicnet::fail(hsicnet::ErrorKind::invalid_argument, "out is null");
    *out = nullptr;
    if (config_path == nullptr)
      hsicnet::fail(hsicnet::ErrorKind::invalid_argument,
                    "config_path is null");
    auto cfg = hsicnet::cli::load_config(
        config_path, collect_overrides(overrides, n_overrides));
    *out = new hsn_experiment{std::move(cfg)};
  });
}

hsn_status hsn_experiment_open_json(const char* config_json,
                                    const char* const* overrides,
                                    size_t n_overrides, hsn_experiment** out) {
  return guarded([&] {
    if (out == nullptr)
      hsicnet::fail(hsicnet::ErrorKind::invalid_argument, "out is null");
    *out = nullptr;
    if (config_json == nullptr)
      hsicnet::fail(hsicnet::ErrorKind::invalid_argument,
                    "config_json is null");
    auto cfg = hsicnet::cli::parse_config_json(
        config_json, collect_overrides(overrides, n_overrides));
    *out = new hsn_experiment{std::move(cfg)};
  });
}

void hsn_experiment_close(hsn_experiment* experiment) { delete experiment; }

hsn_status hsn_experiment_run(hsn_experiment* experiment,
                              const char* subcommand, const char* out_dir) {
  return guarded([&] {
    if (experiment == nullptr)
      hsicnet::fail(hsicnet::ErrorKind::invalid_argument, "experiment is null");
    if (subcommand == nullptr)
      hsicnet::fail(hsicnet::ErrorKind::invalid_argument, "subcommand is null");
    if (out_dir == nullptr)
      hsicnet::fail(hsicnet::ErrorKind::invalid_argument, "out_dir is null");
    hsicnet::cli::run_subcommand(experiment->cfg, subcommand, out_dir);
  });
}

hsn_status hsn_hsic_statistic(const double* f, size_t n, size_t df,
                              const double* g, size_t dg, double sigma_f,
                              double sigma_g, double* out) {
  return guarded([&] {
    if (out == nullptr)
      hsicnet::fail(hsicnet::ErrorKind::invalid_argument, "out is null");
    hsicnet::Matrix mf = wrap_matrix(f, n, df, "f");
    hsicnet::Matrix mg = wrap_matrix(g, n, dg, "g");
    *out = hsicnet::hsic::hsic_statistic(mf, mg, sigma_f, sigma_g);
  });
}

hsn_status hsn_median_heuristic(const double* x, size_t n, size_t d,
                                double min_bandwidth, double* out) {
  return guarded([&] {
    if (out == nullptr)
      hsicnet::fail(hsicnet::ErrorKind::invalid_argument, "out is null");
    hsicnet::Matrix mx = wrap_matrix(x, n, d, "x");
    *out = hsicnet::hsic::median_heuristic(mx, min_bandwidth);
  });
}

const char* hsn_last_error(void) { return g_last_error.c_str(); }

const char* hsn_version(void) {
  static const std::string v = hsicnet::cli::library_version();
  return v.c_str();
}

}  // extern "C"
