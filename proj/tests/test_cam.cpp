#include <doctest.h>

#include <cmath>
#include <vector>

#include "hsicnet/cam.hpp"
#include "hsicnet/error.hpp"

using namespace hsicnet;
using namespace hsicnet::cam;

namespace {
ActivationMap ramp_map(std::size_t len, double fs,
                       std::size_t orig_len = 0) {
  ActivationMap m;
  m.fs = fs;
  m.orig_len = orig_len == 0 ? len : orig_len;
  m.values.resize(len);
  for (std::size_t t = 0; t < len; ++t) m.values[t] = static_cast<double>(t);
  return m;
}

EventList events_at(std::vector<std::size_t> idx, double fs) {
  EventList e;
  e.kind = EventKind::synthetic;
  e.fs = fs;
  e.indices = std::move(idx);
  return e;
}
}  // namespace

TEST_CASE("compute_cam sums weighted channels and stretches x2 by midpoints") {
  // Two channels, three time steps. Weighted sum: 2*[1,2,3] + (-1)*[0,1,0].
  Matrix fm(2, 3);
  fm.at(0, 0) = 1; fm.at(0, 1) = 2; fm.at(0, 2) = 3;
  fm.at(1, 0) = 0; fm.at(1, 1) = 1; fm.at(1, 2) = 0;
  // raw = [2, 3, 6]; upsampled = [2, 2.5, 3, 4.5, 6, 6]
  auto cam = compute_cam(fm, {2.0, -1.0}, 100.0, 6, 6);
  CHECK(cam.values == std::vector<double>{2.0, 2.5, 3.0, 4.5, 6.0, 6.0});
  CHECK(cam.fs == 100.0);
  CHECK(cam.orig_len == 6);

  // Trimming: input_len 5 cuts the trailing replicated sample.
  auto trimmed = compute_cam(fm, {2.0, -1.0}, 100.0, 5, 5);
  CHECK(trimmed.values == std::vector<double>{2.0, 2.5, 3.0, 4.5, 6.0});

  // Masking: everything at or past orig_len is zeroed.
  auto masked = compute_cam(fm, {2.0, -1.0}, 100.0, 6, 3);
  CHECK(masked.values == std::vector<double>{2.0, 2.5, 3.0, 0.0, 0.0, 0.0});
}

TEST_CASE("compute_cam validates its inputs") {
  Matrix fm(2, 3);
  CHECK_THROWS_AS(compute_cam(fm, {1.0}, 100.0, 6, 6), Error);
  CHECK_THROWS_AS(compute_cam(fm, {1.0, 2.0}, 0.0, 6, 6), Error);
  CHECK_THROWS_AS(compute_cam(fm, {1.0, 2.0}, 100.0, 6, 7), Error);
  CHECK_THROWS_AS(compute_cam(fm, {1.0, 2.0}, 100.0, 8, 8), Error);
  CHECK_THROWS_AS(compute_cam(Matrix(), {}, 100.0, 6, 6), Error);
}

TEST_CASE("aligned_templates cuts, normalizes, and averages event windows") {
  // fs = 1000 Hz so milliseconds and samples coincide.
  const double fs = 1000.0;
  ActivationMap m;
  m.fs = fs;
  m.orig_len = 100;
  m.values.assign(100, 0.0);
  // A tent around index 50: values 0,1,2,1,0 at 48..52.
  m.values[48] = 1; m.values[49] = 2; m.values[50] = 3;
  m.values[51] = 2; m.values[52] = 1;

  auto tpl = aligned_templates({m}, {events_at({50}, fs)}, {-2.0, 2.0});
  REQUIRE(tpl.n_events == 1);
  CHECK(tpl.n_skipped == 0);
  REQUIRE(tpl.time_ms.size() == 5);
  CHECK(tpl.time_ms.front() == -2.0);
  CHECK(tpl.time_ms.back() == 2.0);
  // Profile min-max normalized: raw [1,2,3,2,1] -> [0,.5,1,.5,0].
  CHECK(tpl.profiles[0] == std::vector<double>{0.0, 0.5, 1.0, 0.5, 0.0});
  CHECK(tpl.mean_profile == tpl.profiles[0]);

  // A constant window normalizes to flat 0.5.
  auto flat = aligned_templates({m}, {events_at({10}, fs)}, {-2.0, 2.0});
  CHECK(flat.profiles[0] == std::vector<double>(5, 0.5));

  // Averaging two events: mean of [0,.5,1,.5,0] and [.5 x5].
  auto both = aligned_templates({m}, {events_at({10, 50}, fs)}, {-2.0, 2.0});
  REQUIRE(both.n_events == 2);
  CHECK(both.mean_profile ==
        std::vector<double>{0.25, 0.5, 0.75, 0.5, 0.25});
}

TEST_CASE("aligned_templates skips windows that leave the record") {
  const double fs = 1000.0;
  auto m = ramp_map(100, fs, 80);  // orig_len 80 masks nothing here, but
                                   // bounds checks use it, not values.size()
  auto tpl = aligned_templates(
      {m}, {events_at({1, 50, 79}, fs)}, {-2.0, 2.0});
  // idx 1: window [-1, 3] -> lo < 0, skipped. idx 79: hi = 81 >= 80, skipped.
  CHECK(tpl.n_events == 1);
  CHECK(tpl.n_skipped == 2);
}

TEST_CASE("aligned_templates validates shapes and sampling rates") {
  const double fs = 100.0;
  auto m = ramp_map(20, fs);
  CHECK_THROWS_AS(aligned_templates({m}, {}, {-2.0, 2.0}), Error);
  CHECK_THROWS_AS(aligned_templates({}, {}, {-2.0, 2.0}), Error);
  CHECK_THROWS_AS(
      aligned_templates({m}, {events_at({5}, 90.0)}, {-2.0, 2.0}), Error);
  CHECK_THROWS_AS(
      aligned_templates({m}, {events_at({5}, fs)}, {2.0, -2.0}), Error);
  auto short_map = ramp_map(20, fs);
  short_map.orig_len = 25;  // longer than the values it claims to describe
  CHECK_THROWS_AS(
      aligned_templates({short_map}, {events_at({5}, fs)}, {-2.0, 2.0}),
      Error);
}

TEST_CASE("noise_analysis at intensity zero reproduces aligned_templates") {
  const double fs = 250.0;
  ActivationMap m;
  m.fs = fs;
  m.orig_len = 500;
  m.values.resize(500);
  for (std::size_t t = 0; t < 500; ++t)
    m.values[t] = std::sin(0.05 * static_cast<double>(t)) +
                  0.001 * static_cast<double>(t);
  auto ev = events_at({100, 200, 300, 400}, fs);

  auto clean = aligned_templates({m}, {ev}, {-40.0, 40.0});
  auto zero = noise_analysis({m}, {ev}, {-40.0, 40.0}, 0.0, 7);
  REQUIRE(zero.n_events == clean.n_events);
  CHECK(zero.mean_profile == clean.mean_profile);
  for (std::size_t i = 0; i < clean.profiles.size(); ++i)
    CHECK(zero.profiles[i] == clean.profiles[i]);

  // Determinism: the same seed gives the same corrupted template.
  auto n1 = noise_analysis({m}, {ev}, {-40.0, 40.0}, 80.0, 7);
  auto n2 = noise_analysis({m}, {ev}, {-40.0, 40.0}, 80.0, 7);
  CHECK(n1.mean_profile == n2.mean_profile);

  // Nonzero intensity with a nontrivial map actually moves the windows.
  bool moved = n1.n_events != clean.n_events;
  if (!moved)
    for (std::size_t i = 0; i < clean.profiles.size() && !moved; ++i)
      moved = n1.profiles[i] != clean.profiles[i];
  CHECK(moved);

  CHECK_THROWS_AS(noise_analysis({m}, {ev}, {-40.0, 40.0}, -1.0, 7), Error);
}

TEST_CASE("window_means averages each profile inside the sub-window") {
  const double fs = 1000.0;
  ActivationMap m;
  m.fs = fs;
  m.orig_len = 40;
  m.values.assign(40, 0.0);
  for (std::size_t t = 8; t <= 12; ++t) m.values[t] = 2.0;  // plateau
  m.values[20] = 4.0;  // spike for the second event

  auto tpl = aligned_templates({m}, {events_at({10, 20}, fs)}, {-3.0, 3.0});
  REQUIRE(tpl.n_events == 2);
  // Event 1 raw window (7..13): [0,2,2,2,2,2,0] -> [0,1,1,1,1,1,0].
  // Event 2 raw window (17..23): [0,0,0,4,0,0,0] -> [0,0,0,1,0,0,0].
  auto means = window_means(tpl, {-1.0, 1.0});
  REQUIRE(means.size() == 2);
  CHECK(means[0] == doctest::Approx(1.0));
  CHECK(means[1] == doctest::Approx(1.0 / 3.0));

  // Full-window means differ: 5/7 vs 1/7.
  auto full = window_means(tpl, {-3.0, 3.0});
  CHECK(full[0] == doctest::Approx(5.0 / 7.0));
  CHECK(full[1] == doctest::Approx(1.0 / 7.0));

  CHECK_THROWS_AS(window_means(tpl, {-5.0, 1.0}), Error);
  CHECK_THROWS_AS(window_means(tpl, {-1.0, 4.0}), Error);
  CHECK_THROWS_AS(window_means(tpl, {1.0, -1.0}), Error);
  AlignedTemplate empty;
  empty.fs = fs;
  empty.window = {-3.0, 3.0};
  CHECK_THROWS_AS(window_means(empty, {-1.0, 1.0}), Error);
}

TEST_CASE("peak_prominence is max minus median") {
  CHECK(peak_prominence({0.0, 0.0, 1.0, 0.0, 0.0}) == 1.0);
  CHECK(peak_prominence({1.0, 1.0, 1.0}) == 0.0);
  // Even count: median is the mean of the middle two.
  CHECK(peak_prominence({0.0, 1.0, 2.0, 7.0}) == doctest::Approx(7.0 - 1.5));
  CHECK_THROWS_AS(peak_prominence({}), Error);
}

TEST_CASE("paired t-test matches hand-computed values") {
  // Differences 1, 2, 3: mean 2, sd 1, t = 2*sqrt(3), df 2.
  auto r = paired_ttest({2.0, 4.0, 6.0}, {1.0, 2.0, 3.0});
  CHECK(r.t == doctest::Approx(3.4641016151377544).epsilon(1e-12));
  CHECK(r.df == 2);
  CHECK(r.p == doctest::Approx(0.074179900227448463).epsilon(1e-9));
  CHECK_FALSE(r.degenerate);

  // One-sided halves the two-sided p here (positive t).
  auto one = paired_ttest({2.0, 4.0, 6.0}, {1.0, 2.0, 3.0}, true);
  CHECK(one.p == doctest::Approx(r.p / 2.0).epsilon(1e-12));

  // Symmetric swap flips the sign, keeps the two-sided p.
  auto sw = paired_ttest({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0});
  CHECK(sw.t == doctest::Approx(-r.t).epsilon(1e-12));
  CHECK(sw.p == doctest::Approx(r.p).epsilon(1e-12));
  // ...but the one-sided (a > b) p becomes large.
  auto sw1 = paired_ttest({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}, true);
  CHECK(sw1.p == doctest::Approx(1.0 - r.p / 2.0).epsilon(1e-9));
}

TEST_CASE("paired t-test handles zero-variance differences") {
  // Identical samples: no evidence, p = 1.
  auto same = paired_ttest({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);
  CHECK_FALSE(same.degenerate);

  // Constant nonzero difference: unbounded statistic, flagged.
  auto shifted = paired_ttest({2.0, 3.0, 4.0}, {1.0, 2.0, 3.0});
  CHECK(shifted.degenerate);
  CHECK(shifted.p == 0.0);
  CHECK(std::isinf(shifted.t));

  // One-sided with the "wrong" direction: p = 1.
  auto wrong = paired_ttest({1.0, 2.0, 3.0}, {2.0, 3.0, 4.0}, true);
  CHECK(wrong.degenerate);
  CHECK(wrong.p == 1.0);

  CHECK_THROWS_AS(paired_ttest({1.0}, {2.0}), Error);
  CHECK_THROWS_AS(paired_ttest({1.0, 2.0}, {1.0}), Error);
}
