#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hsicnet {

// What a landmark index points at. `synthetic` covers generator ground truth
// that has no dedicated detector (e.g. P-wave onsets, spindle centres).
enum class EventKind {
  r_peak,
  slow_wave,
  rem,
  spindle,
  synthetic,
};

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& s);

// Sample-index landmarks for one record, all of one kind, on the timeline of
// the record they were detected in. Indices are kept strictly increasing.
struct EventList {
  EventKind kind = EventKind::synthetic;
  double fs = 0.0;                  // sampling rate of that timeline, Hz
  std::vector<std::size_t> indices; // strictly increasing

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

}  // namespace hsicnet
