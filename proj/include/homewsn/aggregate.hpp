// Windowed aggregation: consecutive non-overlapping windows of up to N
// samples, summarized as exact min/max/mean/count plus timestamp bounds.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "homewsn/errors.hpp"
#include "homewsn/fixed.hpp"

namespace homewsn {

struct TimedValue {
  std::int64_t ts_ms = 0;
  Fixed2 value;
};

struct AggregateWindow {
  Fixed2 min;
  Fixed2 max;
  double mean = 0;
  std::size_t count = 0;
  std::int64_t first_ts_ms = 0;
  std::int64_t last_ts_ms = 0;
};

// `samples` must be time-ordered. Sums are integer hundredths, so stats are
// exact up to the final division.
inline std::vector<AggregateWindow> aggregate(std::span<const TimedValue> samples,
                                              std::size_t window_len) {
  if (window_len == 0) throw ValidationError("aggregate: window_len must be >= 1");
  std::vector<AggregateWindow> windows;
  for (std::size_t start = 0; start < samples.size(); start += window_len) {
    std::size_t end = std::min(start + window_len, samples.size());
    AggregateWindow w;
    w.count = end - start;
    w.first_ts_ms = samples[start].ts_ms;
    w.last_ts_ms = samples[end - 1].ts_ms;
    w.min = samples[start].value;
    w.max = samples[start].value;
    std::int64_t sum_hundredths = 0;
    for (std::size_t i = start; i < end; ++i) {
      Fixed2 v = samples[i].value;
      if (v < w.min) w.min = v;
      if (v > w.max) w.max = v;
      sum_hundredths += v.hundredths();
    }
    w.mean = static_cast<double>(sum_hundredths) / (100.0 * static_cast<double>(w.count));
    windows.push_back(w);
  }
  return windows;
}

}  // namespace homewsn
