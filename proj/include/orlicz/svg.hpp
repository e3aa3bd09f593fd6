#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace orlicz::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct Plot {
  std::string title, xlabel, ylabel;
  bool log_x = false;  // axis placement only; the data is transformed here
  std::vector<Series> series;
  std::vector<std::string> notes;  // printed under the legend
};

/// Polylines over a box with ticks. Non-finite points are dropped. The
/// optional timestamp goes into a leading comment and nowhere else.
void write(std::ostream& os, const Plot& plot, const std::optional<std::string>& timestamp = std::nullopt);

/// Current UTC time as 2026-01-31T12:00:00Z.
std::string utc_timestamp();

}  // namespace orlicz::svg
