#pragma once

#include <string>
#include <vector>

#include "bridgelab/common.hpp"
#include "bridgelab/modes.hpp"

namespace bridgelab {

// One metrics.csv row. KL fields are NaN (empty cells) on rows where they
// were not measured; wall_ms is wall-clock time since run start and is the
// only column excluded from determinism comparisons.
struct MetricRecord {
  int epoch = 0;
  Direction direction = Direction::Backward;
  int64_t iter = 0;
  double loss = std::numeric_limits<double>::quiet_NaN();
  double kl_data = std::numeric_limits<double>::quiet_NaN();
  double kl_prior = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
};

std::string metrics_csv_header();
std::string to_csv_row(const MetricRecord& r);

std::vector<MetricRecord> read_metrics_csv(const std::string& path);
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricRecord>& records);

}  // namespace bridgelab
