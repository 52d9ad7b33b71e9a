#include "bridgelab/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bridgelab {

std::string metrics_csv_header() {
  return "epoch,direction,iter,loss,kl_data,kl_prior,wall_ms";
}

namespace {

std::string cell(double v) { return std::isnan(v) ? "" : format_double(v); }

}  // namespace

std::string to_csv_row(const MetricRecord& r) {
  std::ostringstream os;
  os << r.epoch << ',' << to_string(r.direction) << ',' << r.iter << ','
     << cell(r.loss) << ',' << cell(r.kl_data) << ',' << cell(r.kl_prior)
     << ',' << cell(r.wall_ms);
  return os.str();
}

std::vector<MetricRecord> read_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  std::vector<MetricRecord> out;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line != metrics_csv_header())
        throw ConfigError("unexpected metrics header in " + path);
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != 7) throw ConfigError("bad metrics row: " + line);
    MetricRecord r;
    r.epoch = static_cast<int>(parse_double(cells[0]));
    r.direction = direction_from_string(cells[1]);
    r.iter = static_cast<int64_t>(parse_double(cells[2]));
    r.loss = parse_double(cells[3]);
    r.kl_data = parse_double(cells[4]);
    r.kl_prior = parse_double(cells[5]);
    r.wall_ms = parse_double(cells[6]);
    out.push_back(r);
  }
  return out;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricRecord>& records) {
  std::ostringstream os;
  os << metrics_csv_header() << '\n';
  for (const auto& r : records) os << to_csv_row(r) << '\n';
  write_file_atomic(path, os.str());
}

}  // namespace bridgelab
