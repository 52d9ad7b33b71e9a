#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bridgelab {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

// Batch of planar points, one row per sample.
using PointBatch = Eigen::Matrix<double, Eigen::Dynamic, 2>;

// User / configuration mistakes. The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values detected mid-computation. The CLI maps these to exit code 3.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg, int step = -1)
      : std::runtime_error(msg), step_index(step) {}
  int step_index;
};

uint64_t splitmix64(uint64_t& state);

// FNV-1a over raw bytes; used for parameter fingerprints and seed derivation.
uint64_t fnv1a(const void* data, std::size_t n,
               uint64_t h = 1469598103934665603ull);

// Derives an independent stream seed from a master seed, a purpose tag and up
// to two indices. Distinct (tag, a, b) triples give unrelated streams, which
// lets every path / epoch / minibatch own its noise regardless of worker
// count or resume point.
uint64_t substream_seed(uint64_t master, std::string_view tag, uint64_t a = 0,
                        uint64_t b = 0);

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  double normal() { return normal_(gen_); }
  double uniform() { return uniform_(gen_); }  // [0, 1)
  int uniform_int(int lo, int hi) {            // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(gen_);
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Fills a batch with standard normal draws, row by row.
void fill_normal(Rng& rng, Eigen::Ref<MatrixXd> out);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view s);

std::vector<std::string> split_csv_line(const std::string& line);

// Writes a file atomically (temp file + rename) so readers never observe a
// partial write.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace bridgelab
