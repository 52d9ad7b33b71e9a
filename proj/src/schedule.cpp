#include "bridgelab/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bridgelab/common.hpp"

namespace bridgelab {

ScheduleShape shape_from_string(std::string_view s) {
  if (s == "constant") return ScheduleShape::Constant;
  if (s == "linear-symmetric") return ScheduleShape::LinearSymmetric;
  throw ConfigError("unknown schedule shape: " + std::string(s));
}

std::string to_string(ScheduleShape s) {
  return s == ScheduleShape::Constant ? "constant" : "linear-symmetric";
}

double GammaSchedule::g(int k) const {
  if (k < 1 || k > n_steps) throw std::out_of_range("gamma index");
  return gamma[static_cast<std::size_t>(k) - 1];
}

double GammaSchedule::gbar(int k) const {
  if (k < 0 || k > n_steps) throw std::out_of_range("gamma_bar index");
  return gamma_bar[static_cast<std::size_t>(k)];
}

GammaSchedule make_schedule(int n_steps, double g_min, double g_max,
                            ScheduleShape shape, bool normalize) {
  if (n_steps < 1) throw ConfigError("schedule needs at least one step");
  if (g_min <= 0.0) throw ConfigError("step sizes must be strictly positive");
  if (g_max < g_min) throw ConfigError("g_max must be >= g_min");

  GammaSchedule s;
  s.n_steps = n_steps;
  s.gamma.resize(static_cast<std::size_t>(n_steps));
  for (int k = 1; k <= n_steps; ++k) {
    double v = g_min;
    if (shape == ScheduleShape::LinearSymmetric) {
      // Distance from the nearer end; the ramp peaks at the middle step(s).
      int ramp = std::min(k - 1, n_steps - k);
      int ramp_len = std::max(1, (n_steps + 1) / 2 - 1);
      v = g_min + (g_max - g_min) * static_cast<double>(ramp) /
                      static_cast<double>(ramp_len);
    }
    s.gamma[static_cast<std::size_t>(k) - 1] = v;
  }

  if (normalize) {
    double total = std::accumulate(s.gamma.begin(), s.gamma.end(), 0.0);
    for (double& v : s.gamma) v /= total;
  }

  s.gamma_bar.resize(static_cast<std::size_t>(n_steps) + 1);
  s.gamma_bar[0] = 0.0;
  for (int k = 1; k <= n_steps; ++k)
    s.gamma_bar[static_cast<std::size_t>(k)] =
        s.gamma_bar[static_cast<std::size_t>(k) - 1] +
        s.gamma[static_cast<std::size_t>(k) - 1];

  s.normalized = std::abs(s.horizon() - 1.0) <= 1e-12;
  return s;
}

PosteriorVariances posterior_variances(const GammaSchedule& sched, int k) {
  if (!sched.normalized)
    throw ConfigError("posterior variances need a normalized schedule");
  if (k < 0 || k >= sched.n_steps)
    throw std::out_of_range("posterior transition index");

  PosteriorVariances v;
  const double g = sched.g(k + 1);
  v.backward = (k == 0) ? 0.0 : 2.0 * g * sched.gbar(k) / sched.gbar(k + 1);
  // 1 - gbar_N is exactly 0 for the last transition; write it explicitly so
  // rounding in the prefix sum cannot leak a tiny negative variance.
  v.forward = (k == sched.n_steps - 1)
                  ? 0.0
                  : 2.0 * g * (1.0 - sched.gbar(k + 1)) / (1.0 - sched.gbar(k));
  return v;
}

}  // namespace bridgelab
