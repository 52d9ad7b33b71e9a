#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bridgelab {

enum class ScheduleShape { Constant, LinearSymmetric };

ScheduleShape shape_from_string(std::string_view s);
std::string to_string(ScheduleShape s);

// Per-step diffusion step sizes gamma_1..gamma_N plus their prefix sums
// gbar_k = gamma_1 + ... + gamma_k (gbar_0 = 0). All step sizes are
// strictly positive; `normalized` means gbar_N == 1 up to rounding.
struct GammaSchedule {
  int n_steps = 0;
  std::vector<double> gamma;      // gamma[k-1] = gamma_k for k = 1..N
  std::vector<double> gamma_bar;  // gamma_bar[k] = gbar_k for k = 0..N
  bool normalized = false;

  double g(int k) const;     // gamma_k, 1 <= k <= N
  double gbar(int k) const;  // gbar_k, 0 <= k <= N
  double horizon() const { return gamma_bar.back(); }
};

// shape == Constant uses g_min for every step (g_max ignored).
// shape == LinearSymmetric ramps linearly from g_min at both ends up to g_max
// in the middle; for even N the two middle steps both take g_max.
// normalize == true rescales so the step sizes sum to 1.
GammaSchedule make_schedule(int n_steps, double g_min, double g_max,
                            ScheduleShape shape, bool normalize);

// Variances of the Gaussian conditionals of the zero-drift chain pinned at an
// endpoint, for the transition between indices k and k+1 (0 <= k < N):
//   backward: Var(x_k     | x_{k+1}, x_0) = 2 gamma_{k+1} gbar_k / gbar_{k+1}
//   forward:  Var(x_{k+1} | x_k,     x_N) = 2 gamma_{k+1} (1 - gbar_{k+1}) / (1 - gbar_k)
// Requires a normalized schedule. Boundary transitions are deterministic:
// backward variance is 0 at k = 0 and forward variance is 0 at k = N-1.
struct PosteriorVariances {
  double backward = 0.0;
  double forward = 0.0;
};
PosteriorVariances posterior_variances(const GammaSchedule& sched, int k);

}  // namespace bridgelab
