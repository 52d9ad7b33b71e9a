#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bridgelab/common.hpp"
#include "bridgelab/datasets.hpp"
#include "bridgelab/modes.hpp"
#include "bridgelab/net.hpp"
#include "bridgelab/schedule.hpp"

namespace bridgelab {

// Which variance a sampling step injects.
//   Reference: 2 gamma_{k+1} at every transition (the plain chain kernel;
//              always used by next-state nets and by training caches).
//   Posterior: the pinned-endpoint conditional variances; boundary steps
//              (into index 0 backward, into index N forward) become exactly
//              deterministic. Default for terminal/flow nets.
enum class StepNoise { Reference, Posterior };
StepNoise default_step_noise(ParamMode mode);

// Conditional means of the zero-drift chain pinned at an endpoint, for the
// transition between indices k and k+1 (0 <= k < N):
//   backward: E[x_k     | x_{k+1}, x_0] = x_{k+1} + (gamma_{k+1}/gbar_{k+1}) (x_0 - x_{k+1})
//   forward:  E[x_{k+1} | x_k,     x_N] = x_k + (gamma_{k+1}/(1 - gbar_k)) (x_N - x_k)
// Row-wise over batches. Requires a normalized schedule.
MatrixXd posterior_mean_backward(const GammaSchedule& sched, int k,
                                 const MatrixXd& x_hi, const MatrixXd& x0);
MatrixXd posterior_mean_forward(const GammaSchedule& sched, int k,
                                const MatrixXd& x_lo, const MatrixXd& xN);

// One transition of the sampling chain. `eps` supplies the standard-normal
// draws (same shape as the state); it is always consumed, scaled by the
// step's standard deviation, so different noise rules stay stream-aligned.
// Also returns the deterministic part of the transition.
struct StepResult {
  MatrixXd state;
  MatrixXd mean;
};
StepResult forward_step(const DriftNet& net, ParamMode mode,
                        const GammaSchedule& sched, int k, const MatrixXd& x_k,
                        const MatrixXd& eps, StepNoise rule);
StepResult backward_step(const DriftNet& net, ParamMode mode,
                         const GammaSchedule& sched, int k_plus_1,
                         const MatrixXd& x_hi, const MatrixXd& eps,
                         StepNoise rule);

// A batch of simulated trajectories, stored per timestep: states[k] holds
// row p = path p at index k, for k = 0..N. step_means[k] holds the
// deterministic part of the transition between k and k+1 (whichever
// direction generated it). Forward trajectories start at states[0], backward
// ones at states[N].
struct TrajectoryBatch {
  std::vector<MatrixXd> states;
  std::vector<MatrixXd> step_means;
  Direction direction = Direction::Forward;
  int n_steps = 0;
  uint64_t net_fingerprint = 0;
  uint64_t base_seed = 0;

  int paths() const {
    return states.empty() ? 0 : static_cast<int>(states[0].rows());
  }
  bool all_finite() const;
};

// Simulates `paths` trajectories of the generating net's chain, starting
// from draws of `start`. Each path owns a noise stream derived from
// (seed, path index), so results are bit-identical for any worker count.
// Throws NumericalError (with the step index) if a state goes non-finite.
// `noise_rule` overrides the mode's default step noise; a fresh (never
// trained) terminal/flow net stepped under Reference noise walks exactly the
// plain reference chain, which is what the first training epoch must see.
TrajectoryBatch cache_trajectories(const DriftNet& gen, ParamMode mode,
                                   Direction dir, const GammaSchedule& sched,
                                   const Dist2D& start, int paths,
                                   uint64_t seed, int workers = 1,
                                   std::optional<StepNoise> noise_rule = {});

// Runs the full chain and returns only the far endpoints (index N for
// forward, index 0 for backward). n == 0 yields an empty batch.
PointBatch sample_generation(const DriftNet& net, ParamMode mode,
                             Direction dir, const GammaSchedule& sched,
                             const Dist2D& start, int n, uint64_t seed,
                             int workers = 1);

}  // namespace bridgelab
