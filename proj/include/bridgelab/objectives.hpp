#pragma once

#include <string>
#include <vector>

#include "bridgelab/common.hpp"
#include "bridgelab/modes.hpp"
#include "bridgelab/net.hpp"
#include "bridgelab/schedule.hpp"

namespace bridgelab {

// One row of the parameterization registry: how the noised training sample
// and the regression target are built for each supported method family.
// Rows with implemented == false are documented for completeness only;
// asking for them is an error.
struct RegistryRow {
  std::string name;
  std::string noised_sample;
  std::string target;
  bool implemented;
};
const std::vector<RegistryRow>& parameterization_registry();
const RegistryRow& registry_row(const std::string& name);

// Variance-preserving coefficients tied to the bridge time grid:
//   abar_k = exp(-2 c * gbar_k) with c chosen so abar_N == terminal.
// abar_0 == 1 and the sequence is strictly decreasing.
struct AlphaBarTable {
  VectorXd abar;  // size N + 1
  double terminal = 1e-4;

  double operator()(int k) const { return abar(k); }
  static AlphaBarTable from_schedule(const GammaSchedule& sched,
                                     double terminal = 1e-4);
};

// ---- bridge training targets ------------------------------------------------
//
// All take the transition pair (x_lo at index k, x_hi at index k+1) drawn
// from a cached trajectory of the frozen opposite net.
//
// Backward training fits B(k+1, x_hi); forward training fits F(k, x_lo).

// Original target: the cached step mean of the generating transition is
// reused (it equals frozen(k, x_lo) in next-state mode), so building the
// target costs exactly one fresh frozen evaluation per pair. Backward:
//   y = x_hi + frozen(k, x_lo) - frozen(k, x_hi)
// Forward (pairs from a backward cache, frozen net queried at k+1):
//   y = x_lo + frozen(k+1, x_hi) - frozen(k+1, x_lo)
MatrixXd target_dsb_original(const DriftNet& frozen, Direction train_dir,
                             const std::vector<int>& ks, const MatrixXd& x_lo,
                             const MatrixXd& x_hi, const MatrixXd& step_mean);
// Convenience overload that evaluates the frozen net at both states (two
// evaluations per pair); used when no cached step mean is available.
MatrixXd target_dsb_original(const DriftNet& frozen, Direction train_dir,
                             const std::vector<int>& ks, const MatrixXd& x_lo,
                             const MatrixXd& x_hi);

// Simplified target: the cached neighbouring state itself.
MatrixXd target_s_dsb(Direction train_dir, const MatrixXd& x_lo,
                      const MatrixXd& x_hi);

// Next-state target used when pretraining a score model on chain data; kept
// as a separate entry point so the first-epoch identity with the simplified
// bridge target is a checkable fact rather than an alias.
MatrixXd sgm_next_state_target(Direction train_dir, const MatrixXd& x_lo,
                               const MatrixXd& x_hi);

// Terminal-prediction target: the pinned endpoint of the cached trajectory
// (x_0 for backward training, x_N for forward training).
MatrixXd target_tr_dsb(Direction train_dir, const MatrixXd& endpoint);

// Flow target: scaled displacement toward the pinned endpoint. Requires a
// normalized schedule. Backward: (x_0 - x_hi) / gbar_{k+1}; forward:
// (x_N - x_lo) / (1 - gbar_k).
MatrixXd target_fr_dsb(const GammaSchedule& sched, Direction train_dir,
                       const std::vector<int>& ks, const MatrixXd& x_lo,
                       const MatrixXd& x_hi, const MatrixXd& endpoint);

// Dispatch over the four bridge modes. `endpoint` is the trajectory start of
// the cache (x_0 for forward caches, x_N for backward caches); `step_mean`
// is the cached deterministic part of each transition.
MatrixXd build_targets(ParamMode mode, Direction train_dir,
                       const GammaSchedule& sched, const DriftNet* frozen,
                       const std::vector<int>& ks, const MatrixXd& x_lo,
                       const MatrixXd& x_hi, const MatrixXd& endpoint,
                       const MatrixXd& step_mean);

// ---- pretraining pairs ------------------------------------------------------

struct PretrainPair {
  MatrixXd x_k;
  MatrixXd target;
};

// ddpm: x_k = sqrt(abar_k) x0 + sqrt(1 - abar_k) eps with eps = the prior
// draw, target = eps. fm: x_k = (1 - k/N) x0 + (k/N) xN, target = xN - x0.
// k may range over 0..N.
PretrainPair make_pretrain_pair(ParamMode mode, const AlphaBarTable& abar,
                                int n_steps, const std::vector<int>& ks,
                                const MatrixXd& x0, const MatrixXd& xN);

// ---- pretrained-model adapters ----------------------------------------------

// Per-timestep affine head (scale_x, scale_raw) that re-expresses a
// pretrained net's raw output as the requested bridge-mode prediction.
OutputMap adapter_output_map(ParamMode from_mode, ParamMode to_mode,
                             Direction role, const GammaSchedule& sched,
                             const AlphaBarTable& abar);

// Copy of `pretrained` whose output head, role and mode tags are rewritten
// so it predicts the to_mode quantity; optimizer state is reset. The
// returned net is trainable: gradients flow through the affine head.
DriftNet convert_pretrained_to_bridge(const DriftNet& pretrained,
                                      ParamMode to_mode, Direction role,
                                      const GammaSchedule& sched);

// Human-readable conversion coefficient table (one line per timestep).
std::string adapter_coefficient_table(const OutputMap& map);

// ---- loss -------------------------------------------------------------------

// Mean over the batch of squared error summed over coordinates, plus its
// gradient w.r.t. the prediction: 2 (pred - target) / batch.
struct MseLoss {
  double value = 0.0;
  MatrixXd grad;
};
MseLoss loss_mse(const MatrixXd& pred, const MatrixXd& target);

}  // namespace bridgelab
