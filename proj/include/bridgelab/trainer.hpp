#pragma once

#include <chrono>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bridgelab/bridge.hpp"
#include "bridgelab/config.hpp"
#include "bridgelab/metrics.hpp"
#include "bridgelab/net.hpp"
#include "bridgelab/objectives.hpp"

namespace bridgelab {

// Odd epochs train the backward net on forward-chain caches; even epochs
// train the forward net on backward-chain caches. Epochs are 1-based.
inline Direction epoch_direction(int epoch) {
  return (epoch % 2 == 1) ? Direction::Backward : Direction::Forward;
}

std::string checkpoint_name(int epoch, Direction d);

// The two drift nets of a bridge run. skip_first_epoch is set when the
// backward net came from a pretrained checkpoint: epoch 1 then only
// checkpoints and evaluates the converted net instead of retraining it.
// forward_untrained marks a forward net that has never been fitted; the
// first backward epoch then caches its trajectories under Reference noise,
// so every mode's opening epoch trains against the plain reference chain.
struct BridgePair {
  DriftNet backward;
  DriftNet forward;
  bool skip_first_epoch = false;
  bool forward_untrained = false;
};

// Builds the initial nets for a run: scratch Glorot nets (residual output
// head, except flow mode which uses the raw head) or nets converted from
// pretrained checkpoints, per cfg.init.
BridgePair resolve_init(const TrainConfig& cfg);

struct EvalScores {
  double kl_data = std::numeric_limits<double>::quiet_NaN();
  double kl_prior = std::numeric_limits<double>::quiet_NaN();
};

// Histogram KL of generated samples against reference draws, in both
// directions. Every seed involved depends only on cfg.seed, never on the
// epoch, so scores across epochs differ only through the nets.
EvalScores evaluate_pair(const TrainConfig& cfg, const DriftNet& backward,
                         const DriftNet& forward);

struct EpochResult {
  std::vector<MetricRecord> rows;
  int rejected_steps = 0;  // non-finite gradients skipped
};

// One IPF half-iteration: refresh trajectory caches from the frozen partner
// net every cache_refresh iterations, regress the training net onto its
// mode's targets, and log a loss row every eval_interval iterations.
// Divergence writes <run_dir>/emergency.ckpt (when run_dir is non-empty) and
// throws NumericalError. cache_noise overrides the step-noise rule used when
// simulating the frozen net's trajectories (see cache_trajectories).
EpochResult run_epoch(const TrainConfig& cfg, int epoch, DriftNet& train_net,
                      const DriftNet& gen_net, double lr_scale,
                      const std::string& run_dir,
                      std::chrono::steady_clock::time_point run_start,
                      std::optional<StepNoise> cache_noise = {});

struct IpfResult {
  std::vector<MetricRecord> metrics;
  std::string last_backward_ckpt;
  std::string last_forward_ckpt;
  int epochs_run = 0;
};

// The full alternating loop. Writes resolved_config.json, manifest.json,
// metrics.csv and one checkpoint per epoch into run_dir. With resume == true,
// restarts after the last epoch that left a checkpoint; because every epoch
// derives its streams from (cfg.seed, epoch), the result is bit-identical to
// an uninterrupted run (wall_ms aside). on_epoch, when set, is called with
// each epoch's final row (the one carrying the KL scores).
IpfResult run_ipf(const TrainConfig& cfg, const std::string& run_dir,
                  bool resume,
                  const std::function<void(const MetricRecord&)>& on_epoch = {});

struct PretrainResult {
  std::string ckpt_path;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
};

// Terminal-pair pretraining for ddpm / fm modes: draws (x0, xN) endpoint
// batches, builds the mode's noised sample and target for uniform k in 0..N,
// and regresses one net (epochs * iters_per_epoch steps, single Adam phase).
// Writes pretrain.ckpt, metrics.csv and a manifest into run_dir.
PretrainResult pretrain(const TrainConfig& cfg, const std::string& run_dir);

}  // namespace bridgelab
