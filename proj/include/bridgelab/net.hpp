#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "bridgelab/common.hpp"
#include "bridgelab/modes.hpp"

namespace bridgelab {

// Per-timestep affine head applied to the raw MLP output:
//   prediction(k, x) = scale_x[k] * x + scale_raw[k] * raw(k, x)
// Plain nets use (0, 1); next-state and terminal nets use the residual head
// (1, 1) so a zero-initialized final layer starts at the identity; nets
// adapted from a pretrained model carry per-timestep conversion coefficients.
struct OutputMap {
  VectorXd scale_x;
  VectorXd scale_raw;

  static OutputMap raw(int n_steps);
  static OutputMap residual(int n_steps);
  bool operator==(const OutputMap& o) const;
};

struct NetConfig {
  int data_dim = 2;
  std::vector<int> hidden = {128, 128};
  int time_embed_dim = 32;
  int n_steps = 16;  // timestep inputs range over 0..n_steps

  int input_dim() const { return data_dim + time_embed_dim; }
  bool operator==(const NetConfig& o) const = default;
};

// Gradients with the same shapes as the parameters.
struct GradBuffer {
  std::vector<MatrixXd> w;
  std::vector<VectorXd> b;
  MatrixXd embed;

  void set_zero();
  bool all_finite() const;
};

struct AdamState {
  std::vector<MatrixXd> m_w, v_w;
  std::vector<VectorXd> m_b, v_b;
  MatrixXd m_embed, v_embed;
  int64_t step = 0;
};

// Activations recorded by a forward pass, consumed by backward().
struct Tape {
  std::vector<int> steps;     // timestep per row
  MatrixXd input;             // rows x (data_dim + embed_dim)
  std::vector<MatrixXd> pre;  // pre-activations per hidden layer
  std::vector<MatrixXd> act;  // post-activations per hidden layer
  MatrixXd raw;               // MLP output before the affine head
  MatrixXd output;            // prediction after the affine head
};

// Small dense drift network: [x, embed(k)] -> hidden stack -> data_dim, with
// SiLU activations, a learned per-timestep embedding table and an affine
// output head. Forward and backward passes are closed-form; there is no
// autodiff anywhere.
struct DriftNet {
  NetConfig cfg;
  std::vector<MatrixXd> w;  // layer l: (out x in)
  std::vector<VectorXd> b;
  MatrixXd embed;           // (n_steps + 1) x time_embed_dim
  OutputMap out_map;
  AdamState adam;

  Direction role = Direction::Backward;
  ParamMode mode = ParamMode::SDsb;

  // Number of samples pushed through forward(); used by the evaluation-count
  // accounting tests. Not part of the persisted state.
  mutable std::atomic<int64_t> eval_count{0};

  DriftNet() = default;
  DriftNet(const DriftNet& o);
  DriftNet& operator=(const DriftNet& o);
  DriftNet(DriftNet&&) = default;
  DriftNet& operator=(DriftNet&&) = default;

  MatrixXd forward(int k, const MatrixXd& x) const;
  MatrixXd forward(const std::vector<int>& ks, const MatrixXd& x) const;
  Tape forward_tape(const std::vector<int>& ks, const MatrixXd& x) const;

  // Gradient of sum_i <output_i, upstream_i> w.r.t. every parameter.
  GradBuffer backward(const Tape& tape, const MatrixXd& upstream) const;

  GradBuffer zero_grads() const;

  // One bias-corrected Adam update. Returns false (parameters untouched)
  // when the gradient contains non-finite entries.
  bool adam_step(const GradBuffer& g, double lr, double beta1 = 0.9,
                 double beta2 = 0.999, double eps = 1e-8);
  void reset_adam();

  int64_t num_params() const;
  double& param_at(int64_t flat_index);
  double param_at(int64_t flat_index) const;

  uint64_t fingerprint() const;
};

// Fresh net: uniform Glorot hidden layers, zero-initialized final layer,
// small-normal embedding table, raw output head.
DriftNet make_drift_net(const NetConfig& cfg, uint64_t seed);

// Copies parameters (not optimizer state) between nets of identical
// architecture; throws ConfigError on shape mismatch.
void copy_params_into(const DriftNet& src, DriftNet& dst);

double silu(double z);
double silu_grad(double z);

}  // namespace bridgelab
