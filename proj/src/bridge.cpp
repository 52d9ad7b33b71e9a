#include "bridgelab/bridge.hpp"

#include <cmath>
#include <thread>

namespace bridgelab {

StepNoise default_step_noise(ParamMode mode) {
  return is_reparam(mode) ? StepNoise::Posterior : StepNoise::Reference;
}

namespace {

void check_transition_index(const GammaSchedule& sched, int k) {
  if (k < 0 || k >= sched.n_steps)
    throw std::out_of_range("transition index out of range");
}

void check_net(const DriftNet& net, ParamMode mode, Direction dir) {
  if (net.mode != mode) throw ConfigError("net parameterization mismatch");
  if (net.role != dir) throw ConfigError("net direction mismatch");
  if (is_pretrain(mode))
    throw ConfigError("pretraining nets cannot drive bridge steps");
}

}  // namespace

MatrixXd posterior_mean_backward(const GammaSchedule& sched, int k,
                                 const MatrixXd& x_hi, const MatrixXd& x0) {
  if (!sched.normalized)
    throw ConfigError("posterior means need a normalized schedule");
  check_transition_index(sched, k);
  const double coef = sched.g(k + 1) / sched.gbar(k + 1);
  return x_hi + coef * (x0 - x_hi);
}

MatrixXd posterior_mean_forward(const GammaSchedule& sched, int k,
                                const MatrixXd& x_lo, const MatrixXd& xN) {
  if (!sched.normalized)
    throw ConfigError("posterior means need a normalized schedule");
  check_transition_index(sched, k);
  // The last transition has coefficient exactly 1: land on the endpoint.
  const double coef =
      k == sched.n_steps - 1 ? 1.0 : sched.g(k + 1) / (1.0 - sched.gbar(k));
  return x_lo + coef * (xN - x_lo);
}

StepResult forward_step(const DriftNet& net, ParamMode mode,
                        const GammaSchedule& sched, int k, const MatrixXd& x_k,
                        const MatrixXd& eps, StepNoise rule) {
  check_transition_index(sched, k);
  check_net(net, mode, Direction::Forward);

  StepResult r;
  switch (mode) {
    case ParamMode::DsbOriginal:
    case ParamMode::SDsb:
      r.mean = net.forward(k, x_k);
      break;
    case ParamMode::TrDsb:
      r.mean = posterior_mean_forward(sched, k, x_k, net.forward(k, x_k));
      break;
    case ParamMode::FrDsb:
      r.mean = x_k + sched.g(k + 1) * net.forward(k, x_k);
      break;
    default:
      throw ConfigError("unsupported sampling mode");
  }

  double var = 2.0 * sched.g(k + 1);
  if (rule == StepNoise::Posterior) {
    if (is_next_state(mode))
      throw ConfigError("next-state nets use the reference noise rule");
    var = posterior_variances(sched, k).forward;
  }
  r.state = r.mean + std::sqrt(var) * eps;
  return r;
}

StepResult backward_step(const DriftNet& net, ParamMode mode,
                         const GammaSchedule& sched, int k_plus_1,
                         const MatrixXd& x_hi, const MatrixXd& eps,
                         StepNoise rule) {
  const int k = k_plus_1 - 1;
  check_transition_index(sched, k);
  check_net(net, mode, Direction::Backward);

  StepResult r;
  switch (mode) {
    case ParamMode::DsbOriginal:
    case ParamMode::SDsb:
      r.mean = net.forward(k_plus_1, x_hi);
      break;
    case ParamMode::TrDsb:
      r.mean =
          posterior_mean_backward(sched, k, x_hi, net.forward(k_plus_1, x_hi));
      break;
    case ParamMode::FrDsb:
      r.mean = x_hi + sched.g(k + 1) * net.forward(k_plus_1, x_hi);
      break;
    default:
      throw ConfigError("unsupported sampling mode");
  }

  double var = 2.0 * sched.g(k + 1);
  if (rule == StepNoise::Posterior) {
    if (is_next_state(mode))
      throw ConfigError("next-state nets use the reference noise rule");
    var = posterior_variances(sched, k).backward;
  }
  r.state = r.mean + std::sqrt(var) * eps;
  return r;
}

bool TrajectoryBatch::all_finite() const {
  for (const auto& m : states)
    if (!m.allFinite()) return false;
  for (const auto& m : step_means)
    if (!m.allFinite()) return false;
  return true;
}

namespace {

// Simulates the chain for a contiguous block of paths, each with its own
// noise stream, stepping the whole block at once.
void simulate_block(const DriftNet& gen, ParamMode mode, Direction dir,
                    const GammaSchedule& sched, const Dist2D& start,
                    uint64_t seed, int p0, int p1, StepNoise rule,
                    TrajectoryBatch& out) {
  const int n = p1 - p0;
  const int N = sched.n_steps;

  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(n));
  for (int p = p0; p < p1; ++p)
    rngs.emplace_back(substream_seed(seed, "path", static_cast<uint64_t>(p)));

  MatrixXd cur(n, 2);
  for (int i = 0; i < n; ++i)
    cur.row(i) = sample(start, 1, rngs[static_cast<std::size_t>(i)]).row(0);

  const int start_idx = dir == Direction::Forward ? 0 : N;
  out.states[static_cast<std::size_t>(start_idx)].middleRows(p0, n) = cur;

  MatrixXd eps(n, 2);
  for (int t = 0; t < N; ++t) {
    for (int i = 0; i < n; ++i) {
      eps(i, 0) = rngs[static_cast<std::size_t>(i)].normal();
      eps(i, 1) = rngs[static_cast<std::size_t>(i)].normal();
    }
    StepResult step;
    int slot;  // transition slot between indices slot and slot+1
    if (dir == Direction::Forward) {
      slot = t;
      step = forward_step(gen, mode, sched, slot, cur, eps, rule);
    } else {
      slot = N - 1 - t;
      step = backward_step(gen, mode, sched, slot + 1, cur, eps, rule);
    }
    if (!step.state.allFinite())
      throw NumericalError("non-finite state while simulating transition " +
                               std::to_string(slot),
                           slot);
    cur = step.state;
    int next_idx = dir == Direction::Forward ? slot + 1 : slot;
    out.states[static_cast<std::size_t>(next_idx)].middleRows(p0, n) = cur;
    out.step_means[static_cast<std::size_t>(slot)].middleRows(p0, n) = step.mean;
  }
}

}  // namespace

TrajectoryBatch cache_trajectories(const DriftNet& gen, ParamMode mode,
                                   Direction dir, const GammaSchedule& sched,
                                   const Dist2D& start, int paths,
                                   uint64_t seed, int workers,
                                   std::optional<StepNoise> noise_rule) {
  if (paths < 0) throw ConfigError("path count must be non-negative");
  check_net(gen, mode, dir);

  TrajectoryBatch batch;
  batch.direction = dir;
  batch.n_steps = sched.n_steps;
  batch.net_fingerprint = gen.fingerprint();
  batch.base_seed = seed;
  batch.states.assign(static_cast<std::size_t>(sched.n_steps) + 1,
                      MatrixXd(paths, 2));
  batch.step_means.assign(static_cast<std::size_t>(sched.n_steps),
                          MatrixXd(paths, 2));
  if (paths == 0) return batch;

  const StepNoise rule = noise_rule.value_or(default_step_noise(mode));
  const int block = 512;
  const int n_blocks = (paths + block - 1) / block;
  workers = std::max(1, std::min(workers, n_blocks));

  if (workers == 1) {
    for (int bidx = 0; bidx < n_blocks; ++bidx)
      simulate_block(gen, mode, dir, sched, start, seed, bidx * block,
                     std::min(paths, (bidx + 1) * block), rule, batch);
    return batch;
  }

  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::atomic<int> next_block{0};
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        int bidx;
        while ((bidx = next_block.fetch_add(1)) < n_blocks)
          simulate_block(gen, mode, dir, sched, start, seed, bidx * block,
                         std::min(paths, (bidx + 1) * block), rule, batch);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return batch;
}

PointBatch sample_generation(const DriftNet& net, ParamMode mode,
                             Direction dir, const GammaSchedule& sched,
                             const Dist2D& start, int n, uint64_t seed,
                             int workers) {
  if (n == 0) return PointBatch(0, 2);
  auto batch = cache_trajectories(net, mode, dir, sched, start, n, seed, workers);
  return batch.states[dir == Direction::Forward
                          ? static_cast<std::size_t>(sched.n_steps)
                          : 0];
}

}  // namespace bridgelab
