#include "bridgelab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>

#include "bridgelab/checkpoint.hpp"
#include "bridgelab/eval.hpp"

namespace bridgelab {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void ema_update(DriftNet& shadow, const DriftNet& net, double decay) {
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    shadow.w[l] = decay * shadow.w[l] + (1.0 - decay) * net.w[l];
    shadow.b[l] = decay * shadow.b[l] + (1.0 - decay) * net.b[l];
  }
  shadow.embed = decay * shadow.embed + (1.0 - decay) * net.embed;
}

}  // namespace

std::string checkpoint_name(int epoch, Direction d) {
  return "epoch_" + std::to_string(epoch) + "_" + to_string(d) + ".ckpt";
}

BridgePair resolve_init(const TrainConfig& cfg) {
  if (!is_bridge(cfg.mode))
    throw ConfigError("bridge training needs a bridge mode, not " +
                      to_string(cfg.mode));
  const NetConfig nc = cfg.net_config();
  const GammaSchedule sched = cfg.schedule.build();

  auto scratch = [&](Direction role, const char* tag) {
    DriftNet net = make_drift_net(nc, substream_seed(cfg.seed, tag));
    net.mode = cfg.mode;
    net.role = role;
    // Residual head: a zero final layer starts at the identity map, which is
    // the reference chain for next-state nets and the stationary guess for
    // terminal nets. Flow nets instead start at zero flow via the raw head.
    if (cfg.mode != ParamMode::FrDsb)
      net.out_map = OutputMap::residual(nc.n_steps);
    return net;
  };
  auto converted = [&](const std::string& path, Direction role) {
    LoadedCheckpoint lc = load_checkpoint(path);
    DriftNet net = convert_pretrained_to_bridge(lc.net, cfg.mode, role, sched);
    if (!(net.cfg == nc))
      throw ConfigError("checkpoint architecture does not match the run config: " +
                        path);
    return net;
  };

  BridgePair pair{scratch(Direction::Backward, "init-backward"),
                  scratch(Direction::Forward, "init-forward"), false, false};
  switch (cfg.init) {
    case InitStrategy::Scratch:
      pair.forward_untrained = true;
      break;
    case InitStrategy::InitB:
      pair.backward = converted(cfg.init_backward_ckpt, Direction::Backward);
      pair.skip_first_epoch = true;
      pair.forward_untrained = true;
      break;
    case InitStrategy::InitBothSame:
      pair.backward = converted(cfg.init_backward_ckpt, Direction::Backward);
      pair.forward = converted(cfg.init_backward_ckpt, Direction::Forward);
      pair.skip_first_epoch = true;
      break;
    case InitStrategy::InitBothSeparate:
      pair.backward = converted(cfg.init_backward_ckpt, Direction::Backward);
      pair.forward = converted(cfg.init_forward_ckpt, Direction::Forward);
      pair.skip_first_epoch = true;
      break;
  }
  return pair;
}

EvalScores evaluate_pair(const TrainConfig& cfg, const DriftNet& backward,
                         const DriftNet& forward) {
  const GammaSchedule sched = cfg.schedule.build();
  const int n = cfg.eval_samples;

  Rng ref_data_rng(substream_seed(cfg.seed, "eval-ref-data"));
  Rng ref_prior_rng(substream_seed(cfg.seed, "eval-ref-prior"));
  const PointBatch ref_data = sample(cfg.data, n, ref_data_rng);
  const PointBatch ref_prior = sample(cfg.prior, n, ref_prior_rng);

  const PointBatch gen_data = sample_generation(
      backward, cfg.mode, Direction::Backward, sched, cfg.prior, n,
      substream_seed(cfg.seed, "eval-gen-backward"), cfg.workers);
  const PointBatch gen_prior = sample_generation(
      forward, cfg.mode, Direction::Forward, sched, cfg.data, n,
      substream_seed(cfg.seed, "eval-gen-forward"), cfg.workers);

  EvalScores s;
  s.kl_data = histogram_kl(gen_data, ref_data, 64, HistBounds::for_dist(cfg.data));
  s.kl_prior =
      histogram_kl(gen_prior, ref_prior, 64, HistBounds::for_dist(cfg.prior));
  return s;
}

EpochResult run_epoch(const TrainConfig& cfg, int epoch, DriftNet& train_net,
                      const DriftNet& gen_net, double lr_scale,
                      const std::string& run_dir,
                      Clock::time_point run_start,
                      std::optional<StepNoise> cache_noise) {
  const GammaSchedule sched = cfg.schedule.build();
  const int N = sched.n_steps;
  const Direction train_dir = epoch_direction(epoch);
  const Direction chain_dir = opposite(train_dir);
  const Dist2D& start =
      (chain_dir == Direction::Forward) ? cfg.data : cfg.prior;

  if (train_net.role != train_dir || gen_net.role != chain_dir)
    throw ConfigError("net roles do not match the epoch direction");
  if (train_net.mode != cfg.mode || gen_net.mode != cfg.mode)
    throw ConfigError("net mode does not match the run mode");

  const int batch = cfg.batch_size;
  const int pool_paths =
      cfg.exact_cache ? batch : cfg.cache_pool_factor * batch;
  const int refresh_every = cfg.exact_cache ? 1 : cfg.cache_refresh;
  const uint64_t epoch_seed =
      substream_seed(cfg.seed, "epoch", static_cast<uint64_t>(epoch));
  const uint64_t gen_fp = gen_net.fingerprint();

  train_net.reset_adam();
  std::optional<DriftNet> ema;
  if (cfg.ema_decay > 0.0) ema.emplace(train_net);

  auto emergency = [&](const std::string& what, int iter) {
    if (!run_dir.empty()) {
      save_checkpoint((fs::path(run_dir) / "emergency.ckpt").string(),
                      train_net, cfg.seed,
                      {{"epoch", epoch}, {"iter", iter}, {"reason", what}});
    }
    throw NumericalError(what + " (epoch " + std::to_string(epoch) +
                             ", iteration " + std::to_string(iter) + ")",
                         iter);
  };

  TrajectoryBatch cache;
  EpochResult result;
  double window_sum = 0.0;
  int64_t window_n = 0;

  MatrixXd x_lo(batch, 2), x_hi(batch, 2), endpoint(batch, 2),
      step_mean(batch, 2);
  std::vector<int> ks(batch), net_ks(batch);
  const int endpoint_idx = (train_dir == Direction::Backward) ? 0 : N;

  for (int iter = 1; iter <= cfg.iters_per_epoch; ++iter) {
    if ((iter - 1) % refresh_every == 0) {
      const int refresh_idx = (iter - 1) / refresh_every;
      try {
        cache = cache_trajectories(
            gen_net, cfg.mode, chain_dir, sched, start, pool_paths,
            substream_seed(epoch_seed, "cache", refresh_idx), cfg.workers,
            cache_noise);
      } catch (const NumericalError& e) {
        emergency(std::string("trajectory cache diverged: ") + e.what(), iter);
      }
      if (cache.net_fingerprint != gen_fp)
        throw std::logic_error(
            "trajectory cache was generated by a different net");
    }

    Rng it_rng(substream_seed(epoch_seed, "minibatch", iter));
    for (int i = 0; i < batch; ++i) {
      const int p = cfg.exact_cache ? i : it_rng.uniform_int(0, pool_paths - 1);
      const int k = it_rng.uniform_int(0, N - 1);
      ks[i] = k;
      net_ks[i] = (train_dir == Direction::Backward) ? k + 1 : k;
      x_lo.row(i) = cache.states[k].row(p);
      x_hi.row(i) = cache.states[k + 1].row(p);
      step_mean.row(i) = cache.step_means[k].row(p);
      endpoint.row(i) = cache.states[endpoint_idx].row(p);
    }

    const MatrixXd targets = build_targets(cfg.mode, train_dir, sched,
                                           &gen_net, ks, x_lo, x_hi, endpoint,
                                           step_mean);
    const MatrixXd& inputs = (train_dir == Direction::Backward) ? x_hi : x_lo;
    const Tape tape = train_net.forward_tape(net_ks, inputs);
    const MseLoss loss = loss_mse(tape.output, targets);
    if (!std::isfinite(loss.value)) emergency("loss went non-finite", iter);

    const GradBuffer grads = train_net.backward(tape, loss.grad);
    double lr = cfg.lr * lr_scale;
    if (cfg.lr_schedule == "cosine" && cfg.iters_per_epoch > 1)
      lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * double(iter - 1) /
                                  double(cfg.iters_per_epoch)));
    if (!train_net.adam_step(grads, lr, cfg.beta1, cfg.beta2, cfg.adam_eps)) {
      ++result.rejected_steps;
    } else if (ema) {
      ema_update(*ema, train_net, cfg.ema_decay);
    }

    window_sum += loss.value;
    ++window_n;
    if (iter % cfg.eval_interval == 0 || iter == cfg.iters_per_epoch) {
      MetricRecord r;
      r.epoch = epoch;
      r.direction = train_dir;
      r.iter = iter;
      r.loss = window_sum / double(window_n);
      r.wall_ms = ms_since(run_start);
      result.rows.push_back(r);
      window_sum = 0.0;
      window_n = 0;
    }
  }

  if (ema) copy_params_into(*ema, train_net);
  return result;
}

IpfResult run_ipf(const TrainConfig& cfg, const std::string& run_dir,
                  bool resume,
                  const std::function<void(const MetricRecord&)>& on_epoch) {
  cfg.validate();
  const auto run_start = Clock::now();
  fs::create_directories(run_dir);
  write_file_atomic((fs::path(run_dir) / "resolved_config.json").string(),
                    config_to_json(cfg).dump(2) + "\n");

  RunManifest man;
  man.run_name = cfg.run_name;
  man.command = "train";
  man.seed = cfg.seed;
  man.started_at = iso8601_now();

  BridgePair pair = resolve_init(cfg);
  std::vector<MetricRecord> metrics;
  int first_epoch = 1;

  if (resume) {
    int last_complete = 0;
    for (int e = 1; e <= cfg.epochs; ++e) {
      if (fs::exists(fs::path(run_dir) / checkpoint_name(e, epoch_direction(e))))
        last_complete = e;
      else
        break;
    }
    if (last_complete > 0) {
      auto restore = [&](Direction d, DriftNet& into) {
        for (int e = last_complete; e >= 1; --e) {
          if (epoch_direction(e) != d) continue;
          LoadedCheckpoint lc = load_checkpoint(
              (fs::path(run_dir) / checkpoint_name(e, d)).string());
          if (!(lc.net.cfg == cfg.net_config()))
            throw ConfigError(
                "resume checkpoint architecture does not match the config");
          into = std::move(lc.net);
          return;
        }
      };
      restore(Direction::Backward, pair.backward);
      restore(Direction::Forward, pair.forward);
      first_epoch = last_complete + 1;
      const fs::path mpath = fs::path(run_dir) / "metrics.csv";
      if (fs::exists(mpath)) {
        metrics = read_metrics_csv(mpath.string());
        std::erase_if(metrics, [&](const MetricRecord& r) {
          return r.epoch > last_complete;
        });
      }
      for (int e = 1; e <= last_complete; ++e)
        man.checkpoints.push_back(checkpoint_name(e, epoch_direction(e)));
    }
  }

  man.status = "running";
  write_manifest(run_dir, man);
  const std::string metrics_path = (fs::path(run_dir) / "metrics.csv").string();
  write_metrics_csv(metrics_path, metrics);

  // Plateau-driven learning-rate halving; replayed from recorded epochs on
  // resume so an interrupted run sees the same scale sequence.
  double lr_scale = 1.0;
  double best_kl = std::numeric_limits<double>::infinity();
  int stall = 0;
  auto plateau_update = [&](double kl) {
    if (cfg.plateau_patience <= 0 || !std::isfinite(kl)) return;
    if (kl < best_kl - 1e-3) {
      best_kl = kl;
      stall = 0;
    } else if (++stall >= cfg.plateau_patience) {
      lr_scale *= 0.5;
      stall = 0;
    }
  };
  for (const MetricRecord& r : metrics)
    if (std::isfinite(r.kl_data)) plateau_update(r.kl_data);

  IpfResult out;
  for (int epoch = first_epoch; epoch <= cfg.epochs; ++epoch) {
    const Direction dir = epoch_direction(epoch);
    DriftNet& train = (dir == Direction::Backward) ? pair.backward : pair.forward;
    const DriftNet& gen = (dir == Direction::Backward) ? pair.forward : pair.backward;

    std::vector<MetricRecord> rows;
    const bool skip = (epoch == 1 && pair.skip_first_epoch);
    // A never-trained forward net stands for the reference chain: cache its
    // epoch-1 trajectories under Reference noise so the opening backward
    // epoch regresses against the plain noising process in every mode.
    const std::optional<StepNoise> cache_noise =
        (epoch == 1 && pair.forward_untrained)
            ? std::optional<StepNoise>(StepNoise::Reference)
            : std::nullopt;
    if (!skip) {
      try {
        rows = run_epoch(cfg, epoch, train, gen, lr_scale, run_dir, run_start,
                         cache_noise)
                   .rows;
      } catch (const NumericalError&) {
        man.status = "failed";
        man.finished_at = iso8601_now();
        write_manifest(run_dir, man);
        throw;
      }
    }

    const EvalScores scores = evaluate_pair(cfg, pair.backward, pair.forward);
    if (rows.empty()) {
      MetricRecord r;
      r.epoch = epoch;
      r.direction = dir;
      r.iter = 0;
      rows.push_back(r);
    }
    rows.back().kl_data = scores.kl_data;
    rows.back().kl_prior = scores.kl_prior;
    rows.back().wall_ms = ms_since(run_start);
    metrics.insert(metrics.end(), rows.begin(), rows.end());
    write_metrics_csv(metrics_path, metrics);

    const std::string ckpt = checkpoint_name(epoch, dir);
    save_checkpoint((fs::path(run_dir) / ckpt).string(), train, cfg.seed,
                    {{"epoch", epoch},
                     {"direction", to_string(dir)},
                     {"kl_data", scores.kl_data},
                     {"kl_prior", scores.kl_prior}});
    man.checkpoints.push_back(ckpt);
    write_manifest(run_dir, man);
    ++out.epochs_run;
    plateau_update(scores.kl_data);
    if (on_epoch) on_epoch(rows.back());
  }

  man.status = "completed";
  man.finished_at = iso8601_now();
  write_manifest(run_dir, man);

  for (int e = cfg.epochs; e >= 1; --e) {
    const Direction d = epoch_direction(e);
    const std::string p = (fs::path(run_dir) / checkpoint_name(e, d)).string();
    if (!fs::exists(p)) continue;
    if (d == Direction::Backward && out.last_backward_ckpt.empty())
      out.last_backward_ckpt = p;
    if (d == Direction::Forward && out.last_forward_ckpt.empty())
      out.last_forward_ckpt = p;
  }
  out.metrics = std::move(metrics);
  return out;
}

PretrainResult pretrain(const TrainConfig& cfg, const std::string& run_dir) {
  cfg.validate();
  if (!is_pretrain(cfg.mode))
    throw ConfigError("pretraining takes mode ddpm or fm, not " +
                      to_string(cfg.mode));
  const auto run_start = Clock::now();
  fs::create_directories(run_dir);
  write_file_atomic((fs::path(run_dir) / "resolved_config.json").string(),
                    config_to_json(cfg).dump(2) + "\n");

  RunManifest man;
  man.run_name = cfg.run_name;
  man.command = "pretrain";
  man.seed = cfg.seed;
  man.started_at = iso8601_now();
  man.status = "running";
  write_manifest(run_dir, man);

  const GammaSchedule sched = cfg.schedule.build();
  const int N = sched.n_steps;
  const AlphaBarTable abar = AlphaBarTable::from_schedule(sched);

  DriftNet net =
      make_drift_net(cfg.net_config(), substream_seed(cfg.seed, "pretrain-init"));
  net.mode = cfg.mode;
  net.role = Direction::Backward;  // conversion assigns the real role later

  const std::string metrics_path = (fs::path(run_dir) / "metrics.csv").string();
  std::vector<MetricRecord> metrics;
  double window_sum = 0.0;
  int64_t window_n = 0;
  double last_loss = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> ks(cfg.batch_size);

  int64_t global_iter = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (int iter = 1; iter <= cfg.iters_per_epoch; ++iter) {
      ++global_iter;
      Rng rng(substream_seed(cfg.seed, "pretrain-iter",
                             static_cast<uint64_t>(global_iter)));
      const MatrixXd x0 = sample(cfg.data, cfg.batch_size, rng);
      const MatrixXd xN = sample(cfg.prior, cfg.batch_size, rng);
      for (int i = 0; i < cfg.batch_size; ++i) ks[i] = rng.uniform_int(0, N);

      const PretrainPair pairs = make_pretrain_pair(cfg.mode, abar, N, ks, x0, xN);
      const Tape tape = net.forward_tape(ks, pairs.x_k);
      const MseLoss loss = loss_mse(tape.output, pairs.target);
      if (!std::isfinite(loss.value)) {
        save_checkpoint((fs::path(run_dir) / "emergency.ckpt").string(), net,
                        cfg.seed,
                        {{"epoch", epoch},
                         {"iter", iter},
                         {"reason", "loss went non-finite"}});
        man.status = "failed";
        man.finished_at = iso8601_now();
        write_manifest(run_dir, man);
        throw NumericalError("pretraining loss went non-finite",
                             static_cast<int>(global_iter));
      }
      const GradBuffer grads = net.backward(tape, loss.grad);
      net.adam_step(grads, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);

      last_loss = loss.value;
      window_sum += loss.value;
      ++window_n;
      if (iter % cfg.eval_interval == 0 || iter == cfg.iters_per_epoch) {
        MetricRecord r;
        r.epoch = epoch;
        r.direction = Direction::Backward;
        r.iter = iter;
        r.loss = window_sum / double(window_n);
        r.wall_ms = ms_since(run_start);
        metrics.push_back(r);
        window_sum = 0.0;
        window_n = 0;
        write_metrics_csv(metrics_path, metrics);
      }
    }
  }

  PretrainResult out;
  out.ckpt_path = (fs::path(run_dir) / "pretrain.ckpt").string();
  save_checkpoint(out.ckpt_path, net, cfg.seed, {{"mode", to_string(cfg.mode)}});
  out.final_loss = last_loss;
  man.checkpoints = {"pretrain.ckpt"};
  man.status = "completed";
  man.finished_at = iso8601_now();
  write_manifest(run_dir, man);
  write_metrics_csv(metrics_path, metrics);
  return out;
}

}  // namespace bridgelab
