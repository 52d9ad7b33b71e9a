#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "bridgelab/datasets.hpp"
#include "bridgelab/modes.hpp"
#include "bridgelab/net.hpp"
#include "bridgelab/schedule.hpp"

namespace bridgelab {

struct ScheduleSpec {
  int n_steps = 16;
  double g_min = 1e-3;
  double g_max = 1e-2;
  ScheduleShape shape = ScheduleShape::LinearSymmetric;
  bool normalize = true;

  GammaSchedule build() const {
    return make_schedule(n_steps, g_min, g_max, shape, normalize);
  }
};

// One schema drives both pretraining (mode ddpm/fm) and bridge training.
struct TrainConfig {
  std::string run_name = "run";
  uint64_t seed = 0;
  // Terminal prediction by default: its posterior sampling stays sharp at
  // coarse step counts, where plain next-state kernels over-disperse.
  ParamMode mode = ParamMode::TrDsb;
  InitStrategy init = InitStrategy::Scratch;
  std::string init_backward_ckpt;
  std::string init_forward_ckpt;

  ScheduleSpec schedule;
  Dist2D data = make_checkerboard();
  Dist2D prior = make_pinwheel();

  std::vector<int> hidden = {128, 128};
  int time_embed_dim = 32;

  int epochs = 6;  // directional epochs: odd train backward, even forward
  int iters_per_epoch = 5000;
  int batch_size = 512;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  int cache_refresh = 50;      // iterations between cache pool regenerations
  int cache_pool_factor = 10;  // pool size = factor * batch_size
  bool exact_cache = false;    // regenerate every iteration (pool = batch)

  int eval_interval = 500;  // loss-logging cadence, iterations
  int eval_samples = 20000;

  double ema_decay = 0.0;         // 0 disables the shadow copy
  std::string lr_schedule = "none";  // "none" or "cosine"
  int plateau_patience = 0;       // 0 disables early epoch stop

  int workers = 1;

  NetConfig net_config() const;
  void validate() const;  // throws ConfigError on cross-field violations
};

// Built-in presets: "desk-2d" (the defaults above) and "paper-2d"
// (N=50, 32k iterations per epoch, 10 epochs).
std::vector<std::string> preset_names();
nlohmann::json preset_json(const std::string& name);

// Fills a TrainConfig from defaults (or a preset), then overlays the user
// JSON. Unknown keys are errors. Returns the config plus its fully resolved
// JSON form.
struct ResolvedConfig {
  TrainConfig config;
  nlohmann::json resolved;
};
ResolvedConfig resolve_config(const nlohmann::json& user,
                              const std::optional<std::string>& preset);

nlohmann::json config_to_json(const TrainConfig& c);

nlohmann::json dist_to_json(const Dist2D& d);
Dist2D dist_from_json(const nlohmann::json& j);

// Run manifest: config snapshot location, seeds, artifact paths, status.
struct RunManifest {
  std::string run_name;
  std::string command;
  std::string status = "running";  // running | completed | failed
  uint64_t seed = 0;
  std::string config_file = "resolved_config.json";
  std::string metrics_file = "metrics.csv";
  std::vector<std::string> checkpoints;
  std::string started_at;
  std::string finished_at;
};
void write_manifest(const std::string& run_dir, const RunManifest& m);
RunManifest read_manifest(const std::string& run_dir);

std::string iso8601_now();

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kRunDirEnv = "BRIDGELAB_RUN_DIR";

// Root directory for run outputs: --out flag if given, else $BRIDGELAB_RUN_DIR,
// else ./runs.
std::string resolve_run_root(const std::string& out_flag);

}  // namespace bridgelab
