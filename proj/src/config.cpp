#include "bridgelab/config.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>

namespace bridgelab {

using nlohmann::json;

NetConfig TrainConfig::net_config() const {
  NetConfig n;
  n.data_dim = 2;
  n.hidden = hidden;
  n.time_embed_dim = time_embed_dim;
  n.n_steps = schedule.n_steps;
  return n;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (iters_per_epoch < 0) throw ConfigError("iters_per_epoch must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (lr <= 0.0) throw ConfigError("lr must be positive");
  if (cache_refresh < 1) throw ConfigError("cache_refresh must be >= 1");
  if (cache_pool_factor < 1) throw ConfigError("cache_pool_factor must be >= 1");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  if (eval_samples < 1) throw ConfigError("eval_samples must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (ema_decay < 0.0 || ema_decay >= 1.0)
    throw ConfigError("ema_decay must lie in [0, 1)");
  if (lr_schedule != "none" && lr_schedule != "cosine")
    throw ConfigError("lr_schedule must be 'none' or 'cosine'");

  schedule.build();  // validates the schedule fields

  if (is_reparam(mode) && !schedule.normalize)
    throw ConfigError(to_string(mode) +
                      " needs a normalized schedule (schedule.normalize=true)");
  if (mode == ParamMode::Ddpm && !is_standard_gaussian(prior))
    throw ConfigError("ddpm pretraining needs a standard gaussian prior");
  if (is_pretrain(mode) && init != InitStrategy::Scratch)
    throw ConfigError("pretraining always starts from scratch");

  if (init == InitStrategy::InitB || init == InitStrategy::InitBothSame) {
    if (init_backward_ckpt.empty())
      throw ConfigError(to_string(init) + " needs init_backward_ckpt");
  }
  if (init == InitStrategy::InitBothSeparate) {
    if (init_backward_ckpt.empty() || init_forward_ckpt.empty())
      throw ConfigError(
          "init-both-separate needs init_backward_ckpt and init_forward_ckpt");
  }
}

json dist_to_json(const Dist2D& d) {
  json j;
  j["kind"] = to_string(d.kind);
  switch (d.kind) {
    case DistKind::Checkerboard:
      j["scale"] = d.scale;
      j["standardize"] = d.standardize;
      break;
    case DistKind::Pinwheel:
      j["scale"] = d.scale;
      j["standardize"] = d.standardize;
      j["blades"] = d.blades;
      j["radial_std"] = d.radial_std;
      j["tangential_std"] = d.tangential_std;
      j["warp"] = d.warp;
      break;
    case DistKind::Gaussian:
      j["mean"] = {d.mean.x(), d.mean.y()};
      j["sigma"] = {d.sigma.x(), d.sigma.y()};
      break;
    case DistKind::GaussianMixture: {
      json comps = json::array();
      for (const auto& c : d.components)
        comps.push_back({{"weight", c.weight},
                         {"mean", {c.mean.x(), c.mean.y()}},
                         {"sigma", c.sigma}});
      j["components"] = comps;
      break;
    }
    case DistKind::Moons:
      j["scale"] = d.scale;
      j["standardize"] = d.standardize;
      j["noise"] = d.noise;
      break;
  }
  return j;
}

namespace {

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const auto& a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

Vec2 vec2_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError(where + " must be a 2-element array");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

}  // namespace

Dist2D dist_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("distribution spec needs a 'kind'");
  Dist2D d;
  d.kind = dist_kind_from_string(j.at("kind").get<std::string>());
  switch (d.kind) {
    case DistKind::Checkerboard:
      check_keys(j, {"kind", "scale", "standardize"}, "checkerboard");
      d = make_checkerboard(j.value("scale", 4.0), j.value("standardize", true));
      break;
    case DistKind::Pinwheel:
      check_keys(j,
                 {"kind", "scale", "standardize", "blades", "radial_std",
                  "tangential_std", "warp"},
                 "pinwheel");
      d = make_pinwheel(j.value("scale", 1.0), j.value("standardize", true));
      d.blades = j.value("blades", 5);
      d.radial_std = j.value("radial_std", 0.3);
      d.tangential_std = j.value("tangential_std", 0.1);
      d.warp = j.value("warp", 0.25);
      if (d.blades < 1) throw ConfigError("pinwheel needs at least one blade");
      break;
    case DistKind::Gaussian: {
      check_keys(j, {"kind", "mean", "sigma"}, "gaussian");
      Vec2 mean = j.contains("mean") ? vec2_from(j["mean"], "mean") : Vec2::Zero();
      Vec2 sigma = j.contains("sigma") ? vec2_from(j["sigma"], "sigma") : Vec2::Ones();
      if (sigma.x() <= 0.0 || sigma.y() <= 0.0)
        throw ConfigError("gaussian sigma must be positive");
      d = make_gaussian(mean, sigma);
      break;
    }
    case DistKind::GaussianMixture: {
      check_keys(j, {"kind", "components"}, "gaussian-mixture");
      std::vector<MixtureComponent> comps;
      for (const auto& cj : j.at("components")) {
        check_keys(cj, {"weight", "mean", "sigma"}, "mixture component");
        MixtureComponent c;
        c.weight = cj.value("weight", 1.0);
        c.mean = vec2_from(cj.at("mean"), "component mean");
        c.sigma = cj.value("sigma", 1.0);
        comps.push_back(c);
      }
      d = make_gaussian_mixture(comps);
      break;
    }
    case DistKind::Moons:
      check_keys(j, {"kind", "scale", "standardize", "noise"}, "moons");
      d = make_moons(j.value("scale", 1.0), j.value("noise", 0.05),
                     j.value("standardize", true));
      break;
  }
  return d;
}

json config_to_json(const TrainConfig& c) {
  json j;
  j["run_name"] = c.run_name;
  j["seed"] = c.seed;
  j["mode"] = to_string(c.mode);
  j["init"] = to_string(c.init);
  j["init_backward_ckpt"] = c.init_backward_ckpt;
  j["init_forward_ckpt"] = c.init_forward_ckpt;
  j["schedule"] = {{"N", c.schedule.n_steps},
                   {"g_min", c.schedule.g_min},
                   {"g_max", c.schedule.g_max},
                   {"shape", to_string(c.schedule.shape)},
                   {"normalize", c.schedule.normalize}};
  j["data"] = dist_to_json(c.data);
  j["prior"] = dist_to_json(c.prior);
  j["net"] = {{"hidden", c.hidden}, {"time_embed_dim", c.time_embed_dim}};
  j["train"] = {{"epochs", c.epochs},
                {"iters_per_epoch", c.iters_per_epoch},
                {"batch_size", c.batch_size},
                {"lr", c.lr},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"adam_eps", c.adam_eps},
                {"cache_refresh", c.cache_refresh},
                {"cache_pool_factor", c.cache_pool_factor},
                {"exact_cache", c.exact_cache},
                {"eval_interval", c.eval_interval},
                {"eval_samples", c.eval_samples},
                {"ema_decay", c.ema_decay},
                {"lr_schedule", c.lr_schedule},
                {"plateau_patience", c.plateau_patience}};
  j["workers"] = c.workers;
  return j;
}

std::vector<std::string> preset_names() { return {"desk-2d", "paper-2d"}; }

json preset_json(const std::string& name) {
  if (name == "desk-2d") {
    // The built-in defaults: checkerboard <-> pinwheel at desk scale.
    return config_to_json(TrainConfig{});
  }
  if (name == "paper-2d") {
    TrainConfig c;
    c.run_name = "paper-2d";
    c.schedule.n_steps = 50;
    c.epochs = 10;
    c.iters_per_epoch = 32000;
    return config_to_json(c);
  }
  throw ConfigError("unknown preset: " + name + " (have: desk-2d, paper-2d)");
}

ResolvedConfig resolve_config(const json& user,
                              const std::optional<std::string>& preset) {
  json base = preset ? preset_json(*preset) : config_to_json(TrainConfig{});
  json merged = base;
  // Deep merge: user values win; nested objects merge key-by-key.
  merged.merge_patch(user);
  // Exception: a distribution spec that names its kind stands alone. Merging
  // it into the default would leave stale keys of the old kind behind.
  for (const char* slot : {"data", "prior"}) {
    if (user.is_object() && user.contains(slot) && user.at(slot).is_object() &&
        user.at(slot).contains("kind"))
      merged[slot] = user.at(slot);
  }

  check_keys(merged,
             {"run_name", "seed", "mode", "init", "init_backward_ckpt",
              "init_forward_ckpt", "schedule", "data", "prior", "net", "train",
              "workers"},
             "config");

  TrainConfig c;
  try {
    c.run_name = merged.at("run_name").get<std::string>();
    c.seed = merged.at("seed").get<uint64_t>();
    c.mode = mode_from_string(merged.at("mode").get<std::string>());
    c.init = init_from_string(merged.at("init").get<std::string>());
    c.init_backward_ckpt = merged.at("init_backward_ckpt").get<std::string>();
    c.init_forward_ckpt = merged.at("init_forward_ckpt").get<std::string>();

    const auto& s = merged.at("schedule");
    check_keys(s, {"N", "g_min", "g_max", "shape", "normalize"}, "schedule");
    c.schedule.n_steps = s.at("N").get<int>();
    c.schedule.g_min = s.at("g_min").get<double>();
    c.schedule.g_max = s.at("g_max").get<double>();
    c.schedule.shape = shape_from_string(s.at("shape").get<std::string>());
    c.schedule.normalize = s.at("normalize").get<bool>();

    c.data = dist_from_json(merged.at("data"));
    c.prior = dist_from_json(merged.at("prior"));

    const auto& n = merged.at("net");
    check_keys(n, {"hidden", "time_embed_dim"}, "net");
    c.hidden = n.at("hidden").get<std::vector<int>>();
    c.time_embed_dim = n.at("time_embed_dim").get<int>();

    const auto& t = merged.at("train");
    check_keys(t,
               {"epochs", "iters_per_epoch", "batch_size", "lr", "beta1",
                "beta2", "adam_eps", "cache_refresh", "cache_pool_factor",
                "exact_cache", "eval_interval", "eval_samples", "ema_decay",
                "lr_schedule", "plateau_patience"},
               "train");
    c.epochs = t.at("epochs").get<int>();
    c.iters_per_epoch = t.at("iters_per_epoch").get<int>();
    c.batch_size = t.at("batch_size").get<int>();
    c.lr = t.at("lr").get<double>();
    c.beta1 = t.at("beta1").get<double>();
    c.beta2 = t.at("beta2").get<double>();
    c.adam_eps = t.at("adam_eps").get<double>();
    c.cache_refresh = t.at("cache_refresh").get<int>();
    c.cache_pool_factor = t.at("cache_pool_factor").get<int>();
    c.exact_cache = t.at("exact_cache").get<bool>();
    c.eval_interval = t.at("eval_interval").get<int>();
    c.eval_samples = t.at("eval_samples").get<int>();
    c.ema_decay = t.at("ema_decay").get<double>();
    c.lr_schedule = t.at("lr_schedule").get<std::string>();
    c.plateau_patience = t.at("plateau_patience").get<int>();

    c.workers = merged.at("workers").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }

  c.validate();
  return {c, config_to_json(c)};
}

std::string iso8601_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::string& run_dir, const RunManifest& m) {
  json j;
  j["version"] = kVersion;
  j["run_name"] = m.run_name;
  j["command"] = m.command;
  j["status"] = m.status;
  j["seed"] = m.seed;
  j["config_file"] = m.config_file;
  j["metrics_file"] = m.metrics_file;
  j["checkpoints"] = m.checkpoints;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  write_file_atomic((std::filesystem::path(run_dir) / "manifest.json").string(),
                    j.dump(2) + "\n");
}

RunManifest read_manifest(const std::string& run_dir) {
  json j = json::parse(
      read_file((std::filesystem::path(run_dir) / "manifest.json").string()));
  RunManifest m;
  m.run_name = j.value("run_name", "");
  m.command = j.value("command", "");
  m.status = j.value("status", "");
  m.seed = j.value("seed", uint64_t{0});
  m.config_file = j.value("config_file", "resolved_config.json");
  m.metrics_file = j.value("metrics_file", "metrics.csv");
  m.checkpoints = j.value("checkpoints", std::vector<std::string>{});
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  return m;
}

std::string resolve_run_root(const std::string& out_flag) {
  if (!out_flag.empty()) return out_flag;
  if (const char* env = std::getenv(kRunDirEnv); env && *env) return env;
  return "runs";
}

}  // namespace bridgelab
