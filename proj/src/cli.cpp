#include "bridgelab/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "bridgelab/bridge.hpp"
#include "bridgelab/checkpoint.hpp"
#include "bridgelab/config.hpp"
#include "bridgelab/eval.hpp"
#include "bridgelab/metrics.hpp"
#include "bridgelab/plot.hpp"
#include "bridgelab/trainer.hpp"

namespace bridgelab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Shared config resolution: file and/or preset, then flag overrides.
struct ConfigFlags {
  std::string config_path;
  std::string preset;
  uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  bool workers_set = false;
};

TrainConfig resolve_from_flags(const ConfigFlags& f) {
  json user = json::object();
  if (!f.config_path.empty()) user = read_json_file(f.config_path);
  std::optional<std::string> preset;
  if (!f.preset.empty()) preset = f.preset;
  TrainConfig cfg = resolve_config(user, preset).config;
  if (f.seed_set) cfg.seed = f.seed;
  if (f.workers_set) cfg.workers = f.workers;
  cfg.validate();
  return cfg;
}

void add_config_flags(CLI::App* sub, ConfigFlags& f) {
  sub->add_option("--config", f.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  sub->add_option("--preset", f.preset, "named preset (desk-2d, paper-2d)");
  sub->add_option("--seed", f.seed, "master seed override")
      ->each([&f](const std::string&) { f.seed_set = true; });
  sub->add_option("--workers", f.workers,
                  "threads for trajectory cache generation")
      ->check(CLI::PositiveNumber)
      ->each([&f](const std::string&) { f.workers_set = true; });
}

std::string trim_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream is(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(trim_cr(line));
  return lines;
}

PointBatch read_xy_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ConfigError(path + ": empty file");
  const bool trajectory = lines[0] == "path_id,k,x,y";
  if (!trajectory && lines[0] != "x,y")
    throw ConfigError(path + ": expected header 'x,y' or 'path_id,k,x,y'");
  PointBatch pts(static_cast<Eigen::Index>(lines.size()) - 1, 2);
  Eigen::Index n = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::vector<std::string> cells = split_csv_line(lines[i]);
    const std::size_t want = trajectory ? 4 : 2;
    if (cells.size() != want)
      throw ConfigError(path + ": bad row '" + lines[i] + "'");
    pts(n, 0) = parse_double(cells[want - 2]);
    pts(n, 1) = parse_double(cells[want - 1]);
    ++n;
  }
  pts.conservativeResize(n, 2);
  return pts;
}

Dist2D named_reference(const std::string& name) {
  if (name == "checkerboard") return make_checkerboard();
  if (name == "pinwheel") return make_pinwheel();
  if (name == "gaussian") return standard_gaussian();
  if (name == "moons") return make_moons();
  if (name == "gaussian-mixture") {
    // Eight equal isotropic components on a radius-2 ring.
    std::vector<MixtureComponent> comps;
    for (int i = 0; i < 8; ++i) {
      const double th = 2.0 * M_PI * i / 8.0;
      comps.push_back({0.125, Vec2(2.0 * std::cos(th), 2.0 * std::sin(th)), 0.2});
    }
    return make_gaussian_mixture(comps);
  }
  if (!name.empty() && name.front() == '{') return dist_from_json(json::parse(name));
  throw ConfigError("unknown reference '" + name +
                    "': expected a CSV file, a dataset name or a JSON spec");
}

TrainConfig config_for_checkpoint(const ConfigFlags& flags,
                                  const std::string& ckpt_path) {
  if (!flags.config_path.empty() || !flags.preset.empty())
    return resolve_from_flags(flags);
  const fs::path sibling = fs::path(ckpt_path).parent_path() / "resolved_config.json";
  if (fs::exists(sibling)) {
    ConfigFlags f = flags;
    f.config_path = sibling.string();
    return resolve_from_flags(f);
  }
  throw ConfigError(
      "no config for sampling: pass --config/--preset or keep "
      "resolved_config.json next to the checkpoint");
}

int cmd_sample(const ConfigFlags& flags, const std::string& ckpt_path,
               const std::string& out_csv, int n, const std::string& direction,
               bool trajectories, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = config_for_checkpoint(flags, ckpt_path);
  const GammaSchedule sched = cfg.schedule.build();
  const LoadedCheckpoint lc = load_checkpoint(ckpt_path);
  const DriftNet& net = lc.net;
  if (net.cfg.n_steps != sched.n_steps)
    throw ConfigError("checkpoint was trained with a different step count (" +
                      std::to_string(net.cfg.n_steps) + " vs " +
                      std::to_string(sched.n_steps) + ")");

  const Direction dir =
      direction.empty() ? net.role : direction_from_string(direction);
  const Dist2D& start = (dir == Direction::Forward) ? cfg.data : cfg.prior;
  const Dist2D& target = (dir == Direction::Forward) ? cfg.prior : cfg.data;
  const uint64_t seed = flags.seed_set ? flags.seed : cfg.seed;

  std::string csv;
  PointBatch endpoints(0, 2);
  if (trajectories) {
    csv = "path_id,k,x,y\n";
    if (n > 0) {
      const TrajectoryBatch batch = cache_trajectories(
          net, net.mode, dir, sched, start, n,
          substream_seed(seed, "cli-sample"), cfg.workers);
      const int endpoint_idx = (dir == Direction::Forward) ? sched.n_steps : 0;
      endpoints.resize(n, 2);
      for (int p = 0; p < n; ++p) {
        for (int k = 0; k <= sched.n_steps; ++k)
          csv += std::to_string(p) + "," + std::to_string(k) + "," +
                 format_double(batch.states[k](p, 0)) + "," +
                 format_double(batch.states[k](p, 1)) + "\n";
        endpoints.row(p) = batch.states[endpoint_idx].row(p);
      }
    }
  } else {
    csv = "x,y\n";
    if (n > 0) {
      endpoints = sample_generation(net, net.mode, dir, sched, start, n,
                                    substream_seed(seed, "cli-sample"),
                                    cfg.workers);
      for (Eigen::Index i = 0; i < endpoints.rows(); ++i)
        csv += format_double(endpoints(i, 0)) + "," +
               format_double(endpoints(i, 1)) + "\n";
    }
  }

  if (out_csv == "-")
    out << csv;
  else
    write_file_atomic(out_csv, csv);

  if (n > 0) {
    Rng ref_rng(substream_seed(seed, "cli-sample-ref"));
    const PointBatch ref = sample(target, n, ref_rng);
    const double kl =
        histogram_kl(endpoints, ref, 64, HistBounds::for_dist(target));
    err << "kl=" << num(kl) << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& samples_path, const std::string& reference,
             uint64_t seed, std::ostream& out) {
  const PointBatch samples = read_xy_csv(samples_path);

  PointBatch ref;
  HistBounds bounds;
  std::string ref_kind;
  if (fs::exists(reference)) {
    ref = read_xy_csv(reference);
    double half = 1e-6;
    for (Eigen::Index i = 0; i < ref.rows(); ++i)
      half = std::max({half, std::abs(ref(i, 0)), std::abs(ref(i, 1))});
    bounds = HistBounds::square(1.5 * half);
    ref_kind = "csv";
  } else {
    const Dist2D dist = named_reference(reference);
    Rng rng(substream_seed(seed, "eval-ref"));
    const Eigen::Index n_ref = std::max<Eigen::Index>(samples.rows(), 10000);
    ref = sample(dist, static_cast<int>(n_ref), rng);
    bounds = HistBounds::for_dist(dist);
    ref_kind = to_string(dist.kind);
  }

  const double kl = histogram_kl(samples, ref, 64, bounds);
  Rng sw2_rng(substream_seed(seed, "eval-sw2"));
  const double sw2 = sliced_w2_sq(samples, ref, 64, sw2_rng);

  json report;
  report["kl"] = kl;
  report["sliced_w2_sq"] = sw2;
  report["n_samples"] = samples.rows();
  report["n_reference"] = ref.rows();
  report["bins"] = 64;
  report["bounds"] = {{"x_min", bounds.x_min},
                      {"x_max", bounds.x_max},
                      {"y_min", bounds.y_min},
                      {"y_max", bounds.y_max}};
  report["reference"] = ref_kind;
  out << report.dump() << "\n";
  return 0;
}

std::string run_label(const std::string& path) {
  const fs::path p(path);
  if (p.filename() == "metrics.csv" && p.has_parent_path() &&
      !p.parent_path().filename().empty())
    return p.parent_path().filename().string();
  return p.stem().string();
}

int cmd_plot(const std::vector<std::string>& inputs, const std::string& out_png) {
  enum class Schema { Scatter, Metrics };
  std::vector<Schema> schemas;
  for (const std::string& path : inputs) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw ConfigError(path + ": empty file");
    if (lines[0] == "x,y" || lines[0] == "path_id,k,x,y")
      schemas.push_back(Schema::Scatter);
    else if (lines[0] == metrics_csv_header())
      schemas.push_back(Schema::Metrics);
    else
      throw ConfigError(path + ": unrecognized schema '" + lines[0] + "'");
  }
  for (Schema s : schemas)
    if (s != schemas[0])
      throw ConfigError("cannot mix sample and metrics inputs in one plot");

  Image img(1, 1);
  if (schemas[0] == Schema::Scatter) {
    std::vector<PointBatch> clouds;
    ScatterSpec spec;
    for (const std::string& path : inputs) {
      clouds.push_back(read_xy_csv(path));
      spec.labels.push_back(run_label(path));
    }
    if (inputs.size() == 1) spec.labels.clear();
    spec.title = inputs.size() == 1 ? run_label(inputs[0]) : "samples";
    img = render_scatter(clouds, spec);
  } else {
    std::vector<Curve> curves;
    bool any_kl = false;
    for (const std::string& path : inputs) {
      const std::vector<MetricRecord> rows = read_metrics_csv(path);
      for (const MetricRecord& r : rows) any_kl |= std::isfinite(r.kl_data);
    }
    for (const std::string& path : inputs) {
      const std::vector<MetricRecord> rows = read_metrics_csv(path);
      Curve c;
      c.label = run_label(path);
      double offset = 0.0, epoch_end = 0.0;
      int prev_epoch = std::numeric_limits<int>::min();
      for (const MetricRecord& r : rows) {
        if (r.epoch != prev_epoch && prev_epoch != std::numeric_limits<int>::min())
          offset += epoch_end;
        prev_epoch = r.epoch;
        epoch_end = static_cast<double>(r.iter);
        const double y = any_kl ? r.kl_data : r.loss;
        if (!std::isfinite(y)) continue;
        c.xs.push_back(offset + static_cast<double>(r.iter));
        c.ys.push_back(y);
      }
      curves.push_back(std::move(c));
    }
    CurveSpec spec;
    spec.title = "training curves";
    spec.x_label = "iteration";
    spec.y_label = any_kl ? "kl" : "loss";
    img = render_curves(curves, spec);
  }
  write_png(out_png, img);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"desk-scale laboratory for diffusion bridges between 2D distributions"};
  app.require_subcommand(1);

  // pretrain / train
  ConfigFlags train_flags, pretrain_flags;
  std::string train_out, pretrain_out;
  bool train_resume = false, train_dry = false, pretrain_dry = false;

  CLI::App* p_pre = app.add_subcommand(
      "pretrain", "train a ddpm/fm terminal-pair model");
  add_config_flags(p_pre, pretrain_flags);
  p_pre->add_option("--out", pretrain_out, "output root (default ./runs)");
  p_pre->add_flag("--dry-run", pretrain_dry,
                  "print the resolved config and exit");

  CLI::App* p_train = app.add_subcommand(
      "train", "alternate backward/forward bridge training");
  add_config_flags(p_train, train_flags);
  p_train->add_option("--out", train_out, "output root (default ./runs)");
  p_train->add_flag("--resume", train_resume,
                    "continue after the last completed epoch");
  p_train->add_flag("--dry-run", train_dry,
                    "print the resolved config and exit");

  // sample
  ConfigFlags sample_flags;
  std::string sample_ckpt, sample_out_csv, sample_direction;
  int sample_n = 10000;
  bool sample_traj = false;
  CLI::App* p_sample =
      app.add_subcommand("sample", "generate endpoint samples or trajectories");
  p_sample->add_option("checkpoint", sample_ckpt, "checkpoint to sample from")
      ->required()
      ->check(CLI::ExistingFile);
  p_sample->add_option("out_csv", sample_out_csv, "output CSV path ('-' = stdout)")
      ->required();
  add_config_flags(p_sample, sample_flags);
  p_sample->add_option("--n", sample_n, "number of paths")
      ->check(CLI::NonNegativeNumber);
  p_sample->add_option("--direction", sample_direction,
                       "forward or backward (default: the checkpoint's role)");
  p_sample->add_flag("--trajectories", sample_traj,
                     "emit full paths (path_id,k,x,y) instead of endpoints");

  // eval
  std::string eval_samples, eval_reference;
  uint64_t eval_seed = 0;
  CLI::App* p_eval = app.add_subcommand(
      "eval", "histogram KL and sliced Wasserstein report (JSON on stdout)");
  p_eval->add_option("samples", eval_samples, "samples CSV")
      ->required()
      ->check(CLI::ExistingFile);
  p_eval
      ->add_option("reference", eval_reference,
                   "reference: CSV file, dataset name or JSON spec")
      ->required();
  p_eval->add_option("--seed", eval_seed, "seed for reference draws");

  // plot
  std::vector<std::string> plot_paths;
  CLI::App* p_plot = app.add_subcommand(
      "plot", "render samples or metrics CSVs to a PNG");
  p_plot
      ->add_option("paths", plot_paths,
                   "input CSVs followed by the output PNG path")
      ->required()
      ->expected(-2);

  std::vector<const char*> argv;
  argv.push_back("bridgelab");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand(p_pre)) {
      const TrainConfig cfg = resolve_from_flags(pretrain_flags);
      if (pretrain_dry) {
        out << config_to_json(cfg).dump(2) << "\n";
        return 0;
      }
      const std::string run_dir =
          (fs::path(resolve_run_root(pretrain_out)) / cfg.run_name).string();
      const PretrainResult r = pretrain(cfg, run_dir);
      out << "pretrain complete: " << r.ckpt_path
          << " final_loss=" << num(r.final_loss) << "\n";
      return 0;
    }
    if (app.got_subcommand(p_train)) {
      const TrainConfig cfg = resolve_from_flags(train_flags);
      if (train_dry) {
        out << config_to_json(cfg).dump(2) << "\n";
        return 0;
      }
      const std::string run_dir =
          (fs::path(resolve_run_root(train_out)) / cfg.run_name).string();
      const IpfResult r =
          run_ipf(cfg, run_dir, train_resume, [&](const MetricRecord& m) {
            out << "epoch " << m.epoch << " " << to_string(m.direction)
                << " loss=" << num(m.loss) << " kl_data=" << num(m.kl_data)
                << " kl_prior=" << num(m.kl_prior) << "\n";
          });
      out << "train complete: " << r.epochs_run << " epochs in " << run_dir
          << "\n";
      return 0;
    }
    if (app.got_subcommand(p_sample))
      return cmd_sample(sample_flags, sample_ckpt, sample_out_csv, sample_n,
                        sample_direction, sample_traj, out, err);
    if (app.got_subcommand(p_eval))
      return cmd_eval(eval_samples, eval_reference, eval_seed, out);
    if (app.got_subcommand(p_plot)) {
      const std::string out_png = plot_paths.back();
      plot_paths.pop_back();
      return cmd_plot(plot_paths, out_png);
    }
    err << "error: no subcommand given\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace bridgelab
