#include "bridgelab/objectives.hpp"

#include <cmath>
#include <sstream>

namespace bridgelab {

ParamMode mode_from_string(std::string_view s) {
  if (s == "dsb") return ParamMode::DsbOriginal;
  if (s == "s-dsb") return ParamMode::SDsb;
  if (s == "tr-dsb") return ParamMode::TrDsb;
  if (s == "fr-dsb") return ParamMode::FrDsb;
  if (s == "ddpm") return ParamMode::Ddpm;
  if (s == "fm") return ParamMode::Fm;
  if (s == "i2sb" || s == "bridge-tts")
    throw ConfigError("parameterization '" + std::string(s) +
                      "' is documented in the registry but out of scope");
  throw ConfigError("unknown parameterization: " + std::string(s));
}

std::string to_string(ParamMode m) {
  switch (m) {
    case ParamMode::DsbOriginal: return "dsb";
    case ParamMode::SDsb: return "s-dsb";
    case ParamMode::TrDsb: return "tr-dsb";
    case ParamMode::FrDsb: return "fr-dsb";
    case ParamMode::Ddpm: return "ddpm";
    case ParamMode::Fm: return "fm";
  }
  return "?";
}

Direction direction_from_string(std::string_view s) {
  if (s == "forward") return Direction::Forward;
  if (s == "backward") return Direction::Backward;
  throw ConfigError("unknown direction: " + std::string(s));
}

std::string to_string(Direction d) {
  return d == Direction::Forward ? "forward" : "backward";
}

InitStrategy init_from_string(std::string_view s) {
  if (s == "scratch") return InitStrategy::Scratch;
  if (s == "init-b") return InitStrategy::InitB;
  if (s == "init-both-same") return InitStrategy::InitBothSame;
  if (s == "init-both-separate") return InitStrategy::InitBothSeparate;
  throw ConfigError("unknown init strategy: " + std::string(s));
}

std::string to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::Scratch: return "scratch";
    case InitStrategy::InitB: return "init-b";
    case InitStrategy::InitBothSame: return "init-both-same";
    case InitStrategy::InitBothSeparate: return "init-both-separate";
  }
  return "?";
}

const std::vector<RegistryRow>& parameterization_registry() {
  static const std::vector<RegistryRow> rows = {
      {"dsb",
       "chain state: x_{k+1} = F_k(x_k) + sqrt(2 gamma_{k+1}) eps",
       "x_{k+1} + F_k(x_k) - F_k(x_{k+1})  (two frozen evaluation points)",
       true},
      {"s-dsb",
       "chain state: x_{k+1} = F_k(x_k) + sqrt(2 gamma_{k+1}) eps",
       "neighbouring chain state: x_k backward / x_{k+1} forward", true},
      {"tr-dsb",
       "chain state from the frozen transition kernel",
       "trajectory endpoint: x_0 backward / x_N forward", true},
      {"fr-dsb",
       "chain state from the frozen transition kernel",
       "(x_0 - x_{k+1}) / gbar_{k+1} backward, (x_N - x_k) / (1 - gbar_k) "
       "forward",
       true},
      {"ddpm",
       "x_k = sqrt(abar_k) x_0 + sqrt(1 - abar_k) x_N",
       "the noise draw x_N", true},
      {"fm",
       "x_k = (1 - k/N) x_0 + (k/N) x_N",
       "x_N - x_0", true},
      {"i2sb",
       "posterior-pinned interpolation between paired endpoints",
       "scaled displacement toward x_0", false},
      {"bridge-tts",
       "pinned-endpoint interpolation with schedule noise",
       "data endpoint x_0", false},
  };
  return rows;
}

const RegistryRow& registry_row(const std::string& name) {
  for (const auto& r : parameterization_registry())
    if (r.name == name) return r;
  throw ConfigError("no registry row named " + name);
}

AlphaBarTable AlphaBarTable::from_schedule(const GammaSchedule& sched,
                                           double terminal) {
  if (terminal <= 0.0 || terminal >= 1.0)
    throw ConfigError("terminal coefficient must lie in (0, 1)");
  AlphaBarTable t;
  t.terminal = terminal;
  const double c = -std::log(terminal) / (2.0 * sched.horizon());
  t.abar.resize(sched.n_steps + 1);
  for (int k = 0; k <= sched.n_steps; ++k)
    t.abar(k) = std::exp(-2.0 * c * sched.gbar(k));
  return t;
}

namespace {

std::vector<int> shifted(const std::vector<int>& ks, int delta) {
  std::vector<int> out(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) out[i] = ks[i] + delta;
  return out;
}

}  // namespace

MatrixXd target_dsb_original(const DriftNet& frozen, Direction train_dir,
                             const std::vector<int>& ks, const MatrixXd& x_lo,
                             const MatrixXd& x_hi, const MatrixXd& step_mean) {
  if (train_dir == Direction::Backward) {
    // step_mean caches frozen(k, x_lo) from the forward chain.
    return x_hi + step_mean - frozen.forward(ks, x_hi);
  }
  // step_mean caches frozen(k+1, x_hi) from the backward chain.
  return x_lo + step_mean - frozen.forward(shifted(ks, 1), x_lo);
}

MatrixXd target_dsb_original(const DriftNet& frozen, Direction train_dir,
                             const std::vector<int>& ks, const MatrixXd& x_lo,
                             const MatrixXd& x_hi) {
  if (train_dir == Direction::Backward)
    return x_hi + frozen.forward(ks, x_lo) - frozen.forward(ks, x_hi);
  auto ks1 = shifted(ks, 1);
  return x_lo + frozen.forward(ks1, x_hi) - frozen.forward(ks1, x_lo);
}

MatrixXd target_s_dsb(Direction train_dir, const MatrixXd& x_lo,
                      const MatrixXd& x_hi) {
  return train_dir == Direction::Backward ? x_lo : x_hi;
}

MatrixXd sgm_next_state_target(Direction train_dir, const MatrixXd& x_lo,
                               const MatrixXd& x_hi) {
  // A score model trained to predict the next chain state uses the very
  // same regression target as the simplified bridge objective.
  return train_dir == Direction::Backward ? x_lo : x_hi;
}

MatrixXd target_tr_dsb(Direction, const MatrixXd& endpoint) { return endpoint; }

MatrixXd target_fr_dsb(const GammaSchedule& sched, Direction train_dir,
                       const std::vector<int>& ks, const MatrixXd& x_lo,
                       const MatrixXd& x_hi, const MatrixXd& endpoint) {
  if (!sched.normalized)
    throw ConfigError("flow targets need a normalized schedule");
  MatrixXd y(x_lo.rows(), x_lo.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    int k = ks[static_cast<std::size_t>(i)];
    if (train_dir == Direction::Backward)
      y.row(i) = (endpoint.row(i) - x_hi.row(i)) / sched.gbar(k + 1);
    else
      y.row(i) = (endpoint.row(i) - x_lo.row(i)) / (1.0 - sched.gbar(k));
  }
  return y;
}

MatrixXd build_targets(ParamMode mode, Direction train_dir,
                       const GammaSchedule& sched, const DriftNet* frozen,
                       const std::vector<int>& ks, const MatrixXd& x_lo,
                       const MatrixXd& x_hi, const MatrixXd& endpoint,
                       const MatrixXd& step_mean) {
  switch (mode) {
    case ParamMode::DsbOriginal:
      if (frozen == nullptr)
        throw ConfigError("original targets need the frozen net");
      return target_dsb_original(*frozen, train_dir, ks, x_lo, x_hi, step_mean);
    case ParamMode::SDsb:
      return target_s_dsb(train_dir, x_lo, x_hi);
    case ParamMode::TrDsb:
      return target_tr_dsb(train_dir, endpoint);
    case ParamMode::FrDsb:
      return target_fr_dsb(sched, train_dir, ks, x_lo, x_hi, endpoint);
    case ParamMode::Ddpm:
    case ParamMode::Fm:
      throw ConfigError("pretraining modes have no bridge targets");
  }
  throw ConfigError("unhandled mode");
}

PretrainPair make_pretrain_pair(ParamMode mode, const AlphaBarTable& abar,
                                int n_steps, const std::vector<int>& ks,
                                const MatrixXd& x0, const MatrixXd& xN) {
  if (x0.rows() != xN.rows() ||
      static_cast<Eigen::Index>(ks.size()) != x0.rows())
    throw ConfigError("pretrain batch size mismatch");

  PretrainPair p;
  p.x_k.resize(x0.rows(), x0.cols());
  if (mode == ParamMode::Ddpm) {
    for (Eigen::Index i = 0; i < x0.rows(); ++i) {
      int k = ks[static_cast<std::size_t>(i)];
      if (k < 0 || k > n_steps) throw ConfigError("timestep out of range");
      double a = abar(k);
      p.x_k.row(i) = std::sqrt(a) * x0.row(i) + std::sqrt(1.0 - a) * xN.row(i);
    }
    p.target = xN;
    return p;
  }
  if (mode == ParamMode::Fm) {
    for (Eigen::Index i = 0; i < x0.rows(); ++i) {
      int k = ks[static_cast<std::size_t>(i)];
      if (k < 0 || k > n_steps) throw ConfigError("timestep out of range");
      double t = static_cast<double>(k) / n_steps;
      p.x_k.row(i) = (1.0 - t) * x0.row(i) + t * xN.row(i);
    }
    p.target = xN - x0;
    return p;
  }
  throw ConfigError("pretrain pairs exist for ddpm and fm only");
}

OutputMap adapter_output_map(ParamMode from_mode, ParamMode to_mode,
                             Direction role, const GammaSchedule& sched,
                             const AlphaBarTable& abar) {
  const int n = sched.n_steps;
  OutputMap m;
  m.scale_x = VectorXd::Zero(n + 1);
  m.scale_raw = VectorXd::Zero(n + 1);

  auto set = [&](int k, double sx, double sr) {
    m.scale_x(k) = sx;
    m.scale_raw(k) = sr;
  };

  if (from_mode == ParamMode::Ddpm) {
    auto sa = [&](int k) { return std::sqrt(abar(k)); };
    auto sb = [&](int k) { return std::sqrt(1.0 - abar(k)); };
    for (int k = 0; k <= n; ++k) {
      switch (to_mode) {
        case ParamMode::DsbOriginal:
        case ParamMode::SDsb: {
          int j = role == Direction::Forward ? k + 1 : k - 1;
          if (j < 0 || j > n) break;  // outside the net's query range
          double r = sa(j) / sa(k);
          set(k, r, sb(j) - r * sb(k));
          break;
        }
        case ParamMode::TrDsb: {
          if (role == Direction::Backward) {
            set(k, 1.0 / sa(k), -sb(k) / sa(k));
          } else {
            double r = sa(n) / sa(k);
            set(k, r, sb(n) - r * sb(k));
          }
          break;
        }
        case ParamMode::FrDsb: {
          if (role == Direction::Backward) {
            if (k == 0) break;
            double gb = sched.gbar(k);
            set(k, (1.0 / sa(k) - 1.0) / gb, -sb(k) / (sa(k) * gb));
          } else {
            if (k == n) break;
            double r = sa(n) / sa(k);
            double rem = 1.0 - sched.gbar(k);
            set(k, (r - 1.0) / rem, (sb(n) - r * sb(k)) / rem);
          }
          break;
        }
        default:
          throw ConfigError("adapters target bridge modes only");
      }
    }
    return m;
  }

  if (from_mode == ParamMode::Fm) {
    const double sign = role == Direction::Forward ? 1.0 : -1.0;
    for (int k = 0; k <= n; ++k) {
      switch (to_mode) {
        case ParamMode::DsbOriginal:
        case ParamMode::SDsb: {
          int j = role == Direction::Forward ? k + 1 : k;
          if (j < 1 || j > n) {
            set(k, 1.0, 0.0);
            break;
          }
          set(k, 1.0, sign * sched.g(j));
          break;
        }
        case ParamMode::TrDsb:
          set(k, 1.0, role == Direction::Forward ? 1.0 - sched.gbar(k)
                                                 : -sched.gbar(k));
          break;
        case ParamMode::FrDsb:
          set(k, 0.0, sign);
          break;
        default:
          throw ConfigError("adapters target bridge modes only");
      }
    }
    return m;
  }

  throw ConfigError("adapters convert from ddpm or fm pretraining only");
}

DriftNet convert_pretrained_to_bridge(const DriftNet& pretrained,
                                      ParamMode to_mode, Direction role,
                                      const GammaSchedule& sched) {
  if (!is_pretrain(pretrained.mode))
    throw ConfigError("source net was not pretrained with ddpm or fm");
  if (!is_bridge(to_mode))
    throw ConfigError("conversion target must be a bridge mode");
  if (pretrained.cfg.n_steps != sched.n_steps)
    throw ConfigError("pretrained net and schedule disagree on step count");

  auto abar = AlphaBarTable::from_schedule(sched);
  OutputMap adapter =
      adapter_output_map(pretrained.mode, to_mode, role, sched, abar);

  DriftNet out = pretrained;
  // Compose the adapter over the existing head: the adapter consumes the
  // net's current prediction a1*x + c1*raw.
  OutputMap composed;
  composed.scale_x = adapter.scale_x +
                     (adapter.scale_raw.array() * out.out_map.scale_x.array())
                         .matrix();
  composed.scale_raw =
      (adapter.scale_raw.array() * out.out_map.scale_raw.array()).matrix();
  out.out_map = composed;
  out.mode = to_mode;
  out.role = role;
  out.reset_adam();
  out.eval_count.store(0);
  return out;
}

std::string adapter_coefficient_table(const OutputMap& map) {
  std::ostringstream os;
  os << "k,scale_x,scale_raw\n";
  for (Eigen::Index k = 0; k < map.scale_x.size(); ++k)
    os << k << ',' << format_double(map.scale_x(k)) << ','
       << format_double(map.scale_raw(k)) << '\n';
  return os.str();
}

MseLoss loss_mse(const MatrixXd& pred, const MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ConfigError("loss shape mismatch");
  if (pred.rows() == 0) throw ConfigError("loss needs a non-empty batch");
  MseLoss l;
  MatrixXd diff = pred - target;
  const double n = static_cast<double>(pred.rows());
  l.value = diff.squaredNorm() / n;
  l.grad = (2.0 / n) * diff;
  return l;
}

}  // namespace bridgelab
