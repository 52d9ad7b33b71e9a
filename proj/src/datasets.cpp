#include "bridgelab/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bridgelab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Moons construction constants: two unit half-circles offset by (1, 0.5),
// centred and scaled to approximately unit per-coordinate variance.
const Vec2 kMoonsMean{0.5, 0.25};
constexpr double kMoonsStd = 0.705;

double checkerboard_std(double s) { return s / std::sqrt(3.0); }

double pinwheel_std(const Dist2D& d) {
  // Mean squared radius of the blade construction, split across two coords.
  double ms = 1.0 + d.radial_std * d.radial_std +
              d.tangential_std * d.tangential_std;
  return std::sqrt(ms / 2.0);
}

}  // namespace

DistKind dist_kind_from_string(std::string_view s) {
  if (s == "checkerboard") return DistKind::Checkerboard;
  if (s == "pinwheel") return DistKind::Pinwheel;
  if (s == "gaussian") return DistKind::Gaussian;
  if (s == "gaussian-mixture") return DistKind::GaussianMixture;
  if (s == "moons") return DistKind::Moons;
  throw ConfigError("unknown dataset kind: " + std::string(s));
}

std::string to_string(DistKind k) {
  switch (k) {
    case DistKind::Checkerboard: return "checkerboard";
    case DistKind::Pinwheel: return "pinwheel";
    case DistKind::Gaussian: return "gaussian";
    case DistKind::GaussianMixture: return "gaussian-mixture";
    case DistKind::Moons: return "moons";
  }
  return "?";
}

Dist2D make_checkerboard(double scale, bool standardize) {
  Dist2D d;
  d.kind = DistKind::Checkerboard;
  d.scale = scale;
  d.standardize = standardize;
  return d;
}

Dist2D make_pinwheel(double scale, bool standardize) {
  Dist2D d;
  d.kind = DistKind::Pinwheel;
  d.scale = scale;
  d.standardize = standardize;
  return d;
}

Dist2D make_gaussian(const Vec2& mean, const Vec2& sigma) {
  Dist2D d;
  d.kind = DistKind::Gaussian;
  d.mean = mean;
  d.sigma = sigma;
  d.standardize = false;
  return d;
}

Dist2D make_gaussian_mixture(const std::vector<MixtureComponent>& comps) {
  Dist2D d;
  d.kind = DistKind::GaussianMixture;
  d.components = comps;
  d.standardize = false;
  if (comps.empty()) throw ConfigError("mixture needs at least one component");
  for (const auto& c : comps) {
    if (c.weight <= 0.0) throw ConfigError("mixture weights must be positive");
    if (c.sigma <= 0.0) throw ConfigError("mixture sigmas must be positive");
  }
  return d;
}

Dist2D make_moons(double scale, double noise, bool standardize) {
  Dist2D d;
  d.kind = DistKind::Moons;
  d.scale = scale;
  d.noise = noise;
  d.standardize = standardize;
  return d;
}

Dist2D standard_gaussian() { return make_gaussian(Vec2::Zero(), Vec2::Ones()); }

namespace {

int checkerboard_cells(const Dist2D& d) {
  double s = d.scale;
  if (s < 1.0 || s != std::floor(s))
    throw ConfigError("checkerboard scale must be a positive integer");
  return static_cast<int>(s);
}

Vec2 sample_one(const Dist2D& d, Rng& rng) {
  switch (d.kind) {
    case DistKind::Checkerboard: {
      int s = checkerboard_cells(d);
      // Unit cells with even floor-coordinate parity inside [-s, s]^2.
      int i = rng.uniform_int(-s, s - 1);
      int u = rng.uniform_int(0, s - 1);
      int j = -s + 2 * u + (((i + s) % 2 == 0) ? 0 : 1);
      Vec2 p(i + rng.uniform(), j + rng.uniform());
      if (d.standardize) p /= checkerboard_std(s);
      return p;
    }
    case DistKind::Pinwheel: {
      int blade = rng.uniform_int(0, d.blades - 1);
      double r = 1.0 + d.radial_std * rng.normal();
      double t = d.tangential_std * rng.normal();
      double a = blade * kTwoPi / d.blades + d.warp * std::exp(r);
      double c = std::cos(a), s = std::sin(a);
      Vec2 p(c * r - s * t, s * r + c * t);
      if (d.standardize) p /= pinwheel_std(d);
      return p * d.scale;
    }
    case DistKind::Gaussian: {
      return Vec2(d.mean.x() + d.sigma.x() * rng.normal(),
                  d.mean.y() + d.sigma.y() * rng.normal());
    }
    case DistKind::GaussianMixture: {
      double total = 0.0;
      for (const auto& c : d.components) total += c.weight;
      double u = rng.uniform() * total;
      std::size_t pick = d.components.size() - 1;
      double acc = 0.0;
      for (std::size_t i = 0; i < d.components.size(); ++i) {
        acc += d.components[i].weight;
        if (u < acc) {
          pick = i;
          break;
        }
      }
      const auto& c = d.components[pick];
      return Vec2(c.mean.x() + c.sigma * rng.normal(),
                  c.mean.y() + c.sigma * rng.normal());
    }
    case DistKind::Moons: {
      bool outer = rng.uniform() < 0.5;
      double t = rng.uniform() * std::numbers::pi;
      Vec2 p = outer ? Vec2(std::cos(t), std::sin(t))
                     : Vec2(1.0 - std::cos(t), 0.5 - std::sin(t));
      p.x() += d.noise * rng.normal();
      p.y() += d.noise * rng.normal();
      if (d.standardize) p = (p - kMoonsMean) / kMoonsStd;
      return p * d.scale;
    }
  }
  throw ConfigError("unhandled dataset kind");
}

}  // namespace

PointBatch sample(const Dist2D& d, int n, Rng& rng) {
  if (n < 0) throw ConfigError("sample count must be non-negative");
  PointBatch out(n, 2);
  for (int i = 0; i < n; ++i) out.row(i) = sample_one(d, rng).transpose();
  return out;
}

bool has_log_density(const Dist2D& d) {
  return d.kind == DistKind::Gaussian || d.kind == DistKind::GaussianMixture;
}

double log_density_reference(const Dist2D& d, const Vec2& x) {
  constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)
  switch (d.kind) {
    case DistKind::Gaussian: {
      double zx = (x.x() - d.mean.x()) / d.sigma.x();
      double zy = (x.y() - d.mean.y()) / d.sigma.y();
      return -0.5 * (zx * zx + zy * zy) - std::log(d.sigma.x()) -
             std::log(d.sigma.y()) - kLog2Pi;
    }
    case DistKind::GaussianMixture: {
      double total = 0.0;
      for (const auto& c : d.components) total += c.weight;
      double best = -std::numeric_limits<double>::infinity();
      std::vector<double> logs(d.components.size());
      for (std::size_t i = 0; i < d.components.size(); ++i) {
        const auto& c = d.components[i];
        double zx = (x.x() - c.mean.x()) / c.sigma;
        double zy = (x.y() - c.mean.y()) / c.sigma;
        logs[i] = std::log(c.weight / total) -
                  0.5 * (zx * zx + zy * zy) - 2.0 * std::log(c.sigma) -
                  kLog2Pi;
        best = std::max(best, logs[i]);
      }
      double acc = 0.0;
      for (double v : logs) acc += std::exp(v - best);
      return best + std::log(acc);
    }
    default:
      throw ConfigError("log density available for gaussian kinds only");
  }
}

bool in_support(const Dist2D& d, const Vec2& x) {
  if (!std::isfinite(x.x()) || !std::isfinite(x.y())) return false;
  switch (d.kind) {
    case DistKind::Checkerboard: {
      int s = checkerboard_cells(d);
      Vec2 raw = d.standardize ? Vec2(x * checkerboard_std(s)) : x;
      if (raw.x() < -s || raw.x() >= s || raw.y() < -s || raw.y() >= s)
        return false;
      long fx = static_cast<long>(std::floor(raw.x()));
      long fy = static_cast<long>(std::floor(raw.y()));
      return ((fx + fy) % 2 + 2) % 2 == 0;
    }
    case DistKind::Pinwheel: {
      // Radius bound at seven standard deviations of the construction.
      double r_max = 1.0 + 7.0 * (d.radial_std + d.tangential_std);
      double lim = d.scale * (d.standardize ? r_max / pinwheel_std(d) : r_max);
      return x.norm() <= lim;
    }
    case DistKind::Moons: {
      Vec2 raw = x / d.scale;
      if (d.standardize) raw = raw * kMoonsStd + kMoonsMean;
      auto dist_to_arc = [&](const Vec2& centre, bool upper) {
        Vec2 rel = raw - centre;
        double ang = std::atan2(rel.y(), rel.x());
        bool on_side = upper ? ang >= 0.0 : ang <= 0.0;
        if (on_side) return std::abs(rel.norm() - 1.0);
        // Off the half-circle: measure to the nearer arc endpoint.
        return std::min((rel - Vec2(1, 0)).norm(), (rel - Vec2(-1, 0)).norm());
      };
      double tol = std::max(8.0 * d.noise, 1e-6);
      double d1 = dist_to_arc(Vec2(0.0, 0.0), true);
      double d2 = dist_to_arc(Vec2(1.0, 0.5), false);
      return std::min(d1, d2) <= tol;
    }
    case DistKind::Gaussian:
    case DistKind::GaussianMixture:
      return true;
  }
  return false;
}

double char_scale(const Dist2D& d) {
  switch (d.kind) {
    case DistKind::Checkerboard:
      return d.standardize ? std::sqrt(3.0) : d.scale;
    case DistKind::Pinwheel:
    case DistKind::Moons:
      return d.scale * 2.0;
    case DistKind::Gaussian:
      return std::max(std::abs(d.mean.x()) + 2.0 * d.sigma.x(),
                      std::abs(d.mean.y()) + 2.0 * d.sigma.y());
    case DistKind::GaussianMixture: {
      double m = 0.0;
      for (const auto& c : d.components)
        m = std::max({m, std::abs(c.mean.x()) + 2.0 * c.sigma,
                      std::abs(c.mean.y()) + 2.0 * c.sigma});
      return m;
    }
  }
  return 1.0;
}

bool is_standard_gaussian(const Dist2D& d) {
  return d.kind == DistKind::Gaussian && d.mean.isZero() &&
         d.sigma == Vec2::Ones();
}

}  // namespace bridgelab
