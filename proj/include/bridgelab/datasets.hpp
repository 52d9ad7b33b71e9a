#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bridgelab/common.hpp"

namespace bridgelab {

enum class DistKind { Checkerboard, Pinwheel, Gaussian, GaussianMixture, Moons };

DistKind dist_kind_from_string(std::string_view s);
std::string to_string(DistKind k);

struct MixtureComponent {
  double weight = 1.0;
  Vec2 mean = Vec2::Zero();
  double sigma = 1.0;  // isotropic
};

// A sampleable planar distribution. Shape datasets (checkerboard, pinwheel,
// moons) are optionally standardized to zero mean and unit per-coordinate
// variance using fixed analytic constants, then multiplied by `scale`.
// Gaussian and mixture kinds are taken exactly as parameterized.
struct Dist2D {
  DistKind kind = DistKind::Gaussian;
  double scale = 1.0;
  bool standardize = true;

  // gaussian (diagonal)
  Vec2 mean = Vec2::Zero();
  Vec2 sigma = Vec2::Ones();

  // gaussian-mixture
  std::vector<MixtureComponent> components;

  // moons
  double noise = 0.05;

  // pinwheel construction constants
  int blades = 5;
  double radial_std = 0.3;
  double tangential_std = 0.1;
  double warp = 0.25;
};

Dist2D make_checkerboard(double scale = 2.0, bool standardize = true);
Dist2D make_pinwheel(double scale = 1.0, bool standardize = true);
Dist2D make_gaussian(const Vec2& mean, const Vec2& sigma);
Dist2D make_gaussian_mixture(const std::vector<MixtureComponent>& comps);
Dist2D make_moons(double scale = 1.0, double noise = 0.05,
                  bool standardize = true);
Dist2D standard_gaussian();

PointBatch sample(const Dist2D& d, int n, Rng& rng);

// Exact log density; available for gaussian and gaussian-mixture only.
double log_density_reference(const Dist2D& d, const Vec2& x);
bool has_log_density(const Dist2D& d);

// Constructive support / sanity predicate (loose for noisy kinds).
bool in_support(const Dist2D& d, const Vec2& x);

// Characteristic half-width of the bulk of the mass; evaluation grids default
// to 1.5x this value on each side.
double char_scale(const Dist2D& d);

bool is_standard_gaussian(const Dist2D& d);

}  // namespace bridgelab
