#include "bridgelab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bridgelab {

HistBounds HistBounds::for_dist(const Dist2D& d) {
  return square(1.5 * char_scale(d));
}

Histogram2D Histogram2D::build(const PointBatch& samples, int bins,
                               const HistBounds& bounds, double smoothing) {
  if (samples.rows() == 0) throw ConfigError("histogram needs samples");
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  if (bounds.x_max <= bounds.x_min || bounds.y_max <= bounds.y_min)
    throw ConfigError("histogram bounds are empty");
  if (smoothing < 0.0) throw ConfigError("smoothing must be non-negative");

  Histogram2D h;
  h.bins = bins;
  h.bounds = bounds;
  h.smoothing = smoothing;
  h.counts = Eigen::ArrayXXd::Zero(bins, bins);
  h.total = samples.rows();

  const double wx = (bounds.x_max - bounds.x_min) / bins;
  const double wy = (bounds.y_max - bounds.y_min) / bins;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    double x = samples(i, 0), y = samples(i, 1);
    if (!std::isfinite(x) || !std::isfinite(y))
      throw NumericalError("non-finite sample in histogram input");
    int bx = static_cast<int>(std::floor((x - bounds.x_min) / wx));
    int by = static_cast<int>(std::floor((y - bounds.y_min) / wy));
    bx = std::clamp(bx, 0, bins - 1);
    by = std::clamp(by, 0, bins - 1);
    h.counts(bx, by) += 1.0;
  }
  return h;
}

Eigen::ArrayXXd Histogram2D::probabilities() const {
  double denom =
      static_cast<double>(total) + smoothing * static_cast<double>(bins) * bins;
  return (counts + smoothing) / denom;
}

double histogram_kl(const PointBatch& p_samples, const PointBatch& q_samples,
                    int bins, const HistBounds& bounds, double smoothing) {
  auto p = Histogram2D::build(p_samples, bins, bounds, smoothing).probabilities();
  auto q = Histogram2D::build(q_samples, bins, bounds, smoothing).probabilities();
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      kl += p(i, j) * std::log(p(i, j) / q(i, j));
  return kl;
}

double exact_kl_vs_analytic(const PointBatch& samples_p, const Dist2D& q,
                            double entropy_p) {
  if (samples_p.rows() == 0) throw ConfigError("KL needs samples");
  double cross = 0.0;
  for (Eigen::Index i = 0; i < samples_p.rows(); ++i)
    cross -= log_density_reference(q, samples_p.row(i).transpose());
  cross /= static_cast<double>(samples_p.rows());
  return cross - entropy_p;
}

double mc_entropy(const PointBatch& samples, const Dist2D& p) {
  if (samples.rows() == 0) throw ConfigError("entropy needs samples");
  double h = 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    h -= log_density_reference(p, samples.row(i).transpose());
  return h / static_cast<double>(samples.rows());
}

namespace {

// Squared 2-Wasserstein distance between 1D empirical distributions via
// inverse-CDF evaluation on a shared quantile grid. Reduces to the paired
// sorted-sample mean when the sets have equal size.
double w2_sq_1d(std::vector<double>& a, std::vector<double>& b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t k = std::max(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double u = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
    double qa = a[std::min(a.size() - 1,
                           static_cast<std::size_t>(u * static_cast<double>(a.size())))];
    double qb = b[std::min(b.size() - 1,
                           static_cast<std::size_t>(u * static_cast<double>(b.size())))];
    acc += (qa - qb) * (qa - qb);
  }
  return acc / static_cast<double>(k);
}

}  // namespace

double sliced_w2_sq(const PointBatch& p_samples, const PointBatch& q_samples,
                    int n_projections, Rng& rng) {
  if (p_samples.rows() == 0 || q_samples.rows() == 0)
    throw ConfigError("sliced distance needs samples");
  if (n_projections < 1) throw ConfigError("need at least one projection");

  // Evenly spaced directions over a half-turn with a random common offset:
  // the average of any quadratic form over them is exact, while the offset
  // keeps repeated calls from sharing a fixed grid.
  const double offset = rng.uniform() * std::numbers::pi;
  double acc = 0.0;
  std::vector<double> pa(static_cast<std::size_t>(p_samples.rows()));
  std::vector<double> qa(static_cast<std::size_t>(q_samples.rows()));
  for (int j = 0; j < n_projections; ++j) {
    double theta = offset + std::numbers::pi * j / n_projections;
    double c = std::cos(theta), s = std::sin(theta);
    for (Eigen::Index i = 0; i < p_samples.rows(); ++i)
      pa[static_cast<std::size_t>(i)] = c * p_samples(i, 0) + s * p_samples(i, 1);
    for (Eigen::Index i = 0; i < q_samples.rows(); ++i)
      qa[static_cast<std::size_t>(i)] = c * q_samples(i, 0) + s * q_samples(i, 1);
    acc += w2_sq_1d(pa, qa);
  }
  return acc / n_projections;
}

}  // namespace bridgelab
