#pragma once

#include "bridgelab/common.hpp"
#include "bridgelab/datasets.hpp"

namespace bridgelab {

struct HistBounds {
  double x_min = -3.0, x_max = 3.0;
  double y_min = -3.0, y_max = 3.0;

  static HistBounds square(double half) { return {-half, half, -half, half}; }
  // 1.5x the characteristic half-width of a reference distribution.
  static HistBounds for_dist(const Dist2D& d);
};

// Fixed-grid 2D histogram with additive smoothing. Samples outside the
// bounds are clamped into the edge bins, so counts always sum to the sample
// count.
struct Histogram2D {
  int bins = 64;
  HistBounds bounds;
  double smoothing = 1.0;
  Eigen::ArrayXXd counts;  // bins x bins
  int64_t total = 0;

  static Histogram2D build(const PointBatch& samples, int bins,
                           const HistBounds& bounds, double smoothing = 1.0);
  // (count + smoothing) / (total + smoothing * bins^2), sums to 1.
  Eigen::ArrayXXd probabilities() const;
};

// KL(P_hat || Q_hat) between smoothed histograms of the two sample sets over
// a shared grid. Always finite (smoothing) and non-negative.
double histogram_kl(const PointBatch& p_samples, const PointBatch& q_samples,
                    int bins, const HistBounds& bounds, double smoothing = 1.0);

// Monte-Carlo KL(P || Q) for analytic Q: cross-entropy of the samples under
// Q minus the caller-supplied entropy estimate of P.
double exact_kl_vs_analytic(const PointBatch& samples_p, const Dist2D& q,
                            double entropy_p);

// Monte-Carlo entropy estimate -mean(log p) for samples drawn from an
// analytic distribution p; companion to exact_kl_vs_analytic.
double mc_entropy(const PointBatch& samples, const Dist2D& p);

// Sliced squared 2-Wasserstein distance: average over evenly spaced
// projection directions (randomly rotated as a whole) of the squared 1D
// quantile distance between the projected sample sets.
double sliced_w2_sq(const PointBatch& p_samples, const PointBatch& q_samples,
                    int n_projections, Rng& rng);

}  // namespace bridgelab
