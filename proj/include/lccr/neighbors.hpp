#pragma once

#include <optional>
#include <vector>

#include "lccr/types.hpp"

namespace lccr {

/// Metric plus whatever was fitted on the training columns (currently only
/// the per-feature standard deviations used by the standardized Euclidean
/// distance). Immutable after fit.
struct MetricState {
  Metric metric = Metric::euclidean;
  std::optional<Vector> per_feature_stddev;  // present iff metric == seuclidean
};

/// Fits the metric on dictionary columns. For seuclidean the per-feature
/// sample standard deviation is floored at 1e-8 * max_j s_j so zero-variance
/// features (cropped image corners) cannot blow the distance up; when every
/// feature is constant the scales fall back to 1.
MetricState fit_metric(Metric metric, const SampleMatrix& train);

/// Pairwise distance between two vectors of equal length:
///   euclidean   |u-v|_2
///   cityblock   |u-v|_1
///   seuclidean  sqrt(sum_j ((u_j-v_j)/s_j)^2)
///   cosine      1 - u.v / (|u||v|)          (ZeroVectorError on zero input)
///   spearman    1 - rank correlation, midranks for ties
///                                           (ConstantVectorError when a
///                                            vector has no rank variation)
double distance(const MetricState& state, const Vector& u, const Vector& v);

struct NeighborHit {
  Index column = 0;
  double dist = 0.0;
};

/// The K columns of the dictionary closest to x, ascending by distance, ties
/// broken toward the lower column index. K is clamped to N.
std::vector<NeighborHit> knn(const MetricState& state, const LabeledDictionary& dict,
                             const Vector& x, int k);

/// All columns with distance(x, d_i) < eps, ascending by distance. May be
/// empty.
std::vector<NeighborHit> eps_ball(const MetricState& state, const LabeledDictionary& dict,
                                  const Vector& x, double eps);

}  // namespace lccr
