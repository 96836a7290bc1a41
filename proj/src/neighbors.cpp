#include "lccr/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lccr/errors.hpp"

namespace lccr {

namespace {

// Midranks: tied entries share the average of the ranks they span.
Vector rank_vector(const Vector& v) {
  const Index n = v.size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return v[a] < v[b]; });

  Vector ranks(n);
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Index k = i; k <= j; ++k) ranks[order[k]] = midrank;
    i = j + 1;
  }
  return ranks;
}

double pearson(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  const double denom = ac.norm() * bc.norm();
  if (denom == 0.0) throw ConstantVectorError("rank correlation undefined for constant vector");
  return ac.dot(bc) / denom;
}

}  // namespace

MetricState fit_metric(Metric metric, const SampleMatrix& train) {
  MetricState state;
  state.metric = metric;
  if (metric != Metric::seuclidean) return state;

  const Index m = train.rows();
  const Index n = train.cols();
  Vector stddev = Vector::Ones(m);
  if (n >= 2) {
    const Vector mean = train.rowwise().mean();
    const Eigen::MatrixXd centered = train.colwise() - mean;
    stddev = (centered.rowwise().squaredNorm() / static_cast<double>(n - 1)).cwiseSqrt();
  } else {
    stddev.setZero();
  }

  const double max_std = stddev.maxCoeff();
  if (max_std <= 0.0) {
    stddev.setOnes();
  } else {
    stddev = stddev.cwiseMax(1e-8 * max_std);
  }
  state.per_feature_stddev = stddev;
  return state;
}

double distance(const MetricState& state, const Vector& u, const Vector& v) {
  if (u.size() != v.size())
    throw std::invalid_argument("distance: vectors have different lengths");

  switch (state.metric) {
    case Metric::euclidean:
      return (u - v).norm();
    case Metric::cityblock:
      return (u - v).cwiseAbs().sum();
    case Metric::seuclidean: {
      if (!state.per_feature_stddev)
        throw std::invalid_argument("seuclidean distance requires a fitted metric state");
      const Vector& s = *state.per_feature_stddev;
      if (s.size() != u.size())
        throw std::invalid_argument("seuclidean scale length does not match vectors");
      return ((u - v).array() / s.array()).matrix().norm();
    }
    case Metric::cosine: {
      const double nu = u.norm();
      const double nv = v.norm();
      if (nu < 1e-300 || nv < 1e-300)
        throw ZeroVectorError("cosine distance undefined for a zero vector");
      // Normalize before the dot product so tiny norms cannot underflow.
      return 1.0 - (u / nu).dot(v / nv);
    }
    case Metric::spearman: {
      if (u.size() < 2)
        throw std::invalid_argument("spearman distance requires vectors of length >= 2");
      return 1.0 - pearson(rank_vector(u), rank_vector(v));
    }
  }
  throw std::invalid_argument("unknown metric");
}

std::vector<NeighborHit> knn(const MetricState& state, const LabeledDictionary& dict,
                             const Vector& x, int k) {
  if (k < 1) throw std::invalid_argument("knn requires K >= 1");
  const Index n = dict.num_samples();
  const Index take = std::min<Index>(k, n);

  std::vector<NeighborHit> hits(n);
  for (Index j = 0; j < n; ++j) hits[j] = {j, distance(state, x, dict.samples.col(j))};

  std::partial_sort(hits.begin(), hits.begin() + take, hits.end(),
                    [](const NeighborHit& a, const NeighborHit& b) {
                      return a.dist < b.dist || (a.dist == b.dist && a.column < b.column);
                    });
  hits.resize(take);
  return hits;
}

std::vector<NeighborHit> eps_ball(const MetricState& state, const LabeledDictionary& dict,
                                  const Vector& x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps_ball requires eps > 0");

  std::vector<NeighborHit> hits;
  for (Index j = 0; j < dict.num_samples(); ++j) {
    const double d = distance(state, x, dict.samples.col(j));
    if (d < eps) hits.push_back({j, d});
  }
  std::sort(hits.begin(), hits.end(), [](const NeighborHit& a, const NeighborHit& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.column < b.column);
  });
  return hits;
}

}  // namespace lccr
