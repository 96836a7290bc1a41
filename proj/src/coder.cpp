#include "lccr/coder.hpp"

#include <Eigen/Dense>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace lccr {

namespace {

Eigen::MatrixXd expanded_dictionary(const SampleMatrix& d) {
  const Index m = d.rows();
  Eigen::MatrixXd out(m, d.cols() + m);
  out.leftCols(d.cols()) = d;
  out.rightCols(m) = Eigen::MatrixXd::Identity(m, m);
  return out;
}

// Y(x) per the model's rule. Empty eps-ball falls back to the 1-NN so the
// locality term never silently vanishes.
std::vector<NeighborHit> find_neighborhood(const CoderModel& model, const Vector& x) {
  const Neighborhood& nb = *model.params.neighborhood;
  if (nb.rule == Neighborhood::Rule::knn) return knn(model.metric_state, model.dict, x, nb.k);

  std::vector<NeighborHit> hits = eps_ball(model.metric_state, model.dict, x, nb.eps);
  if (hits.empty()) hits = knn(model.metric_state, model.dict, x, 1);
  return hits;
}

// (1-gamma) x + (gamma/K) sum y_i, K = |Y(x)|.
Vector blended_target(const CoderModel& model, const Vector& x, std::vector<Index>& used) {
  const double gamma = model.params.gamma;
  used.clear();
  if (gamma == 0.0) return x;

  const std::vector<NeighborHit> hits = find_neighborhood(model, x);
  Vector sum = Vector::Zero(x.size());
  used.reserve(hits.size());
  for (const NeighborHit& hit : hits) {
    sum += model.dict.samples.col(hit.column);
    used.push_back(hit.column);
  }
  return (1.0 - gamma) * x + (gamma / static_cast<double>(hits.size())) * sum;
}

}  // namespace

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  if (sigma.size() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());

  const double tol = static_cast<double>(std::max(a.rows(), a.cols())) *
                     std::numeric_limits<double>::epsilon() * sigma(0);
  Vector inv = Vector::Zero(sigma.size());
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > tol) inv(i) = 1.0 / sigma(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

CoderModel build_coder(LabeledDictionary dict, CoderParams params, std::optional<PcaModel> pca) {
  validate(params);
  if (!dict.samples.allFinite())
    throw std::invalid_argument("dictionary has non-finite entries");
  for (Index j = 0; j < dict.num_samples(); ++j) {
    if (std::abs(dict.samples.col(j).norm() - 1.0) > 1e-8)
      throw std::invalid_argument("dictionary column " + std::to_string(j) +
                                  " is not unit-norm; normalize before building the coder");
  }

  if (params.neighborhood && params.neighborhood->rule == Neighborhood::Rule::knn &&
      params.neighborhood->k > dict.num_samples()) {
    std::cerr << "lccr: clamping K=" << params.neighborhood->k << " to N="
              << dict.num_samples() << "\n";
    params.neighborhood->k = static_cast<int>(dict.num_samples());
  }

  CoderModel model;
  model.params = params;
  model.pca = std::move(pca);
  model.metric_state = fit_metric(params.metric, dict.samples);

  const Eigen::MatrixXd coding_dict =
      params.expand_identity ? expanded_dictionary(dict.samples) : dict.samples;
  if (params.lambda > 0.0) {
    Eigen::MatrixXd gram = coding_dict.transpose() * coding_dict;
    gram.diagonal().array() += params.lambda;
    model.projection = gram.ldlt().solve(coding_dict.transpose());
  } else {
    model.projection = pseudo_inverse(coding_dict);
  }
  model.dict = std::move(dict);
  return model;
}

CodeResult code_one(const CoderModel& model, const Vector& x) {
  if (x.size() != model.dict.feature_dim())
    throw std::invalid_argument("query length does not match the dictionary feature space");
  if (!x.allFinite()) throw std::invalid_argument("query has non-finite entries");

  CodeResult result;
  const Vector target = blended_target(model, x, result.neighbor_indices);
  result.code.coeffs = model.projection * target;
  result.code.over_expanded = model.params.expand_identity;
  return result;
}

BatchCodeResult code_batch(const CoderModel& model, const SampleMatrix& X) {
  if (X.rows() != model.dict.feature_dim())
    throw std::invalid_argument("batch row count does not match the dictionary feature space");
  if (!X.allFinite()) throw std::invalid_argument("batch has non-finite entries");
  if (model.params.gamma > 0.0 &&
      model.params.neighborhood->rule != Neighborhood::Rule::knn)
    throw std::invalid_argument("batch coding requires a K-NN neighborhood");

  const Index j_count = X.cols();
  BatchCodeResult result;
  result.neighbor_indices.resize(j_count);

  Eigen::MatrixXd targets(X.rows(), j_count);
  for (Index j = 0; j < j_count; ++j)
    targets.col(j) = blended_target(model, X.col(j), result.neighbor_indices[j]);

  result.codes = model.projection * targets;
  return result;
}

double objective_value(const CoderModel& model, const Vector& x,
                       const std::vector<Vector>& neighbors, const Code& a) {
  if (a.coeffs.size() != model.coding_width())
    throw std::invalid_argument("code length does not match the coding dictionary");
  if (x.size() != model.dict.feature_dim())
    throw std::invalid_argument("query length does not match the dictionary feature space");
  const double gamma = model.params.gamma;
  if (gamma > 0.0 && neighbors.empty())
    throw std::invalid_argument("gamma > 0 requires at least one neighbor");

  const Eigen::MatrixXd coding_dict = model.params.expand_identity
                                          ? expanded_dictionary(model.dict.samples)
                                          : model.dict.samples;
  const Vector reconstruction = coding_dict * a.coeffs;

  double value = (1.0 - gamma) * (x - reconstruction).squaredNorm() +
                 model.params.lambda * a.coeffs.squaredNorm();
  if (gamma > 0.0) {
    double locality = 0.0;
    for (const Vector& y : neighbors) {
      if (y.size() != x.size())
        throw std::invalid_argument("neighbor length does not match the query");
      locality += (y - reconstruction).squaredNorm();
    }
    value += gamma * locality / static_cast<double>(neighbors.size());
  }
  return value;
}

}  // namespace lccr
