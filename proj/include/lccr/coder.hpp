#pragma once

#include <optional>
#include <vector>

#include "lccr/neighbors.hpp"
#include "lccr/preprocess.hpp"
#include "lccr/types.hpp"

namespace lccr {

/// A ready-to-query coder: the labeled dictionary (unit-norm columns, already
/// in coding space), the precomputed projection matrix
///
///   P = (D~^T D~ + lambda I)^-1 D~^T,    D~ = D  or  [D I],
///
/// the coding parameters, and the fitted metric state for neighbor search.
/// P is computed once at build time; queries only multiply by it. Immutable
/// after construction, safe to share across threads.
struct CoderModel {
  LabeledDictionary dict;
  Eigen::MatrixXd projection;  // (N or N+M) x M
  CoderParams params;
  MetricState metric_state;
  std::optional<PcaModel> pca;  // carried along so raw queries can be mapped in

  Index coding_width() const {
    return dict.num_samples() + (params.expand_identity ? dict.feature_dim() : 0);
  }
};

/// Builds the projection matrix and fits the metric. Dictionary columns must
/// be unit-norm (the last preprocessing step). lambda > 0 uses a symmetric
/// positive-definite factorization; lambda = 0 falls back to the SVD
/// pseudo-inverse with tolerance max(M, N~) * eps_machine * sigma_max, so
/// rank-deficient least-squares coding is handled rather than rejected.
/// K is clamped to N here, with a warning on stderr.
CoderModel build_coder(LabeledDictionary dict, CoderParams params,
                       std::optional<PcaModel> pca = std::nullopt);

struct CodeResult {
  Code code;
  std::vector<Index> neighbor_indices;
};

/// Codes one query: finds Y(x) per the configured rule, forms the blended
/// target (1-gamma) x + (gamma/K) sum y_i, and multiplies by P. With
/// gamma = 0 the search is skipped entirely. An empty eps-ball falls back to
/// the single nearest neighbor. Neighbors are always searched among the
/// original N columns, never the identity block.
CodeResult code_one(const CoderModel& model, const Vector& x);

struct BatchCodeResult {
  Eigen::MatrixXd codes;  // coding_width x J, column j codes X[:,j]
  std::vector<std::vector<Index>> neighbor_indices;
};

/// Matrix form over a batch of queries; requires a K-NN neighborhood when
/// gamma > 0 (the batch formula assumes exactly K neighbors per column).
/// Column j equals code_one(model, X.col(j)) up to floating-point
/// associativity.
BatchCodeResult code_batch(const CoderModel& model, const SampleMatrix& X);

/// The coding objective
///   E = (1-gamma) |x - D~ a|^2 + (gamma/K) sum_i |y_i - D~ a|^2 + lambda |a|^2
/// evaluated at an arbitrary code; used to check that the closed form is the
/// global minimizer.
double objective_value(const CoderModel& model, const Vector& x,
                       const std::vector<Vector>& neighbors, const Code& a);

/// Moore-Penrose pseudo-inverse by SVD, tolerance max(rows, cols) *
/// eps_machine * sigma_max.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a);

}  // namespace lccr
