#pragma once

#include "lccr/types.hpp"

namespace lccr {

/// Eigenface basis: per-feature training mean plus the top-d principal
/// directions (orthonormal columns, non-increasing eigenvalue order).
struct PcaModel {
  Vector mean;             // length M_raw
  Eigen::MatrixXd basis;   // M_raw x d, basis^T basis = I
  Index dim() const { return basis.cols(); }
};

/// Rescales every column to unit Euclidean norm. Throws ZeroColumnError when
/// a column norm falls below 1e-12 (a blank or degenerate sample).
SampleMatrix unit_normalize_columns(const SampleMatrix& m);

/// Fits PCA by SVD of the mean-centered training matrix. 1 <= d <=
/// min(rows, cols). Sign convention: the largest-magnitude entry of each
/// direction is made positive, so the basis is reproducible bit-for-bit.
PcaModel fit_pca(const SampleMatrix& train, Index d);

/// basis^T (m - mean), applied column-wise; result has d rows.
SampleMatrix project(const PcaModel& model, const SampleMatrix& m);

}  // namespace lccr
