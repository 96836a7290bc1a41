#pragma once

#include <vector>

#include "lccr/coder.hpp"

namespace lccr {

/// Block grid for the partitioned-feature scheme: rows x cols contiguous
/// tiles, remainder pixels going to the last tile along each axis.
struct PartitionScheme {
  int rows = 1;
  int cols = 1;
  int blocks() const { return rows * cols; }
};

/// Per-class residuals of a code against the query. Regularized:
/// |x - D delta_i(a)| / |delta_i(a)|, with +infinity when |delta_i(a)| falls
/// below 1e-12. Unregularized: the numerator alone. Identity-expansion
/// coefficients never contribute.
Vector class_residuals(const CoderModel& model, const Vector& x, const Code& code,
                       bool regularized);

/// argmin with ties broken toward the smaller class id. Throws
/// AllResidualsInfiniteError when no class has a finite residual.
int argmin_label(const Vector& residuals);

/// Codes x and labels it by the minimum regularized residual.
ClassificationResult classify(const CoderModel& model, const Vector& x);

/// Same, with the plain (SRC/LRC-style) residual |x - D delta_i(a)|.
ClassificationResult classify_unregularized(const CoderModel& model, const Vector& x);

/// Classifies each block with its own model and aggregates by plurality
/// vote. Vote ties go to the candidate with the smaller residual summed
/// across blocks, then to the smaller class id. The returned residuals are
/// the across-block sums.
ClassificationResult classify_partitioned(const std::vector<CoderModel>& models,
                                          const std::vector<Vector>& blocks);

/// Splits an H x W image into the scheme's tiles, row-major over the grid,
/// each tile flattened column-major.
std::vector<Vector> partition_image(const Eigen::MatrixXd& image, const PartitionScheme& scheme);

}  // namespace lccr
