#include "lccr/preprocess.hpp"

#include <Eigen/Dense>
#include <stdexcept>

#include "lccr/errors.hpp"

namespace lccr {

SampleMatrix unit_normalize_columns(const SampleMatrix& m) {
  if (m.size() == 0) throw std::invalid_argument("cannot normalize an empty matrix");
  if (!m.allFinite()) throw std::invalid_argument("matrix has non-finite entries");

  SampleMatrix out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    const double norm = m.col(j).norm();
    if (norm < 1e-12)
      throw ZeroColumnError("column " + std::to_string(j) + " has near-zero norm " +
                            std::to_string(norm));
    out.col(j) = m.col(j) / norm;
  }
  return out;
}

PcaModel fit_pca(const SampleMatrix& train, Index d) {
  const Index m = train.rows();
  const Index n = train.cols();
  if (d < 1 || d > std::min(m, n))
    throw std::invalid_argument("pca dimension " + std::to_string(d) +
                                " out of range [1, " + std::to_string(std::min(m, n)) + "]");
  if (!train.allFinite()) throw std::invalid_argument("training matrix has non-finite entries");

  PcaModel model;
  model.mean = train.rowwise().mean();
  SampleMatrix centered = train.colwise() - model.mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  model.basis = svd.matrixU().leftCols(d);

  // Deterministic sign: largest-magnitude entry of each direction positive.
  for (Index j = 0; j < d; ++j) {
    Index peak;
    model.basis.col(j).cwiseAbs().maxCoeff(&peak);
    if (model.basis(peak, j) < 0.0) model.basis.col(j) = -model.basis.col(j);
  }
  return model;
}

SampleMatrix project(const PcaModel& model, const SampleMatrix& m) {
  if (m.rows() != model.mean.size())
    throw std::invalid_argument("row count " + std::to_string(m.rows()) +
                                " does not match the fitted space " +
                                std::to_string(model.mean.size()));
  return model.basis.transpose() * (m.colwise() - model.mean);
}

}  // namespace lccr
