#include "lccr/classifier.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lccr/errors.hpp"

namespace lccr {

Vector class_residuals(const CoderModel& model, const Vector& x, const Code& code,
                       bool regularized) {
  const LabeledDictionary& dict = model.dict;
  if (code.coeffs.size() < dict.num_samples())
    throw std::invalid_argument("code shorter than dictionary column count");
  if (x.size() != dict.feature_dim())
    throw std::invalid_argument("query length does not match the dictionary feature space");

  const double inf = std::numeric_limits<double>::infinity();
  Vector residuals(dict.num_classes());
  for (int c = 0; c < dict.num_classes(); ++c) {
    const ClassRange& range = dict.class_ranges[c];
    const auto coeffs = code.coeffs.segment(range.begin, range.size());
    const double numerator =
        (x - dict.samples.middleCols(range.begin, range.size()) * coeffs).norm();
    if (!regularized) {
      residuals(c) = numerator;
      continue;
    }
    const double denominator = coeffs.norm();
    residuals(c) = denominator < 1e-12 ? inf : numerator / denominator;
  }
  return residuals;
}

int argmin_label(const Vector& residuals) {
  int best = -1;
  double best_value = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < residuals.size(); ++i) {
    if (residuals(i) < best_value) {
      best_value = residuals(i);
      best = static_cast<int>(i);
    }
  }
  if (best < 0)
    throw AllResidualsInfiniteError("every class residual is infinite (zero code?)");
  return best;
}

namespace {

ClassificationResult classify_impl(const CoderModel& model, const Vector& x, bool regularized) {
  CodeResult coded = code_one(model, x);

  ClassificationResult result;
  result.residuals = class_residuals(model, x, coded.code, regularized);
  result.predicted_label = argmin_label(result.residuals);
  result.code = std::move(coded.code);
  result.neighbor_indices = std::move(coded.neighbor_indices);
  return result;
}

}  // namespace

ClassificationResult classify(const CoderModel& model, const Vector& x) {
  return classify_impl(model, x, true);
}

ClassificationResult classify_unregularized(const CoderModel& model, const Vector& x) {
  return classify_impl(model, x, false);
}

ClassificationResult classify_partitioned(const std::vector<CoderModel>& models,
                                          const std::vector<Vector>& blocks) {
  if (models.empty()) throw std::invalid_argument("need at least one block model");
  if (models.size() != blocks.size())
    throw std::invalid_argument("block count does not match model count");
  const int num_classes = models.front().dict.num_classes();
  for (const CoderModel& model : models)
    if (model.dict.num_classes() != num_classes)
      throw std::invalid_argument("block models disagree on the class count");

  Vector total = Vector::Zero(num_classes);
  std::vector<int> votes(num_classes, 0);
  for (std::size_t b = 0; b < models.size(); ++b) {
    ClassificationResult block = classify(models[b], blocks[b]);
    ++votes[block.predicted_label];
    total += block.residuals;
  }

  int winner = 0;
  for (int c = 1; c < num_classes; ++c) {
    if (votes[c] > votes[winner] ||
        (votes[c] == votes[winner] && total(c) < total(winner))) {
      winner = c;
    }
  }

  ClassificationResult result;
  result.predicted_label = winner;
  result.residuals = std::move(total);
  return result;
}

std::vector<Vector> partition_image(const Eigen::MatrixXd& image, const PartitionScheme& scheme) {
  const Index h = image.rows();
  const Index w = image.cols();
  if (scheme.rows < 1 || scheme.cols < 1)
    throw std::invalid_argument("partition scheme must have at least one row and column");
  if (h < scheme.rows || w < scheme.cols)
    throw std::invalid_argument("image smaller than the partition grid");

  const Index base_h = h / scheme.rows;
  const Index base_w = w / scheme.cols;

  std::vector<Vector> blocks;
  blocks.reserve(static_cast<std::size_t>(scheme.blocks()));
  for (int r = 0; r < scheme.rows; ++r) {
    const Index top = r * base_h;
    const Index rows = (r == scheme.rows - 1) ? h - top : base_h;
    for (int c = 0; c < scheme.cols; ++c) {
      const Index left = c * base_w;
      const Index cols = (c == scheme.cols - 1) ? w - left : base_w;
      const Eigen::MatrixXd tile = image.block(top, left, rows, cols);
      blocks.emplace_back(Eigen::Map<const Vector>(tile.data(), tile.size()));
    }
  }
  return blocks;
}

}  // namespace lccr
