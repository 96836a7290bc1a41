#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace lccr {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;

/// Dense real matrix, one sample per column (M features x N samples).
using SampleMatrix = Eigen::MatrixXd;

/// Half-open column interval [begin, end) occupied by one class.
struct ClassRange {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
};

/// Sample matrix whose columns are grouped by class id, plus the bookkeeping
/// needed to select per-class coefficient blocks. Class ids are dense in
/// [0, L). Immutable after construction.
struct LabeledDictionary {
  SampleMatrix samples;                  // M x N, columns sorted by label
  std::vector<int> labels;               // per column, non-decreasing
  std::vector<ClassRange> class_ranges;  // indexed by class id
  std::vector<Index> permutation;        // column j came from input column permutation[j]

  int num_classes() const { return static_cast<int>(class_ranges.size()); }
  Index feature_dim() const { return samples.rows(); }
  Index num_samples() const { return samples.cols(); }
};

enum class Metric { euclidean, seuclidean, cosine, cityblock, spearman };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& name);

/// Rule for picking the neighborhood Y(x) among dictionary columns.
struct Neighborhood {
  enum class Rule { knn, eps_ball };
  Rule rule = Rule::knn;
  int k = 1;         // used when rule == knn
  double eps = 0.0;  // used when rule == eps_ball

  static Neighborhood nearest(int k) { return {Rule::knn, k, 0.0}; }
  static Neighborhood ball(double eps) { return {Rule::eps_ball, 0, eps}; }
};

/// Coding parameters: ridge weight lambda, locality weight gamma in [0,1],
/// neighborhood rule (required when gamma > 0), distance metric for the
/// neighbor search, and the optional [D I] dictionary expansion.
struct CoderParams {
  double lambda = 1e-3;
  double gamma = 0.0;
  std::optional<Neighborhood> neighborhood;
  Metric metric = Metric::euclidean;
  bool expand_identity = false;
};

/// Throws std::invalid_argument when the parameter set violates its
/// invariants (lambda < 0, gamma outside [0,1], gamma > 0 without a
/// neighborhood, non-positive K or eps).
void validate(const CoderParams& params);

/// Coefficient vector over dictionary columns; length N, or N+M when coded
/// over the expanded dictionary [D I].
struct Code {
  Vector coeffs;
  bool over_expanded = false;
};

struct ClassificationResult {
  int predicted_label = -1;
  Vector residuals;                    // length L; +infinity marks an empty class block
  Code code;
  std::vector<Index> neighbor_indices; // dictionary columns used as Y(x)
};

/// Stably reorders columns so labels are grouped and non-decreasing, computes
/// class ranges, and records the permutation back to input order. Labels must
/// be dense ids: every id in [0, max_label] present at least once.
LabeledDictionary make_labeled_dictionary(const SampleMatrix& samples,
                                          const std::vector<int>& labels);

/// The selector delta_i: zero everywhere except the coefficients of class
/// `class_id`. Identity-expansion coefficients (indices >= N) are always
/// zeroed in the output.
Code class_selector(const LabeledDictionary& dict, const Code& code, int class_id);

}  // namespace lccr
