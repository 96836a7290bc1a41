#include "lccr/types.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace lccr {

std::string to_string(Metric m) {
  switch (m) {
    case Metric::euclidean: return "euclidean";
    case Metric::seuclidean: return "seuclidean";
    case Metric::cosine: return "cosine";
    case Metric::cityblock: return "cityblock";
    case Metric::spearman: return "spearman";
  }
  return "euclidean";
}

Metric metric_from_string(const std::string& name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "seuclidean") return Metric::seuclidean;
  if (name == "cosine") return Metric::cosine;
  if (name == "cityblock") return Metric::cityblock;
  if (name == "spearman") return Metric::spearman;
  throw std::invalid_argument("unknown metric: " + name);
}

void validate(const CoderParams& params) {
  if (!(params.lambda >= 0.0) || !std::isfinite(params.lambda))
    throw std::invalid_argument("lambda must be finite and >= 0");
  if (!(params.gamma >= 0.0 && params.gamma <= 1.0))
    throw std::invalid_argument("gamma must be in [0, 1]");
  if (params.gamma > 0.0 && !params.neighborhood.has_value())
    throw std::invalid_argument("gamma > 0 requires a neighborhood specification");
  if (params.neighborhood) {
    const Neighborhood& nb = *params.neighborhood;
    if (nb.rule == Neighborhood::Rule::knn && params.gamma > 0.0 && nb.k < 1)
      throw std::invalid_argument("knn neighborhood requires K >= 1");
    if (nb.rule == Neighborhood::Rule::eps_ball && !(nb.eps > 0.0))
      throw std::invalid_argument("eps_ball neighborhood requires eps > 0");
  }
}

LabeledDictionary make_labeled_dictionary(const SampleMatrix& samples,
                                          const std::vector<int>& labels) {
  if (samples.rows() < 1 || samples.cols() < 1)
    throw std::invalid_argument("sample matrix must be at least 1x1");
  if (!samples.allFinite())
    throw std::invalid_argument("sample matrix has non-finite entries");
  const Index n = samples.cols();
  if (static_cast<Index>(labels.size()) != n)
    throw std::invalid_argument("label count does not match column count");

  int max_label = -1;
  for (int label : labels) {
    if (label < 0) throw std::invalid_argument("labels must be non-negative class ids");
    max_label = std::max(max_label, label);
  }
  const int num_classes = max_label + 1;

  std::vector<Index> counts(num_classes, 0);
  for (int label : labels) ++counts[label];
  for (int c = 0; c < num_classes; ++c)
    if (counts[c] == 0)
      throw std::invalid_argument("class ids must be dense: id " + std::to_string(c) +
                                  " has no samples");

  LabeledDictionary dict;
  dict.permutation.resize(n);
  std::iota(dict.permutation.begin(), dict.permutation.end(), Index{0});
  std::stable_sort(dict.permutation.begin(), dict.permutation.end(),
                   [&](Index a, Index b) { return labels[a] < labels[b]; });

  dict.samples.resize(samples.rows(), n);
  dict.labels.resize(n);
  for (Index j = 0; j < n; ++j) {
    dict.samples.col(j) = samples.col(dict.permutation[j]);
    dict.labels[j] = labels[dict.permutation[j]];
  }

  dict.class_ranges.resize(num_classes);
  Index pos = 0;
  for (int c = 0; c < num_classes; ++c) {
    dict.class_ranges[c] = ClassRange{pos, pos + counts[c]};
    pos += counts[c];
  }
  return dict;
}

Code class_selector(const LabeledDictionary& dict, const Code& code, int class_id) {
  if (class_id < 0 || class_id >= dict.num_classes())
    throw std::invalid_argument("class id out of range");
  if (code.coeffs.size() < dict.num_samples())
    throw std::invalid_argument("code shorter than dictionary column count");

  Code out;
  out.over_expanded = code.over_expanded;
  out.coeffs = Vector::Zero(code.coeffs.size());
  const ClassRange& range = dict.class_ranges[class_id];
  out.coeffs.segment(range.begin, range.size()) = code.coeffs.segment(range.begin, range.size());
  return out;
}

}  // namespace lccr
