#include "doctest.h"

#include <Eigen/Dense>

#include "lccr/errors.hpp"
#include "lccr/preprocess.hpp"
#include "test_helpers.hpp"

using namespace lccr;

TEST_CASE("unit_normalize_columns basics") {
  SampleMatrix m(2, 1);
  m << 3, 4;
  const SampleMatrix out = unit_normalize_columns(m);
  CHECK(out(0, 0) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(out(1, 0) == doctest::Approx(0.8).epsilon(1e-14));

  // Idempotent within 1e-12.
  const SampleMatrix again = unit_normalize_columns(out);
  CHECK((again - out).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("unit_normalize_columns rejects a zero column") {
  SampleMatrix m(3, 2);
  m.setZero();
  m.col(0) << 1, 2, 3;
  CHECK_THROWS_AS(unit_normalize_columns(m), ZeroColumnError);
}

TEST_CASE("unit_normalize_columns is idempotent on random input") {
  SeededRng rng(5);
  const SampleMatrix m = testutil::random_matrix(rng, 6, 9);
  const SampleMatrix once = unit_normalize_columns(m);
  for (Index j = 0; j < once.cols(); ++j)
    CHECK(std::abs(once.col(j).norm() - 1.0) <= 1e-12);
  CHECK((unit_normalize_columns(once) - once).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fit_pca recovers a 1-D line exactly") {
  // 2-D points on a line through an offset point.
  SeededRng rng(7);
  Eigen::Vector2d direction(3.0, -1.0);
  direction.normalize();
  const Eigen::Vector2d offset(0.5, 2.0);

  SampleMatrix points(2, 12);
  for (Index j = 0; j < points.cols(); ++j)
    points.col(j) = offset + (rng.uniform(-2.0, 2.0)) * direction;

  const PcaModel model = fit_pca(points, 1);
  CHECK(std::abs(std::abs(model.basis.col(0).dot(direction)) - 1.0) <= 1e-12);

  // Reconstruction error 0 on the training points.
  const SampleMatrix projected = project(model, points);
  const SampleMatrix rebuilt = (model.basis * projected).colwise() + model.mean;
  CHECK((rebuilt - points).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fit_pca basis is orthonormal") {
  SeededRng rng(13);
  const SampleMatrix data = testutil::random_matrix(rng, 10, 20);
  const PcaModel model = fit_pca(data, 3);
  const Eigen::MatrixXd gram = model.basis.transpose() * model.basis;
  CHECK((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("full-dimension PCA preserves pairwise distances") {
  SeededRng rng(17);
  for (auto [m, n] : {std::pair<Index, Index>{10, 20}, {20, 10}}) {
    const SampleMatrix data = testutil::random_matrix(rng, m, n);
    const Index d = std::min(m, n);
    const PcaModel model = fit_pca(data, d);
    const SampleMatrix projected = project(model, data);
    const SampleMatrix centered = data.colwise() - model.mean;
    for (Index a = 0; a < n; ++a)
      for (Index b = a + 1; b < n; ++b) {
        const double original = (centered.col(a) - centered.col(b)).norm();
        const double reduced = (projected.col(a) - projected.col(b)).norm();
        CHECK(std::abs(original - reduced) <= 1e-8);
      }
  }
}

TEST_CASE("fit_pca sign convention is deterministic") {
  SeededRng rng(19);
  const SampleMatrix data = testutil::random_matrix(rng, 8, 14);
  const PcaModel a = fit_pca(data, 4);
  const PcaModel b = fit_pca(data, 4);
  CHECK((a.basis - b.basis).cwiseAbs().maxCoeff() == 0.0);
  for (Index j = 0; j < a.basis.cols(); ++j) {
    Index peak;
    a.basis.col(j).cwiseAbs().maxCoeff(&peak);
    CHECK(a.basis(peak, j) > 0.0);
  }
}

TEST_CASE("fit_pca rejects out-of-range dimensions") {
  SeededRng rng(23);
  const SampleMatrix data = testutil::random_matrix(rng, 5, 8);
  CHECK_THROWS_AS(fit_pca(data, 0), std::invalid_argument);
  CHECK_THROWS_AS(fit_pca(data, 6), std::invalid_argument);
}

TEST_CASE("project centers with the training mean") {
  SeededRng rng(31);
  const SampleMatrix data = testutil::random_matrix(rng, 7, 11);
  const PcaModel model = fit_pca(data, 4);

  // The mean column projects to zero.
  SampleMatrix mean_col = model.mean;
  CHECK(project(model, mean_col).cwiseAbs().maxCoeff() <= 1e-10);

  // Projected training columns have zero per-feature mean.
  const SampleMatrix projected = project(model, data);
  CHECK(projected.rowwise().mean().cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("project-then-reconstruct is exact on rank-d data") {
  SeededRng rng(37);
  const Index ambient = 9, rank = 3;
  const SampleMatrix factors = testutil::random_matrix(rng, ambient, rank);
  const SampleMatrix weights = testutil::random_matrix(rng, rank, 15);
  const SampleMatrix data = factors * weights;

  const PcaModel model = fit_pca(data, rank);
  const SampleMatrix rebuilt = (model.basis * project(model, data)).colwise() + model.mean;
  CHECK((rebuilt - data).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("projection is a contraction") {
  SeededRng rng(41);
  const SampleMatrix train = testutil::random_matrix(rng, 12, 9);
  const PcaModel model = fit_pca(train, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = testutil::random_vector(rng, 12);
    const SampleMatrix one = x;
    CHECK(project(model, one).col(0).norm() <= (x - model.mean).norm() + 1e-10);
  }
}

TEST_CASE("project rejects mismatched rows") {
  SeededRng rng(43);
  const PcaModel model = fit_pca(testutil::random_matrix(rng, 6, 10), 2);
  CHECK_THROWS_AS(project(model, testutil::random_matrix(rng, 5, 3)), std::invalid_argument);
}
