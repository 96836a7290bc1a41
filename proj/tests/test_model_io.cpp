#include "doctest.h"

#include <fstream>

#include "lccr/errors.hpp"
#include "lccr/model_io.hpp"
#include "test_helpers.hpp"

using namespace lccr;

namespace {

SavedModel sample_model(SeededRng& rng) {
  SampleMatrix samples = testutil::random_matrix(rng, 6, 8);
  const auto dict = make_labeled_dictionary(unit_normalize_columns(samples),
                                            {0, 0, 0, 1, 1, 1, 2, 2});
  CoderParams params;
  params.lambda = 3e-3;
  params.gamma = 0.4;
  params.metric = Metric::seuclidean;
  params.neighborhood = Neighborhood::nearest(2);

  SavedModel saved;
  saved.model = build_coder(dict, params, fit_pca(testutil::random_matrix(rng, 9, 12), 6));
  saved.label_names = {"ada", "grace", "edsger"};
  saved.image_height = 3;
  saved.image_width = 3;
  return saved;
}

}  // namespace

TEST_CASE("model round trip preserves everything the coder needs") {
  testutil::TempDir dir("lccr-modelio");
  SeededRng rng(3);
  const SavedModel saved = sample_model(rng);
  const auto path = dir.path / "model.bin";
  save_model(saved, path);
  const SavedModel loaded = load_model(path);

  CHECK(loaded.label_names == saved.label_names);
  CHECK(loaded.image_height == 3);
  CHECK(loaded.image_width == 3);
  CHECK(loaded.model.params.lambda == saved.model.params.lambda);
  CHECK(loaded.model.params.gamma == saved.model.params.gamma);
  CHECK(loaded.model.params.metric == Metric::seuclidean);
  REQUIRE(loaded.model.params.neighborhood.has_value());
  CHECK(loaded.model.params.neighborhood->k == 2);
  CHECK(loaded.model.dict.labels == saved.model.dict.labels);
  CHECK(loaded.model.dict.class_ranges.size() == 3);
  CHECK((loaded.model.dict.samples - saved.model.dict.samples).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.model.projection - saved.model.projection).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(loaded.model.pca.has_value());
  CHECK((loaded.model.pca->basis - saved.model.pca->basis).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(loaded.model.metric_state.per_feature_stddev.has_value());
  CHECK((*loaded.model.metric_state.per_feature_stddev -
         *saved.model.metric_state.per_feature_stddev)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // The loaded model codes identically.
  const Vector x = testutil::random_unit_vector(rng, 6);
  const auto a = code_one(saved.model, x);
  const auto b = code_one(loaded.model, x);
  CHECK((a.code.coeffs - b.code.coeffs).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.neighbor_indices == b.neighbor_indices);
}

TEST_CASE("eps-ball neighborhoods survive the round trip") {
  testutil::TempDir dir("lccr-modelio");
  SeededRng rng(7);
  SavedModel saved = sample_model(rng);
  saved.model.params.neighborhood = Neighborhood::ball(0.75);
  const auto path = dir.path / "model.bin";
  save_model(saved, path);
  const SavedModel loaded = load_model(path);
  REQUIRE(loaded.model.params.neighborhood.has_value());
  CHECK(loaded.model.params.neighborhood->rule == Neighborhood::Rule::eps_ball);
  CHECK(loaded.model.params.neighborhood->eps == 0.75);
}

TEST_CASE("model loading rejects junk") {
  testutil::TempDir dir("lccr-modelio");

  testutil::write_text(dir.path / "junk.bin", "definitely not a model");
  CHECK_THROWS_AS(load_model(dir.path / "junk.bin"), UnsupportedFormatError);

  CHECK_THROWS_AS(load_model(dir.path / "missing.bin"), CorruptFileError);

  // Valid magic, truncated body.
  testutil::write_text(dir.path / "trunc.bin", "LCCRMDL1");
  CHECK_THROWS_AS(load_model(dir.path / "trunc.bin"), CorruptFileError);

  // Valid header whose matrix payload is cut short.
  SeededRng rng(9);
  const SavedModel saved = sample_model(rng);
  const auto full_path = dir.path / "full.bin";
  save_model(saved, full_path);
  std::ifstream in(full_path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  testutil::write_text(dir.path / "cut.bin", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_model(dir.path / "cut.bin"), CorruptFileError);
}
