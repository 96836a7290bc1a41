#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "lccr/errors.hpp"
#include "lccr/harness.hpp"
#include "test_helpers.hpp"

using namespace lccr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string write_basic_config(const fs::path& dir, const fs::path& manifest,
                               const std::string& extra_methods = "") {
  std::string methods = R"([
    {"name": "lccr", "lambda": 0.01, "gamma": [0.0, 0.2], "knn": 3, "metric": "euclidean"},
    {"name": "crc_rls", "lambda": 0.01})" +
                        (extra_methods.empty() ? std::string("") : "," + extra_methods) + "]";
  json config;
  config["manifest"] = manifest.string();
  config["split"] = {{"mode", "per_class_count"}, {"train_per_class", 4}, {"seed", 7}};
  config["pca_dims"] = {0};
  config["methods"] = json::parse(methods);
  config["output_dir"] = (dir / "results").string();
  const auto path = dir / "config.json";
  testutil::write_text(path, config.dump(2));
  return path.string();
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// Strips volatile timing data so runs can be compared byte-for-byte.
std::string strip_timing(const std::string& jsonl_line) {
  json j = json::parse(jsonl_line);
  j.erase("timing");
  return j.dump();
}

}  // namespace

TEST_CASE("run_experiment: crc_rls record equals the lccr gamma-0 record") {
  testutil::TempDir dir("lccr-harness");
  const auto manifest = testutil::write_pgm_dataset(dir.path, 101, 3, 8, 8, 6);
  const auto config_path = write_basic_config(dir.path, manifest);

  const ExperimentConfig config = load_config(config_path);
  REQUIRE(config.methods.size() == 3);  // lccr gamma 0, lccr gamma 0.2, crc_rls

  const auto records = run_experiment(config);
  REQUIRE(records.size() == 3);
  for (const auto& r : records) CHECK(r.error.empty());

  const ResultRecord* lccr_gamma0 = nullptr;
  const ResultRecord* crc = nullptr;
  for (const auto& r : records) {
    if (r.method == "lccr" && r.params.gamma == 0.0) lccr_gamma0 = &r;
    if (r.method == "crc_rls") crc = &r;
  }
  REQUIRE(lccr_gamma0 != nullptr);
  REQUIRE(crc != nullptr);
  CHECK(lccr_gamma0->accuracy == crc->accuracy);
  CHECK(lccr_gamma0->correct == crc->correct);
  CHECK(lccr_gamma0->confusion == crc->confusion);
  CHECK(lccr_gamma0->total == crc->total);

  // Clean synthetic data with distinct class templates should classify well.
  CHECK(crc->accuracy >= 0.9);
}

TEST_CASE("run_experiment is deterministic modulo timing fields") {
  testutil::TempDir dir("lccr-determinism");
  const auto manifest = testutil::write_pgm_dataset(dir.path, 303, 3, 6, 6, 6);

  json config;
  config["manifest"] = manifest.string();
  config["split"] = {{"mode", "per_class_count"}, {"train_per_class", 3}, {"seed", 5}};
  config["pca_dims"] = {4, 0};
  config["methods"] = json::array({json{{"name", "lccr"},
                                        {"lambda", 0.005},
                                        {"gamma", 0.3},
                                        {"knn", 2},
                                        {"metric", "cityblock"}}});
  config["corruption"] = {{"kind", "pixels"}, {"ratios", {0.2}}, {"seed", 99}};
  config["output_dir"] = (dir.path / "out").string();
  const auto config_path = dir.path / "config.json";
  testutil::write_text(config_path, config.dump());

  const ExperimentConfig parsed = load_config(config_path);
  run_experiment(parsed);
  const auto first = read_lines(dir.path / "out" / "results.jsonl");
  run_experiment(parsed);
  const auto second = read_lines(dir.path / "out" / "results.jsonl");

  REQUIRE(first.size() == second.size());
  REQUIRE(!first.empty());
  for (std::size_t i = 0; i < first.size(); ++i)
    CHECK(strip_timing(first[i]) == strip_timing(second[i]));
}

TEST_CASE("run_experiment sweeps gamma into one record per value") {
  testutil::TempDir dir("lccr-sweep");
  const auto manifest = testutil::write_pgm_dataset(dir.path, 404, 2, 6, 6, 5);

  json config;
  config["manifest"] = manifest.string();
  config["split"] = {{"mode", "per_class_count"}, {"train_per_class", 3}, {"seed", 1}};
  config["pca_dims"] = {0};
  config["methods"] = json::array(
      {json{{"name", "lccr"},
            {"lambda", 0.005},
            {"gamma", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}},
            {"knn", 3}}});
  const auto config_path = dir.path / "config.json";
  testutil::write_text(config_path, config.dump());

  const auto records = run_experiment(load_config(config_path));
  REQUIRE(records.size() == 11);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].error.empty());
    CHECK(records[i].params.gamma == doctest::Approx(0.1 * i).epsilon(1e-12));
  }
}

TEST_CASE("failed cells are recorded without aborting the sweep") {
  testutil::TempDir dir("lccr-failures");
  const auto manifest = testutil::write_pgm_dataset(dir.path, 505, 2, 5, 4, 4);

  json config;
  config["manifest"] = manifest.string();
  config["split"] = {{"mode", "per_class_count"}, {"train_per_class", 3}, {"seed", 2}};
  // 4x4 images with 6 training columns: dim 100 is out of range, dim 3 fine.
  config["pca_dims"] = {100, 3};
  config["methods"] = json::array({json{{"name", "crc_rls"}, {"lambda", 0.01}}});
  const auto config_path = dir.path / "config.json";
  testutil::write_text(config_path, config.dump());

  const auto records = run_experiment(load_config(config_path));
  REQUIRE(records.size() == 2);
  CHECK(!records[0].error.empty());
  CHECK(records[0].accuracy == 0.0);
  CHECK(records[1].error.empty());
  CHECK(records[1].total > 0);
}

TEST_CASE("partitioned records vote across blocks") {
  testutil::TempDir dir("lccr-partition");
  const auto manifest = testutil::write_pgm_dataset(dir.path, 606, 3, 8, 8, 6);

  json config;
  config["manifest"] = manifest.string();
  config["split"] = {{"mode", "per_class_count"}, {"train_per_class", 4}, {"seed", 3}};
  config["pca_dims"] = {0};
  config["methods"] = json::array({json{{"name", "crc_rls"}, {"lambda", 0.01}}});
  config["partition"] = {{"rows", 2}, {"cols", 2}};
  const auto config_path = dir.path / "config.json";
  testutil::write_text(config_path, config.dump());

  const auto records = run_experiment(load_config(config_path));
  REQUIRE(records.size() == 2);  // holistic + partitioned
  CHECK(!records[0].partitioned);
  CHECK(records[1].partitioned);
  CHECK(records[1].scheme.rows == 2);
  CHECK(records[1].error.empty());
  CHECK(records[1].accuracy >= 0.8);
}

namespace {

// Dataset of three nonnegative 2-D subspaces of R^48, materialized as 8x6
// CSV "images" so it runs through the full file-backed pipeline.
fs::path write_subspace_csv_dataset(const fs::path& dir, std::uint64_t seed) {
  SeededRng rng(seed);
  std::string entries;
  for (int c = 0; c < 3; ++c) {
    Eigen::MatrixXd basis(48, 2);
    for (Index i = 0; i < basis.size(); ++i) basis.data()[i] = std::abs(rng.normal());
    for (int k = 0; k < 30; ++k) {
      Vector coeff(2);
      coeff << std::abs(rng.normal()) + 0.2, std::abs(rng.normal()) + 0.2;
      Vector point = basis * coeff;
      point *= 250.0 / point.maxCoeff();
      PixelImage img = unflatten(point, 8, 6);
      const std::string name = "c" + std::to_string(c) + "_" + std::to_string(k) + ".csv";
      save_image(img, dir / name);
      if (!entries.empty()) entries += ",";
      entries += "{\"path\":\"" + name + "\",\"label\":\"class" + std::to_string(c) + "\"}";
    }
  }
  const auto manifest_path = dir / "manifest.json";
  testutil::write_text(manifest_path,
                       "{\"name\":\"subspaces\",\"image_size\":[8,6],\"entries\":[" + entries +
                           "]}");
  return manifest_path;
}

}  // namespace

TEST_CASE("run_experiment solves the synthetic subspace benchmark") {
  testutil::TempDir dir("lccr-subspace");
  const auto manifest = write_subspace_csv_dataset(dir.path, 909);

  json config;
  config["manifest"] = manifest.string();
  config["split"] = {{"mode", "per_class_count"}, {"train_per_class", 15}, {"seed", 4}};
  config["pca_dims"] = {0};
  config["methods"] = json::array(
      {json{{"name", "lccr"}, {"lambda", 1e-3}, {"gamma", 0.2}, {"knn", 3}}});
  const auto config_path = dir.path / "config.json";
  testutil::write_text(config_path, config.dump());

  const auto records = run_experiment(load_config(config_path));
  REQUIRE(records.size() == 1);
  CHECK(records[0].error.empty());
  CHECK(records[0].total == 45);
  CHECK(records[0].accuracy >= 0.99);
}

TEST_CASE("eps-ball neighborhoods and the plain residual rule run end to end") {
  testutil::TempDir dir("lccr-epsball");
  const auto manifest = testutil::write_pgm_dataset(dir.path, 111, 3, 6, 8, 6);

  json config;
  config["manifest"] = manifest.string();
  config["split"] = {{"mode", "per_class_count"}, {"train_per_class", 4}, {"seed", 6}};
  config["pca_dims"] = {0};
  config["methods"] = json::array({json{{"name", "lccr"},
                                        {"lambda", 0.005},
                                        {"gamma", 0.4},
                                        {"eps", {0.3, 1.5}},
                                        {"metric", "euclidean"}}});
  config["residual_rule"] = "unregularized";
  const auto config_path = dir.path / "config.json";
  testutil::write_text(config_path, config.dump());

  const auto records = run_experiment(load_config(config_path));
  REQUIRE(records.size() == 2);
  for (const auto& r : records) {
    CHECK(r.error.empty());
    CHECK(r.residual_rule == "unregularized");
    REQUIRE(r.params.neighborhood.has_value());
    CHECK(r.params.neighborhood->rule == Neighborhood::Rule::eps_ball);
    CHECK(r.accuracy > 0.5);
  }
}

TEST_CASE("report_csv pivots methods by dimension and ratio") {
  std::vector<ResultRecord> records;
  for (double ratio : {0.1, 0.3}) {
    for (Index dim : {Index{4}, Index{0}}) {
      ResultRecord r;
      r.method = "lccr";
      r.params.metric = Metric::cityblock;
      r.params.lambda = 0.005;
      r.params.gamma = 0.2;
      r.params.neighborhood = Neighborhood::nearest(3);
      r.pca_dim = dim;
      r.corruption_kind = "pixels";
      r.corruption_ratio = ratio;
      r.accuracy = 0.5 + 0.1 * ratio + (dim == 0 ? 0.01 : 0.0);
      records.push_back(r);
    }
  }
  ResultRecord crc = records[0];
  crc.method = "crc_rls";
  crc.params.neighborhood.reset();
  crc.accuracy = 0.4;
  records.push_back(crc);

  const std::string csv = report_csv(records, false);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "method,dim4:pixels@0.1,dim0:pixels@0.1,dim4:pixels@0.3,dim0:pixels@0.3");
  int rows = 0;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);  // one lccr row (single param set) + one crc row

  // --best collapses parameter suffixes.
  const std::string best = report_csv(records, true);
  CHECK(best.find("lccr+cityblock,") != std::string::npos);
}

TEST_CASE("classify_image maps a raw image through the saved pipeline") {
  testutil::TempDir dir("lccr-model");
  const auto manifest_path = testutil::write_pgm_dataset(dir.path, 707, 3, 4, 6, 5);
  const DatasetManifest manifest = load_manifest(manifest_path);
  const LabelMap labels = build_label_map(manifest);

  std::vector<std::size_t> all(manifest.entries.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const LoadedColumns data = load_columns(manifest, labels, all);

  SavedModel saved;
  CoderParams params;
  params.lambda = 1e-4;
  saved.model = build_coder(
      make_labeled_dictionary(unit_normalize_columns(data.features), data.labels), params);
  saved.label_names = labels.names;
  saved.image_height = manifest.image_height;
  saved.image_width = manifest.image_width;

  // Memorization: each training image classifies as its own label.
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    const ClassificationResult result = classify_image(saved, data.images[i]);
    CHECK(result.predicted_label == data.labels[i]);
  }

  // Round-trip through the binary model format.
  const auto model_path = dir.path / "model.bin";
  save_model(saved, model_path);
  const SavedModel loaded = load_model(model_path);
  CHECK(loaded.label_names == saved.label_names);
  CHECK((loaded.model.projection - saved.model.projection).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.model.dict.samples - saved.model.dict.samples).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    const ClassificationResult result = classify_image(loaded, data.images[i]);
    CHECK(result.predicted_label == data.labels[i]);
  }

  PixelImage wrong;
  wrong.pixels = Eigen::MatrixXd::Constant(3, 3, 1.0);
  CHECK_THROWS_AS(classify_image(saved, wrong), SizeMismatchError);
}

#ifdef LCCR_CLI_PATH
TEST_CASE("command-line interface smoke test") {
  testutil::TempDir dir("lccr-cli");
  const auto manifest = testutil::write_pgm_dataset(dir.path, 808, 3, 6, 8, 6);
  const std::string cli = LCCR_CLI_PATH;

  auto shell = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " >> " + (dir.path / "cli.log").string() + " 2>&1";
    return std::system(cmd.c_str());
  };

  // run + report
  const auto config_path = write_basic_config(dir.path, manifest);
  CHECK(shell("run " + config_path) == 0);
  CHECK(fs::exists(dir.path / "results" / "results.jsonl"));
  CHECK(fs::exists(dir.path / "results" / "results.csv"));
  CHECK(fs::exists(dir.path / "results" / "split.json"));
  CHECK(shell("report " + (dir.path / "results" / "results.jsonl").string() + " -o " +
              (dir.path / "report.csv").string() + " --best") == 0);
  CHECK(fs::exists(dir.path / "report.csv"));

  // corrupt
  const std::string img = (dir.path / "s0_0.pgm").string();
  CHECK(shell("corrupt " + img + " " + (dir.path / "noisy.pgm").string() +
              " --kind pixels --ratio 0.3 --seed 5") == 0);
  CHECK(fs::exists(dir.path / "noisy.pgm"));

  // precompute + classify: a training image keeps its own label.
  testutil::write_text(dir.path / "params.json",
                       R"({"lambda": 1e-4, "gamma": 0.0, "metric": "euclidean"})");
  CHECK(shell("precompute " + manifest.string() + " " + (dir.path / "params.json").string() +
              " -o " + (dir.path / "model.bin").string()) == 0);

  const std::string out = (dir.path / "classify.json").string();
  const std::string cmd = cli + " classify " + (dir.path / "model.bin").string() + " " + img +
                          " > " + out + " 2>/dev/null";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const auto lines = read_lines(out);
  REQUIRE(lines.size() == 1);
  const json result = json::parse(lines[0]);
  CHECK(result.at("label").get<std::string>() == "subject0");

  // Errors surface as JSON with a data exit code.
  const int rc = std::system((cli + " classify /nonexistent.bin " + img + " 2> " +
                              (dir.path / "err.json").string() + " >/dev/null")
                                 .c_str());
  CHECK(WEXITSTATUS(rc) == 2);
  const auto err_lines = read_lines(dir.path / "err.json");
  REQUIRE(!err_lines.empty());
  CHECK(json::parse(err_lines[0]).contains("error"));
}
#endif
