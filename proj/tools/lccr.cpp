#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lccr/errors.hpp"
#include "lccr/harness.hpp"
#include "lccr/preprocess.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void print_error(const std::string& kind, const std::string& message) {
  json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

int run_command(const std::string& config_path, const std::string& out_override) {
  lccr::ExperimentConfig config = lccr::load_config(config_path);
  if (!out_override.empty()) config.output_dir = out_override;
  if (config.output_dir.empty()) config.output_dir = "results";

  const auto records = lccr::run_experiment(config);
  int failed = 0;
  for (const auto& record : records)
    if (!record.error.empty()) ++failed;
  std::cout << "wrote " << records.size() << " records ("
            << failed << " failed cells) to " << config.output_dir.string() << "\n";
  return 0;
}

int corrupt_command(const std::string& in_path, const std::string& out_path,
                    const std::string& kind, double ratio, std::uint64_t seed,
                    const std::string& patch_path, double sigma_scale) {
  const lccr::PixelImage img = lccr::load_image(in_path);
  lccr::PixelImage out;
  if (kind == "noise") {
    out = lccr::add_white_noise(img, ratio, seed, sigma_scale);
  } else if (kind == "pixels") {
    out = lccr::corrupt_random_pixels(img, ratio, seed);
  } else if (kind == "block") {
    if (patch_path.empty())
      throw lccr::CorruptFileError("block corruption requires --patch");
    const lccr::PixelImage patch = lccr::load_image(patch_path);
    auto result = lccr::occlude_block(img, patch, ratio, seed);
    out = std::move(result.image);
    std::cout << json{{"block", {{"top", result.rect.top},
                                 {"left", result.rect.left},
                                 {"height", result.rect.height},
                                 {"width", result.rect.width}}}}
                     .dump()
              << "\n";
  } else {
    throw lccr::CorruptFileError("unknown corruption kind '" + kind + "'");
  }
  lccr::save_image(out, out_path);
  return 0;
}

int precompute_command(const std::string& manifest_path, const std::string& params_path,
                       const std::string& out_path) {
  const lccr::DatasetManifest manifest = lccr::load_manifest(manifest_path);
  const lccr::LabelMap label_map = lccr::build_label_map(manifest);

  json doc;
  try {
    doc = json::parse(std::ifstream(params_path));
  } catch (const json::exception& e) {
    throw lccr::CorruptFileError("params " + params_path + ": " + e.what());
  }

  lccr::CoderParams params;
  params.lambda = doc.value("lambda", 1e-3);
  params.gamma = doc.value("gamma", 0.0);
  params.metric = lccr::metric_from_string(doc.value("metric", std::string("euclidean")));
  params.expand_identity = doc.value("expand_identity", false);
  if (doc.contains("knn"))
    params.neighborhood = lccr::Neighborhood::nearest(doc.at("knn").get<int>());
  else if (doc.contains("eps"))
    params.neighborhood = lccr::Neighborhood::ball(doc.at("eps").get<double>());
  const auto pca_dim = doc.value("pca_dim", lccr::Index{0});

  // The whole manifest becomes the dictionary.
  std::vector<std::size_t> all(manifest.entries.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const lccr::LoadedColumns data = lccr::load_columns(manifest, label_map, all);

  std::optional<lccr::PcaModel> pca;
  lccr::SampleMatrix features = data.features;
  if (pca_dim > 0) {
    pca = lccr::fit_pca(features, pca_dim);
    features = lccr::project(*pca, features);
  }
  const lccr::LabeledDictionary dict =
      lccr::make_labeled_dictionary(lccr::unit_normalize_columns(features), data.labels);

  lccr::SavedModel saved;
  saved.model = lccr::build_coder(dict, params, pca);
  saved.label_names = label_map.names;
  saved.image_height = manifest.image_height;
  saved.image_width = manifest.image_width;
  lccr::save_model(saved, out_path);
  std::cout << "wrote model (" << dict.num_samples() << " columns, "
            << dict.num_classes() << " classes) to " << out_path << "\n";
  return 0;
}

int classify_command(const std::string& model_path, const std::vector<std::string>& images,
                     const std::string& rule_name) {
  const lccr::SavedModel saved = lccr::load_model(model_path);
  const lccr::ResidualRule rule = rule_name == "unregularized"
                                      ? lccr::ResidualRule::unregularized
                                      : lccr::ResidualRule::regularized;
  for (const std::string& path : images) {
    const lccr::PixelImage img = lccr::load_image(path);
    const lccr::ClassificationResult result = lccr::classify_image(saved, img, rule);

    json j;
    j["path"] = path;
    j["label"] = saved.label_names.at(result.predicted_label);
    j["class_id"] = result.predicted_label;
    std::vector<double> residuals(result.residuals.data(),
                                  result.residuals.data() + result.residuals.size());
    j["residuals"] = residuals;
    j["neighbors"] = result.neighbor_indices;
    std::cout << j.dump() << "\n";
  }
  return 0;
}

int report_command(const std::string& results_path, const std::string& out_path,
                   bool best_only) {
  const auto records = lccr::read_jsonl(results_path);
  const std::string csv = lccr::report_csv(records, best_only);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_path);
    if (!out) throw lccr::CorruptFileError("cannot write " + out_path);
    out << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locality-constrained collaborative representation coding and benchmarks"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  auto* run = app.add_subcommand("run", "Run an experiment sweep from a config file");
  run->add_option("config", config_path, "Experiment config JSON")->required();
  run->add_option("-o,--out", out_override, "Override the output directory");

  std::string corrupt_in, corrupt_out, corrupt_kind, corrupt_patch;
  double corrupt_ratio = 0.0, sigma_scale = 255.0;
  std::uint64_t corrupt_seed = 0;
  auto* corrupt = app.add_subcommand("corrupt", "Apply one corruption generator to an image");
  corrupt->add_option("input", corrupt_in, "Input image (PGM or CSV)")->required();
  corrupt->add_option("output", corrupt_out, "Output image path")->required();
  corrupt->add_option("--kind", corrupt_kind, "noise | pixels | block")->required();
  corrupt->add_option("--ratio", corrupt_ratio, "Corruption ratio")->required();
  corrupt->add_option("--seed", corrupt_seed, "Random seed");
  corrupt->add_option("--patch", corrupt_patch, "Patch image for block occlusion");
  corrupt->add_option("--sigma-scale", sigma_scale, "Noise scale (default 255)");

  std::string pre_manifest, pre_params, pre_out;
  auto* precompute = app.add_subcommand("precompute", "Build and persist a coder model");
  precompute->add_option("manifest", pre_manifest, "Dataset manifest JSON")->required();
  precompute->add_option("params", pre_params, "Coder params JSON")->required();
  precompute->add_option("-o,--out", pre_out, "Output model path")->required();

  std::string cls_model, cls_rule = "regularized";
  std::vector<std::string> cls_images;
  auto* classify = app.add_subcommand("classify", "Classify images against a saved model");
  classify->add_option("model", cls_model, "Saved model path")->required();
  classify->add_option("images", cls_images, "Image files")->required();
  classify->add_option("--residual-rule", cls_rule, "regularized | unregularized");

  std::string rep_results, rep_out;
  bool rep_best = false;
  auto* report = app.add_subcommand("report", "Pivot a results JSONL to an accuracy CSV");
  report->add_option("results", rep_results, "results.jsonl path")->required();
  report->add_option("-o,--out", rep_out, "Output CSV path (default stdout)");
  report->add_flag("--best", rep_best, "Best accuracy per method over the parameter grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;  // --help and friends
    print_error("usage", e.what());
    return 1;
  }

  try {
    if (*run) return run_command(config_path, out_override);
    if (*corrupt)
      return corrupt_command(corrupt_in, corrupt_out, corrupt_kind, corrupt_ratio, corrupt_seed,
                             corrupt_patch, sigma_scale);
    if (*precompute) return precompute_command(pre_manifest, pre_params, pre_out);
    if (*classify) return classify_command(cls_model, cls_images, cls_rule);
    if (*report) return report_command(rep_results, rep_out, rep_best);
  } catch (const lccr::Error& e) {
    print_error(e.kind() == lccr::Error::Kind::data ? "data" : "numeric", e.what());
    return e.kind() == lccr::Error::Kind::data ? 2 : 3;
  } catch (const std::exception& e) {
    print_error("numeric", e.what());
    return 3;
  }
  return 1;
}
