#include "lccr/harness.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"
#include "lccr/errors.hpp"
#include "lccr/preprocess.hpp"
#include "lccr/rng.hpp"

namespace lccr {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> default_lambda_grid() { return {1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2}; }

std::vector<double> default_gamma_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);
  return grid;
}

std::vector<int> default_k_grid() {
  std::vector<int> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(k);
  return grid;
}

template <typename T>
std::vector<T> list_or_scalar(const json& j, const std::string& key) {
  const json& field = j.at(key);
  if (field.is_array()) return field.get<std::vector<T>>();
  return {field.get<T>()};
}

std::vector<MethodSpec> expand_method(const json& spec) {
  const std::string name = spec.at("name").get<std::string>();
  if (name != "lccr" && name != "crc_rls" && name != "lrc")
    throw CorruptFileError("unknown method '" + name + "' (expected lccr, crc_rls, or lrc)");

  std::vector<double> lambdas;
  if (name == "lrc")
    lambdas = {0.0};
  else if (spec.contains("lambda"))
    lambdas = list_or_scalar<double>(spec, "lambda");
  else
    lambdas = default_lambda_grid();

  std::vector<double> gammas;
  if (name == "lccr")
    gammas = spec.contains("gamma") ? list_or_scalar<double>(spec, "gamma") : default_gamma_grid();
  else
    gammas = {0.0};

  std::vector<Metric> metrics;
  if (spec.contains("metric"))
    for (const std::string& m : list_or_scalar<std::string>(spec, "metric"))
      metrics.push_back(metric_from_string(m));
  else
    metrics = {Metric::euclidean};

  std::vector<std::optional<Neighborhood>> neighborhoods;
  if (name == "lccr") {
    if (spec.contains("knn") && spec.contains("eps"))
      throw CorruptFileError("method '" + name + "' specifies both knn and eps");
    if (spec.contains("eps"))
      for (double eps : list_or_scalar<double>(spec, "eps"))
        neighborhoods.emplace_back(Neighborhood::ball(eps));
    else {
      const std::vector<int> ks =
          spec.contains("knn") ? list_or_scalar<int>(spec, "knn") : default_k_grid();
      for (int k : ks) neighborhoods.emplace_back(Neighborhood::nearest(k));
    }
  } else {
    neighborhoods.emplace_back(std::nullopt);
  }

  const bool expand_identity = spec.value("expand_identity", false);

  std::vector<MethodSpec> grid;
  for (Metric metric : metrics)
    for (double lambda : lambdas)
      for (double gamma : gammas)
        for (const auto& nb : neighborhoods) {
          MethodSpec m;
          m.name = name;
          m.params.lambda = lambda;
          m.params.gamma = gamma;
          m.params.metric = metric;
          m.params.neighborhood = nb;
          m.params.expand_identity = expand_identity;
          validate(m.params);
          grid.push_back(std::move(m));
        }
  return grid;
}

fs::path resolve_relative(const fs::path& base_dir, const fs::path& p) {
  if (p.is_absolute()) return p;
  return base_dir / p;
}

json params_to_json(const CoderParams& params) {
  json j;
  j["lambda"] = params.lambda;
  j["gamma"] = params.gamma;
  j["metric"] = to_string(params.metric);
  j["expand_identity"] = params.expand_identity;
  if (params.neighborhood) {
    if (params.neighborhood->rule == Neighborhood::Rule::knn)
      j["neighborhood"] = {{"knn", params.neighborhood->k}};
    else
      j["neighborhood"] = {{"eps_ball", params.neighborhood->eps}};
  } else {
    j["neighborhood"] = nullptr;
  }
  return j;
}

CoderParams params_from_json(const json& j) {
  CoderParams params;
  params.lambda = j.at("lambda").get<double>();
  params.gamma = j.at("gamma").get<double>();
  params.metric = metric_from_string(j.at("metric").get<std::string>());
  params.expand_identity = j.at("expand_identity").get<bool>();
  if (j.contains("neighborhood") && !j.at("neighborhood").is_null()) {
    const json& nb = j.at("neighborhood");
    if (nb.contains("knn"))
      params.neighborhood = Neighborhood::nearest(nb.at("knn").get<int>());
    else
      params.neighborhood = Neighborhood::ball(nb.at("eps_ball").get<double>());
  }
  return params;
}

std::string format_double(double value) {
  std::ostringstream out;
  out << std::setprecision(12) << value;
  return out.str();
}

// Stable display key: lccr is reported per metric, expansion marked [DI].
std::string display_method(const ResultRecord& r) {
  std::string key = r.method;
  if (r.method == "lccr") key += "+" + to_string(r.params.metric);
  if (r.params.expand_identity) key += "[DI]";
  return key;
}

std::string params_suffix(const ResultRecord& r) {
  std::ostringstream out;
  out << "(l=" << format_double(r.params.lambda) << ";g=" << format_double(r.params.gamma);
  if (r.params.neighborhood) {
    if (r.params.neighborhood->rule == Neighborhood::Rule::knn)
      out << ";K=" << r.params.neighborhood->k;
    else
      out << ";eps=" << format_double(r.params.neighborhood->eps);
  }
  out << ")";
  return out.str();
}

std::string column_key(const ResultRecord& r) {
  std::ostringstream out;
  out << "dim" << r.pca_dim;
  if (r.partitioned) out << "part" << r.scheme.rows << "x" << r.scheme.cols;
  if (!r.corruption_kind.empty())
    out << ":" << r.corruption_kind << "@" << format_double(r.corruption_ratio);
  return out.str();
}

}  // namespace

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CorruptFileError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw CorruptFileError("config " + path.string() + ": " + e.what());
  }
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

  ExperimentConfig config;
  try {
    config.manifest_path = resolve_relative(base, doc.at("manifest").get<std::string>());

    const json& sp = doc.at("split");
    const std::string mode = sp.at("mode").get<std::string>();
    if (mode == "per_class_count") {
      config.split.mode = SplitSpec::Mode::per_class_count;
      config.split.train_per_class = sp.at("train_per_class").get<int>();
    } else if (mode == "per_class_fraction") {
      config.split.mode = SplitSpec::Mode::per_class_fraction;
      config.split.train_fraction = sp.at("train_fraction").get<double>();
    } else if (mode == "by_tag") {
      config.split.mode = SplitSpec::Mode::by_tag;
      config.split.test_tag = sp.at("test_tag").get<std::string>();
    } else {
      throw CorruptFileError("unknown split mode '" + mode + "'");
    }
    config.split.seed = sp.value("seed", std::uint64_t{0});

    config.pca_dims = doc.value("pca_dims", std::vector<Index>{0});
    if (config.pca_dims.empty()) throw CorruptFileError("pca_dims must be non-empty");
    for (Index dim : config.pca_dims)
      if (dim < 0) throw CorruptFileError("pca_dims entries must be >= 0 (0 = raw space)");

    for (const json& m : doc.at("methods")) {
      auto expanded = expand_method(m);
      config.methods.insert(config.methods.end(), expanded.begin(), expanded.end());
    }
    if (config.methods.empty()) throw CorruptFileError("methods must be non-empty");

    if (doc.contains("corruption") && !doc.at("corruption").is_null()) {
      CorruptionSpec corr;
      const json& cj = doc.at("corruption");
      corr.kind = cj.at("kind").get<std::string>();
      if (corr.kind != "noise" && corr.kind != "pixels" && corr.kind != "block")
        throw CorruptFileError("unknown corruption kind '" + corr.kind + "'");
      corr.ratios = cj.at("ratios").get<std::vector<double>>();
      if (corr.ratios.empty()) throw CorruptFileError("corruption ratios must be non-empty");
      corr.seed = cj.value("seed", std::uint64_t{0});
      corr.sigma_scale = cj.value("sigma_scale", 255.0);
      if (cj.contains("patch"))
        corr.patch_path = resolve_relative(base, cj.at("patch").get<std::string>());
      else if (corr.kind == "block")
        throw CorruptFileError("block corruption requires a patch image");
      config.corruption = std::move(corr);
    }

    if (doc.contains("partition") && !doc.at("partition").is_null()) {
      PartitionScheme scheme;
      scheme.rows = doc.at("partition").at("rows").get<int>();
      scheme.cols = doc.at("partition").at("cols").get<int>();
      if (scheme.rows < 1 || scheme.cols < 1)
        throw CorruptFileError("partition grid must be at least 1x1");
      config.partition = scheme;
    }

    const std::string rule = doc.value("residual_rule", std::string("regularized"));
    if (rule == "regularized")
      config.residual_rule = ResidualRule::regularized;
    else if (rule == "unregularized")
      config.residual_rule = ResidualRule::unregularized;
    else
      throw CorruptFileError("unknown residual_rule '" + rule + "'");

    if (doc.contains("output_dir"))
      config.output_dir = doc.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw CorruptFileError("config " + path.string() + ": " + e.what());
  }
  return config;
}

std::string record_to_jsonl(const ResultRecord& record) {
  json j;
  j["method"] = record.method;
  j["params"] = params_to_json(record.params);
  j["pca_dim"] = record.pca_dim;
  if (record.corruption_kind.empty()) {
    j["corruption"] = nullptr;
  } else {
    j["corruption"] = {{"kind", record.corruption_kind},
                       {"ratio", record.corruption_ratio},
                       {"seed", record.corruption_seed}};
  }
  j["partitioned"] = record.partitioned;
  if (record.partitioned)
    j["scheme"] = {{"rows", record.scheme.rows}, {"cols", record.scheme.cols}};
  j["residual_rule"] = record.residual_rule;
  j["accuracy"] = record.accuracy;
  j["correct"] = record.correct;
  j["total"] = record.total;
  j["confusion"] = record.confusion;
  j["timing"] = {{"precompute_seconds", record.precompute_seconds},
                 {"per_query_mean_seconds", record.per_query_mean_seconds}};
  j["split_seed"] = record.split_seed;
  if (!record.error.empty()) j["error"] = record.error;
  return j.dump();
}

std::vector<ResultRecord> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CorruptFileError("cannot open " + path.string());

  std::vector<ResultRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      ResultRecord r;
      r.method = j.at("method").get<std::string>();
      r.params = params_from_json(j.at("params"));
      r.pca_dim = j.at("pca_dim").get<Index>();
      if (!j.at("corruption").is_null()) {
        r.corruption_kind = j.at("corruption").at("kind").get<std::string>();
        r.corruption_ratio = j.at("corruption").at("ratio").get<double>();
        r.corruption_seed = j.at("corruption").at("seed").get<std::uint64_t>();
      }
      r.partitioned = j.at("partitioned").get<bool>();
      if (r.partitioned) {
        r.scheme.rows = j.at("scheme").at("rows").get<int>();
        r.scheme.cols = j.at("scheme").at("cols").get<int>();
      }
      r.residual_rule = j.at("residual_rule").get<std::string>();
      r.accuracy = j.at("accuracy").get<double>();
      r.correct = j.at("correct").get<int>();
      r.total = j.at("total").get<int>();
      r.confusion = j.at("confusion").get<std::vector<std::array<int, 3>>>();
      r.precompute_seconds = j.at("timing").at("precompute_seconds").get<double>();
      r.per_query_mean_seconds = j.at("timing").at("per_query_mean_seconds").get<double>();
      r.split_seed = j.at("split_seed").get<std::uint64_t>();
      if (j.contains("error")) r.error = j.at("error").get<std::string>();
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw CorruptFileError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::string report_csv(const std::vector<ResultRecord>& records, bool best_only) {
  std::map<std::string, std::map<std::string, double>> table;
  std::map<std::string, int> column_order_hint;
  int next_hint = 0;

  for (const ResultRecord& r : records) {
    if (!r.error.empty()) continue;
    std::string row = display_method(r);
    if (!best_only) row += params_suffix(r);
    const std::string col = column_key(r);
    if (!column_order_hint.count(col)) column_order_hint[col] = next_hint++;
    auto& cell = table[row];
    auto it = cell.find(col);
    if (it == cell.end() || r.accuracy > it->second) cell[col] = r.accuracy;
  }

  std::vector<std::pair<int, std::string>> columns;
  for (const auto& [col, hint] : column_order_hint) columns.push_back({hint, col});
  std::sort(columns.begin(), columns.end());

  std::ostringstream out;
  out << "method";
  for (const auto& [hint, col] : columns) out << "," << col;
  out << "\n";
  for (const auto& [row, cells] : table) {
    out << row;
    for (const auto& [hint, col] : columns) {
      out << ",";
      auto it = cells.find(col);
      if (it != cells.end()) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(6) << it->second;
        out << cell.str();
      }
    }
    out << "\n";
  }
  return out.str();
}

ClassificationResult classify_image(const SavedModel& saved, const PixelImage& img,
                                    ResidualRule rule) {
  if (saved.image_height > 0 &&
      (img.height() != saved.image_height || img.width() != saved.image_width))
    throw SizeMismatchError("image is " + std::to_string(img.height()) + "x" +
                            std::to_string(img.width()) + ", model expects " +
                            std::to_string(saved.image_height) + "x" +
                            std::to_string(saved.image_width));

  SampleMatrix column = flatten(img);
  if (saved.model.pca) column = project(*saved.model.pca, column);
  column = unit_normalize_columns(column);
  return rule == ResidualRule::regularized
             ? classify(saved.model, column.col(0))
             : classify_unregularized(saved.model, column.col(0));
}

namespace {

struct OutputFiles {
  std::optional<std::ofstream> jsonl;
  std::optional<std::ofstream> csv;
};

const char* kCsvHeader =
    "method,metric,lambda,gamma,knn,eps,expand_identity,pca_dim,corruption,ratio,"
    "partitioned,residual_rule,accuracy,correct,total,precompute_seconds,"
    "per_query_mean_seconds,split_seed,corruption_seed,error\n";

std::string record_to_csv_row(const ResultRecord& r) {
  std::ostringstream out;
  out << r.method << "," << to_string(r.params.metric) << "," << format_double(r.params.lambda)
      << "," << format_double(r.params.gamma) << ",";
  if (r.params.neighborhood && r.params.neighborhood->rule == Neighborhood::Rule::knn)
    out << r.params.neighborhood->k;
  out << ",";
  if (r.params.neighborhood && r.params.neighborhood->rule == Neighborhood::Rule::eps_ball)
    out << format_double(r.params.neighborhood->eps);
  out << "," << (r.params.expand_identity ? 1 : 0) << "," << r.pca_dim << ","
      << r.corruption_kind << "," << format_double(r.corruption_ratio) << ","
      << (r.partitioned ? 1 : 0) << "," << r.residual_rule << ","
      << format_double(r.accuracy) << "," << r.correct << "," << r.total << ","
      << format_double(r.precompute_seconds) << "," << format_double(r.per_query_mean_seconds)
      << "," << r.split_seed << "," << r.corruption_seed << ",";
  std::string sanitized = r.error;
  for (char& c : sanitized)
    if (c == ',' || c == '\n') c = ';';
  out << sanitized << "\n";
  return out.str();
}

std::string residual_rule_name(ResidualRule rule) {
  return rule == ResidualRule::regularized ? "regularized" : "unregularized";
}

// Classifies every column of X, filling accuracy and the sparse confusion
// counts of `record`.
void score_queries(const CoderModel& model, const SampleMatrix& X,
                   const std::vector<int>& truth, ResidualRule rule, ResultRecord& record) {
  std::map<std::pair<int, int>, int> confusion;
  int correct = 0;
  const auto start = Clock::now();
  for (Index j = 0; j < X.cols(); ++j) {
    const ClassificationResult result = rule == ResidualRule::regularized
                                            ? classify(model, X.col(j))
                                            : classify_unregularized(model, X.col(j));
    if (result.predicted_label == truth[j]) ++correct;
    ++confusion[{truth[j], result.predicted_label}];
  }
  const double elapsed = seconds_since(start);

  record.correct = correct;
  record.total = static_cast<int>(X.cols());
  record.accuracy = record.total > 0 ? static_cast<double>(correct) / record.total : 0.0;
  record.per_query_mean_seconds = record.total > 0 ? elapsed / record.total : 0.0;
  for (const auto& [key, count] : confusion)
    record.confusion.push_back({key.first, key.second, count});
}

}  // namespace

std::vector<ResultRecord> run_experiment(const ExperimentConfig& config) {
  std::vector<ResultRecord> records;
  OutputFiles outputs;
  if (!config.output_dir.empty()) {
    fs::create_directories(config.output_dir);
    outputs.jsonl.emplace(config.output_dir / "results.jsonl",
                          std::ios::out | std::ios::trunc);
    outputs.csv.emplace(config.output_dir / "results.csv", std::ios::out | std::ios::trunc);
    if (!*outputs.jsonl || !*outputs.csv)
      throw CorruptFileError("cannot write results under " + config.output_dir.string());
    *outputs.csv << kCsvHeader;
  }

  auto emit = [&](ResultRecord record) {
    if (outputs.jsonl) {
      *outputs.jsonl << record_to_jsonl(record) << "\n";
      outputs.jsonl->flush();
    }
    if (outputs.csv) {
      *outputs.csv << record_to_csv_row(record);
      outputs.csv->flush();
    }
    records.push_back(std::move(record));
  };

  const DatasetManifest manifest = load_manifest(config.manifest_path);
  const LabelMap label_map = build_label_map(manifest);
  const Split the_split = split(manifest, config.split);

  if (!config.output_dir.empty()) {
    json sj;
    sj["seed"] = config.split.seed;
    sj["train"] = the_split.train;
    sj["test"] = the_split.test;
    std::vector<std::string> train_paths, test_paths;
    for (std::size_t i : the_split.train) train_paths.push_back(manifest.entries[i].path);
    for (std::size_t i : the_split.test) test_paths.push_back(manifest.entries[i].path);
    sj["train_paths"] = train_paths;
    sj["test_paths"] = test_paths;
    std::ofstream(config.output_dir / "split.json") << sj.dump(2) << "\n";
  }

  const LoadedColumns train = load_columns(manifest, label_map, the_split.train);
  const LoadedColumns test = load_columns(manifest, label_map, the_split.test);

  std::optional<PixelImage> patch;
  if (config.corruption && config.corruption->kind == "block")
    patch = load_image(config.corruption->patch_path);

  // Corruption lives in raw pixel space, so one corrupted test set per ratio
  // serves every dimension and method.
  std::map<double, std::vector<PixelImage>> corrupted_cache;
  auto corrupted_test_images = [&](double ratio) -> const std::vector<PixelImage>& {
    auto it = corrupted_cache.find(ratio);
    if (it != corrupted_cache.end()) return it->second;
    const CorruptionSpec& corr = *config.corruption;
    std::vector<PixelImage> images;
    images.reserve(test.images.size());
    for (std::size_t i = 0; i < test.images.size(); ++i) {
      const std::uint64_t seed = derive_seed(corr.seed, the_split.test[i]);
      if (corr.kind == "noise")
        images.push_back(add_white_noise(test.images[i], ratio, seed, corr.sigma_scale));
      else if (corr.kind == "pixels")
        images.push_back(corrupt_random_pixels(test.images[i], ratio, seed));
      else
        images.push_back(occlude_block(test.images[i], *patch, ratio, seed).image);
    }
    return corrupted_cache.emplace(ratio, std::move(images)).first->second;
  };

  auto raw_features = [&](const std::vector<PixelImage>& images) {
    SampleMatrix X(manifest.image_height * manifest.image_width,
                   static_cast<Index>(images.size()));
    for (std::size_t i = 0; i < images.size(); ++i)
      X.col(static_cast<Index>(i)) = flatten(images[i]);
    return X;
  };

  struct CorruptionCell {
    std::string kind;
    double ratio = 0.0;
  };
  std::vector<CorruptionCell> cells;
  if (config.corruption)
    for (double ratio : config.corruption->ratios)
      cells.push_back({config.corruption->kind, ratio});
  else
    cells.push_back({"", 0.0});

  auto base_record = [&](const MethodSpec& method, Index dim, const CorruptionCell& cell) {
    ResultRecord record;
    record.method = method.name;
    record.params = method.params;
    record.pca_dim = dim;
    record.corruption_kind = cell.kind;
    record.corruption_ratio = cell.ratio;
    record.residual_rule = residual_rule_name(config.residual_rule);
    record.split_seed = config.split.seed;
    record.corruption_seed = config.corruption ? config.corruption->seed : 0;
    return record;
  };

  // Holistic sweep: pca dim x method x corruption ratio.
  for (Index dim : config.pca_dims) {
    std::optional<PcaModel> pca;
    LabeledDictionary dict;
    std::string stage_error;
    try {
      if (dim > 0) pca = fit_pca(train.features, dim);
      const SampleMatrix train_space =
          unit_normalize_columns(pca ? project(*pca, train.features) : train.features);
      dict = make_labeled_dictionary(train_space, train.labels);
    } catch (const std::exception& e) {
      stage_error = e.what();
    }

    for (const MethodSpec& method : config.methods) {
      if (!stage_error.empty()) {
        for (const CorruptionCell& cell : cells) {
          ResultRecord record = base_record(method, dim, cell);
          record.error = stage_error;
          emit(std::move(record));
        }
        continue;
      }

      CoderModel model;
      double precompute_seconds = 0.0;
      try {
        const auto start = Clock::now();
        model = build_coder(dict, method.params, pca);
        precompute_seconds = seconds_since(start);
      } catch (const std::exception& e) {
        for (const CorruptionCell& cell : cells) {
          ResultRecord record = base_record(method, dim, cell);
          record.error = e.what();
          emit(std::move(record));
        }
        continue;
      }

      for (const CorruptionCell& cell : cells) {
        ResultRecord record = base_record(method, dim, cell);
        record.precompute_seconds = precompute_seconds;
        try {
          const SampleMatrix raw =
              cell.kind.empty() ? raw_features(test.images)
                                : raw_features(corrupted_test_images(cell.ratio));
          const SampleMatrix X = unit_normalize_columns(pca ? project(*pca, raw) : raw);
          score_queries(model, X, test.labels, config.residual_rule, record);
        } catch (const std::exception& e) {
          record.error = e.what();
        }
        emit(std::move(record));
      }
    }
  }

  // Partitioned sweep runs in raw pixel space (dim recorded as 0).
  if (config.partition) {
    const PartitionScheme scheme = *config.partition;
    for (const MethodSpec& method : config.methods) {
      std::vector<CoderModel> block_models;
      double precompute_seconds = 0.0;
      std::string stage_error;
      try {
        const auto start = Clock::now();
        const int blocks = scheme.blocks();
        std::vector<SampleMatrix> block_train(blocks);
        for (std::size_t i = 0; i < train.images.size(); ++i) {
          const auto tiles = partition_image(train.images[i].pixels, scheme);
          for (int b = 0; b < blocks; ++b) {
            if (block_train[b].size() == 0)
              block_train[b].resize(tiles[b].size(), static_cast<Index>(train.images.size()));
            block_train[b].col(static_cast<Index>(i)) = tiles[b];
          }
        }
        for (int b = 0; b < blocks; ++b) {
          const LabeledDictionary block_dict =
              make_labeled_dictionary(unit_normalize_columns(block_train[b]), train.labels);
          block_models.push_back(build_coder(block_dict, method.params));
        }
        precompute_seconds = seconds_since(start);
      } catch (const std::exception& e) {
        stage_error = e.what();
      }

      for (const CorruptionCell& cell : cells) {
        ResultRecord record = base_record(method, 0, cell);
        record.partitioned = true;
        record.scheme = scheme;
        record.precompute_seconds = precompute_seconds;
        if (!stage_error.empty()) {
          record.error = stage_error;
          emit(std::move(record));
          continue;
        }
        try {
          const std::vector<PixelImage>& images =
              cell.kind.empty() ? test.images : corrupted_test_images(cell.ratio);
          std::map<std::pair<int, int>, int> confusion;
          int correct = 0;
          const auto start = Clock::now();
          for (std::size_t i = 0; i < images.size(); ++i) {
            auto tiles = partition_image(images[i].pixels, scheme);
            for (Vector& tile : tiles) {
              SampleMatrix column = tile;
              tile = unit_normalize_columns(column).col(0);
            }
            const ClassificationResult result = classify_partitioned(block_models, tiles);
            if (result.predicted_label == test.labels[i]) ++correct;
            ++confusion[{test.labels[i], result.predicted_label}];
          }
          const double elapsed = seconds_since(start);
          record.correct = correct;
          record.total = static_cast<int>(images.size());
          record.accuracy =
              record.total > 0 ? static_cast<double>(correct) / record.total : 0.0;
          record.per_query_mean_seconds = record.total > 0 ? elapsed / record.total : 0.0;
          for (const auto& [key, count] : confusion)
            record.confusion.push_back({key.first, key.second, count});
        } catch (const std::exception& e) {
          record.error = e.what();
        }
        emit(std::move(record));
      }
    }
  }

  return records;
}

}  // namespace lccr
