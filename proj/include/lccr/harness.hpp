#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lccr/classifier.hpp"
#include "lccr/ingest.hpp"
#include "lccr/model_io.hpp"

namespace lccr {

/// One point of the method grid: a display name ("lccr", "crc_rls", "lrc")
/// and fully resolved coder parameters.
struct MethodSpec {
  std::string name;
  CoderParams params;
};

struct CorruptionSpec {
  std::string kind;  // "noise", "pixels", "block"
  std::vector<double> ratios;
  std::uint64_t seed = 0;
  double sigma_scale = 255.0;              // noise only
  std::filesystem::path patch_path;        // block only
};

enum class ResidualRule { regularized, unregularized };

struct ExperimentConfig {
  std::filesystem::path manifest_path;
  SplitSpec split;
  std::vector<Index> pca_dims;  // 0 means raw space (no projection)
  std::vector<MethodSpec> methods;
  std::optional<CorruptionSpec> corruption;
  std::optional<PartitionScheme> partition;
  ResidualRule residual_rule = ResidualRule::regularized;
  std::filesystem::path output_dir;  // empty: keep records in memory only
};

/// Parses a config JSON file. Method entries accept scalars or arrays for
/// lambda / gamma / knn / eps / metric and are expanded to their cartesian
/// product; omitted fields fall back to the default sweep grids
/// (lambda in {1e-4,5e-4,1e-3,5e-3,1e-2,5e-2}, gamma in {0,0.1,...,1},
/// K in {1..10}, metric euclidean). crc_rls pins gamma = 0; lrc pins
/// gamma = 0 and lambda = 0.
ExperimentConfig load_config(const std::filesystem::path& path);

/// One sweep cell. `error` is empty on success; a failed cell records the
/// message and leaves the numeric fields zeroed.
struct ResultRecord {
  std::string method;
  CoderParams params;
  Index pca_dim = 0;
  std::string corruption_kind;  // empty when uncorrupted
  double corruption_ratio = 0.0;
  bool partitioned = false;
  PartitionScheme scheme;
  std::string residual_rule;
  double accuracy = 0.0;
  int correct = 0;
  int total = 0;
  std::vector<std::array<int, 3>> confusion;  // (actual, predicted, count), sparse
  double precompute_seconds = 0.0;
  double per_query_mean_seconds = 0.0;
  std::uint64_t split_seed = 0;
  std::uint64_t corruption_seed = 0;
  std::string error;
};

/// Runs the full sweep: one split per config (shared by every method), clean
/// training data, corruption applied to raw test pixels only, preprocessing
/// re-applied per cell. Appends records to <output_dir>/results.jsonl and
/// results.csv as cells finish. Deterministic given the config's seeds;
/// module errors abort only the cell that raised them.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& config);

std::string record_to_jsonl(const ResultRecord& record);
std::vector<ResultRecord> read_jsonl(const std::filesystem::path& path);

/// Pivots records to a CSV accuracy table: one row per method and parameter
/// setting, one column per (dimension, corruption) cell. With `best_only`
/// rows collapse to one per method, taking the best accuracy per column.
std::string report_csv(const std::vector<ResultRecord>& records, bool best_only);

/// Maps a raw image through the saved model's preprocessing (optional PCA,
/// then unit normalization) and classifies it.
ClassificationResult classify_image(const SavedModel& saved, const PixelImage& img,
                                    ResidualRule rule = ResidualRule::regularized);

}  // namespace lccr
