#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lccr/corruption.hpp"
#include "lccr/types.hpp"

namespace lccr {

struct ManifestEntry {
  std::string path;   // relative to the manifest's directory
  std::string label;  // class label, arbitrary string
  std::string tag;    // optional: "clean", "sunglasses", ...
};

/// Explicit dataset description loaded from JSON:
///   {"name": ..., "image_size": [H, W],
///    "entries": [{"path": ..., "label": ..., "tag"?: ...}, ...]}
/// Every entry path is checked to exist at load time.
struct DatasetManifest {
  std::string name;
  std::filesystem::path root;  // directory the entry paths are relative to
  std::vector<ManifestEntry> entries;
  Index image_height = 0;
  Index image_width = 0;
};

DatasetManifest load_manifest(const std::filesystem::path& json_path);

/// Deterministic mapping from label strings to dense class ids (sorted
/// lexicographically).
struct LabelMap {
  std::vector<std::string> names;        // id -> name
  std::map<std::string, int> ids;        // name -> id
  int num_classes() const { return static_cast<int>(names.size()); }
};

LabelMap build_label_map(const DatasetManifest& manifest);

/// Reads an 8-bit grayscale PGM (P2 or P5) or a CSV matrix (one image row
/// per line). Color formats are rejected.
PixelImage load_image(const std::filesystem::path& path);

/// Writes P5 (binary) PGM, rounding to the nearest integer, or CSV when the
/// extension is .csv.
void save_image(const PixelImage& img, const std::filesystem::path& path);

/// Column-major flattening, length H*W.
Vector flatten(const PixelImage& img);
PixelImage unflatten(const Vector& v, Index height, Index width);

struct SplitSpec {
  enum class Mode { per_class_count, per_class_fraction, by_tag };
  Mode mode = Mode::per_class_count;
  int train_per_class = 0;      // per_class_count
  double train_fraction = 0.0;  // per_class_fraction
  std::string test_tag;         // by_tag: this tag goes wholly to test
  std::uint64_t seed = 0;
};

/// Manifest entry indices for the two halves, each sorted ascending.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Deterministic split given the seed. per_class_count draws exactly n per
/// class for training; per_class_fraction rounds (clamped to [1, size]);
/// by_tag sends entries tagged `test_tag` to test, untagged or "clean"
/// entries to train, and drops entries carrying any other tag.
Split split(const DatasetManifest& manifest, const SplitSpec& spec);

/// Loads the given entries into a feature matrix (flattened columns,
/// checked against the manifest image size) plus dense labels.
struct LoadedColumns {
  SampleMatrix features;  // (H*W) x count
  std::vector<int> labels;
  std::vector<PixelImage> images;  // raw pixel images, same order
};

LoadedColumns load_columns(const DatasetManifest& manifest, const LabelMap& label_map,
                           const std::vector<std::size_t>& entry_indices);

}  // namespace lccr
