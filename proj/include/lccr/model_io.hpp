#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lccr/coder.hpp"

namespace lccr {

/// A coder model plus the ingestion context needed to classify raw images:
/// the label-name mapping and the expected pixel dimensions (0 when the model
/// was built from bare vectors).
struct SavedModel {
  CoderModel model;
  std::vector<std::string> label_names;
  Index image_height = 0;
  Index image_width = 0;
};

/// Binary container: magic, JSON metadata blob, then raw little-endian
/// column-major doubles for each matrix.
void save_model(const SavedModel& saved, const std::filesystem::path& path);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace lccr
