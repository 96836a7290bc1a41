#include "lccr/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lccr/errors.hpp"
#include "lccr/rng.hpp"

namespace lccr {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFileError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string lowercase_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Header tokens separated by whitespace; '#' starts a comment to end of line.
struct PgmTokenizer {
  const std::string& data;
  std::size_t pos = 0;

  void skip_separators() {
    while (pos < data.size()) {
      const char c = data[pos];
      if (c == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  long next_int(const char* what) {
    skip_separators();
    if (pos >= data.size()) throw CorruptFileError(std::string("truncated PGM: missing ") + what);
    std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) &&
           data[pos] != '#')
      ++pos;
    const std::string token = data.substr(start, pos - start);
    try {
      std::size_t used = 0;
      const long value = std::stol(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      return value;
    } catch (const std::exception&) {
      throw CorruptFileError("malformed PGM token '" + token + "' for " + what);
    }
  }
};

PixelImage parse_pgm(const std::string& bytes, const std::string& origin) {
  PgmTokenizer tok{bytes};
  tok.skip_separators();
  if (bytes.size() - tok.pos < 2) throw CorruptFileError("truncated PGM header in " + origin);
  const std::string magic = bytes.substr(tok.pos, 2);
  tok.pos += 2;

  if (magic == "P3" || magic == "P6")
    throw UnsupportedFormatError("color PPM not supported: " + origin);
  if (magic != "P2" && magic != "P5")
    throw UnsupportedFormatError("not a PGM file: " + origin);

  const long width = tok.next_int("width");
  const long height = tok.next_int("height");
  const long maxval = tok.next_int("maxval");
  if (width < 1 || height < 1) throw CorruptFileError("bad PGM dimensions in " + origin);
  if (maxval < 1 || maxval > 255)
    throw UnsupportedFormatError("only 8-bit PGM supported (maxval " + std::to_string(maxval) +
                                 ") in " + origin);

  PixelImage img;
  img.pixels.resize(height, width);

  if (magic == "P2") {
    for (long r = 0; r < height; ++r)
      for (long c = 0; c < width; ++c) {
        const long value = tok.next_int("pixel");
        if (value < 0 || value > maxval)
          throw CorruptFileError("pixel out of range in " + origin);
        img.pixels(r, c) = static_cast<double>(value);
      }
  } else {
    // Exactly one whitespace byte separates the maxval from the raster.
    if (tok.pos >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[tok.pos])))
      throw CorruptFileError("missing raster separator in " + origin);
    ++tok.pos;
    const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - tok.pos < need) throw CorruptFileError("truncated PGM raster in " + origin);
    for (long r = 0; r < height; ++r)
      for (long c = 0; c < width; ++c) {
        const unsigned char value = static_cast<unsigned char>(bytes[tok.pos++]);
        if (value > maxval) throw CorruptFileError("pixel out of range in " + origin);
        img.pixels(r, c) = static_cast<double>(value);
      }
  }
  return img;
}

PixelImage parse_csv_matrix(const std::string& text, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        const double value = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(value);
      } catch (const std::exception&) {
        throw CorruptFileError("malformed CSV cell '" + cell + "' in " + origin);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw CorruptFileError("ragged CSV rows in " + origin);
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw CorruptFileError("empty CSV matrix in " + origin);

  PixelImage img;
  img.pixels.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      img.pixels(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return img;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& json_path) {
  json doc;
  try {
    doc = json::parse(read_file(json_path));
  } catch (const json::exception& e) {
    throw CorruptFileError("manifest " + json_path.string() + ": " + e.what());
  }

  DatasetManifest manifest;
  manifest.root = json_path.has_parent_path() ? json_path.parent_path()
                                              : std::filesystem::path(".");
  try {
    manifest.name = doc.at("name").get<std::string>();
    const auto& size = doc.at("image_size");
    manifest.image_height = size.at(0).get<Index>();
    manifest.image_width = size.at(1).get<Index>();
    for (const auto& entry : doc.at("entries")) {
      ManifestEntry e;
      e.path = entry.at("path").get<std::string>();
      e.label = entry.at("label").get<std::string>();
      if (entry.contains("tag")) e.tag = entry.at("tag").get<std::string>();
      if (e.label.empty()) throw CorruptFileError("manifest entry with empty label");
      manifest.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw CorruptFileError("manifest " + json_path.string() + ": " + e.what());
  }
  if (manifest.entries.empty())
    throw CorruptFileError("manifest " + json_path.string() + " has no entries");
  if (manifest.image_height < 1 || manifest.image_width < 1)
    throw CorruptFileError("manifest " + json_path.string() + " has bad image_size");

  for (const ManifestEntry& entry : manifest.entries) {
    const auto full = manifest.root / entry.path;
    if (!std::filesystem::exists(full))
      throw CorruptFileError("manifest entry missing on disk: " + full.string());
  }
  return manifest;
}

LabelMap build_label_map(const DatasetManifest& manifest) {
  std::set<std::string> unique;
  for (const ManifestEntry& entry : manifest.entries) unique.insert(entry.label);

  LabelMap map;
  for (const std::string& name : unique) {
    map.ids[name] = static_cast<int>(map.names.size());
    map.names.push_back(name);
  }
  return map;
}

PixelImage load_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  PixelImage img;
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '6') {
    img = parse_pgm(bytes, path.string());
  } else if (lowercase_extension(path) == ".csv") {
    img = parse_csv_matrix(bytes, path.string());
  } else {
    throw UnsupportedFormatError("unrecognized image format: " + path.string());
  }
  img.validate();
  return img;
}

void save_image(const PixelImage& img, const std::filesystem::path& path) {
  img.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorruptFileError("cannot write " + path.string());

  if (lowercase_extension(path) == ".csv") {
    out.precision(17);
    for (Index r = 0; r < img.height(); ++r) {
      for (Index c = 0; c < img.width(); ++c) {
        if (c) out << ',';
        out << img.pixels(r, c);
      }
      out << '\n';
    }
  } else {
    out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    for (Index r = 0; r < img.height(); ++r)
      for (Index c = 0; c < img.width(); ++c)
        out.put(static_cast<char>(
            static_cast<unsigned char>(std::llround(img.pixels(r, c)))));
  }
  if (!out) throw CorruptFileError("failed writing " + path.string());
}

Vector flatten(const PixelImage& img) {
  return Eigen::Map<const Vector>(img.pixels.data(), img.pixels.size());
}

PixelImage unflatten(const Vector& v, Index height, Index width) {
  if (v.size() != height * width)
    throw SizeMismatchError("vector length " + std::to_string(v.size()) +
                            " does not match " + std::to_string(height) + "x" +
                            std::to_string(width));
  PixelImage img;
  img.pixels = Eigen::Map<const Eigen::MatrixXd>(v.data(), height, width);
  return img;
}

Split split(const DatasetManifest& manifest, const SplitSpec& spec) {
  Split result;

  if (spec.mode == SplitSpec::Mode::by_tag) {
    if (spec.test_tag.empty())
      throw std::invalid_argument("by_tag split requires a test tag");
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      const std::string& tag = manifest.entries[i].tag;
      if (tag == spec.test_tag)
        result.test.push_back(i);
      else if (tag.empty() || tag == "clean")
        result.train.push_back(i);
      // entries with any other tag stay out of this split
    }
    if (result.train.empty() || result.test.empty())
      throw std::invalid_argument("by_tag split produced an empty train or test set");
    return result;
  }

  const LabelMap label_map = build_label_map(manifest);
  std::vector<std::vector<std::size_t>> per_class(label_map.num_classes());
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    per_class[label_map.ids.at(manifest.entries[i].label)].push_back(i);

  SeededRng rng(spec.seed);
  for (int c = 0; c < label_map.num_classes(); ++c) {
    auto& members = per_class[c];
    const std::size_t size = members.size();

    std::size_t n_train = 0;
    if (spec.mode == SplitSpec::Mode::per_class_count) {
      if (spec.train_per_class < 1)
        throw std::invalid_argument("per_class_count split requires train_per_class >= 1");
      if (static_cast<std::size_t>(spec.train_per_class) > size)
        throw std::invalid_argument("class '" + label_map.names[c] + "' has " +
                                    std::to_string(size) + " samples, fewer than requested " +
                                    std::to_string(spec.train_per_class));
      n_train = static_cast<std::size_t>(spec.train_per_class);
    } else {
      if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0))
        throw std::invalid_argument("per_class_fraction split requires fraction in (0, 1]");
      n_train = static_cast<std::size_t>(
          std::llround(spec.train_fraction * static_cast<double>(size)));
      n_train = std::clamp<std::size_t>(n_train, 1, size);
    }

    rng.shuffle(members);
    result.train.insert(result.train.end(), members.begin(), members.begin() + n_train);
    result.test.insert(result.test.end(), members.begin() + n_train, members.end());
  }

  std::sort(result.train.begin(), result.train.end());
  std::sort(result.test.begin(), result.test.end());
  return result;
}

LoadedColumns load_columns(const DatasetManifest& manifest, const LabelMap& label_map,
                           const std::vector<std::size_t>& entry_indices) {
  LoadedColumns out;
  out.features.resize(manifest.image_height * manifest.image_width,
                      static_cast<Index>(entry_indices.size()));
  out.labels.reserve(entry_indices.size());
  out.images.reserve(entry_indices.size());

  Index col = 0;
  for (std::size_t idx : entry_indices) {
    const ManifestEntry& entry = manifest.entries.at(idx);
    PixelImage img = load_image(manifest.root / entry.path);
    if (img.height() != manifest.image_height || img.width() != manifest.image_width)
      throw SizeMismatchError(entry.path + " is " + std::to_string(img.height()) + "x" +
                              std::to_string(img.width()) + ", manifest expects " +
                              std::to_string(manifest.image_height) + "x" +
                              std::to_string(manifest.image_width));
    out.features.col(col++) = flatten(img);
    out.labels.push_back(label_map.ids.at(entry.label));
    out.images.push_back(std::move(img));
  }
  return out;
}

}  // namespace lccr
