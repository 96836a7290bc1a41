#include "lccr/model_io.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "lccr/errors.hpp"

namespace lccr {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'L', 'C', 'C', 'R', 'M', 'D', 'L', '1'};

void write_u64(std::ostream& out, std::uint64_t value) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint64_t read_u64(std::istream& in) {
  char bytes[8];
  in.read(bytes, 8);
  if (!in) throw CorruptFileError("truncated model file");
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i)
    value |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  return value;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  write_u64(out, static_cast<std::uint64_t>(m.rows()));
  write_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * m.size());
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  const std::uint64_t raw_rows = read_u64(in);
  const std::uint64_t raw_cols = read_u64(in);
  if (raw_rows > (1u << 24) || raw_cols > (1u << 24))
    throw CorruptFileError("implausible matrix size in model file");
  const auto rows = static_cast<Index>(raw_rows);
  const auto cols = static_cast<Index>(raw_cols);
  Eigen::MatrixXd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double)) * m.size());
  if (!in) throw CorruptFileError("truncated matrix in model file");
  return m;
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

std::vector<ClassRange> ranges_from_sorted_labels(const std::vector<int>& labels) {
  std::vector<ClassRange> ranges;
  Index pos = 0;
  while (pos < static_cast<Index>(labels.size())) {
    Index end = pos;
    while (end < static_cast<Index>(labels.size()) && labels[end] == labels[pos]) ++end;
    ranges.push_back(ClassRange{pos, end});
    pos = end;
  }
  return ranges;
}

}  // namespace

void save_model(const SavedModel& saved, const std::filesystem::path& path) {
  const CoderModel& model = saved.model;

  json meta;
  meta["params"] = params_to_json(model.params);
  meta["labels"] = model.dict.labels;
  meta["permutation"] = std::vector<std::int64_t>(model.dict.permutation.begin(),
                                                  model.dict.permutation.end());
  meta["label_names"] = saved.label_names;
  meta["image_size"] = {saved.image_height, saved.image_width};
  meta["has_pca"] = model.pca.has_value();
  meta["has_stddev"] = model.metric_state.per_feature_stddev.has_value();
  const std::string blob = meta.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorruptFileError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, blob.size());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));

  write_matrix(out, model.dict.samples);
  write_matrix(out, model.projection);
  if (model.pca) {
    write_matrix(out, model.pca->mean);
    write_matrix(out, model.pca->basis);
  }
  if (model.metric_state.per_feature_stddev)
    write_matrix(out, *model.metric_state.per_feature_stddev);
  if (!out) throw CorruptFileError("failed writing " + path.string());
}

SavedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFileError("cannot open " + path.string());

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw UnsupportedFormatError(path.string() + " is not a coder model file");

  const std::uint64_t blob_size = read_u64(in);
  std::string blob(blob_size, '\0');
  in.read(blob.data(), static_cast<std::streamsize>(blob_size));
  if (!in) throw CorruptFileError("truncated model metadata in " + path.string());

  json meta;
  try {
    meta = json::parse(blob);
  } catch (const json::exception& e) {
    throw CorruptFileError("bad model metadata: " + std::string(e.what()));
  }

  SavedModel saved;
  saved.model.params = params_from_json(meta.at("params"));
  saved.label_names = meta.at("label_names").get<std::vector<std::string>>();
  saved.image_height = meta.at("image_size").at(0).get<Index>();
  saved.image_width = meta.at("image_size").at(1).get<Index>();

  saved.model.dict.labels = meta.at("labels").get<std::vector<int>>();
  const auto perm = meta.at("permutation").get<std::vector<std::int64_t>>();
  saved.model.dict.permutation.assign(perm.begin(), perm.end());
  saved.model.dict.class_ranges = ranges_from_sorted_labels(saved.model.dict.labels);

  saved.model.dict.samples = read_matrix(in);
  saved.model.projection = read_matrix(in);
  if (meta.at("has_pca").get<bool>()) {
    PcaModel pca;
    pca.mean = read_matrix(in);
    pca.basis = read_matrix(in);
    saved.model.pca = std::move(pca);
  }
  saved.model.metric_state.metric = saved.model.params.metric;
  if (meta.at("has_stddev").get<bool>())
    saved.model.metric_state.per_feature_stddev = Vector(read_matrix(in));

  if (saved.model.dict.labels.size() != static_cast<std::size_t>(saved.model.dict.num_samples()))
    throw CorruptFileError("label count does not match dictionary in " + path.string());
  return saved;
}

}  // namespace lccr
