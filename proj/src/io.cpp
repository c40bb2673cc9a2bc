#include "neurowave/io.hpp"

#include "neurowave/error.hpp"

#include "json.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace neurowave::io {
namespace {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

constexpr char kMatrixMagic[8] = {'N', 'W', 'M', 'A', 'T', '0', '0', '1'};
constexpr char kParamsMagic[8] = {'N', 'W', 'P', 'A', 'R', '0', '0', '1'};

json parse_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void check_version(const json& j, const fs::path& path) {
  if (!j.contains("format_version")) throw InputError(path.string() + ": missing format_version");
  if (j.at("format_version").get<int>() != kFormatVersion) {
    throw InputError(path.string() + ": unsupported format_version " + j.at("format_version").dump());
  }
}

fs::path sidecar_for(const fs::path& header) {
  fs::path p = header;
  p.replace_extension(".bin");
  return p;
}

fs::path resolve(const fs::path& header, const std::string& name) { return header.parent_path() / name; }

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, const fs::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw InputError(path.string() + ": truncated file");
  return v;
}

void read_exact(std::istream& in, void* dst, std::size_t bytes, const fs::path& path) {
  if (!in.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes))) {
    throw InputError(path.string() + ": truncated file");
  }
}

void expect_end(std::istream& in, const fs::path& path) {
  if (in.peek() != std::char_traits<char>::eof()) throw InputError(path.string() + ": trailing bytes");
}

// Wraps json type/key errors from header parsing into InputError.
template <class F>
auto with_header(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InputError("malformed header " + path.string() + ": " + e.what());
  }
}

json model_config_json(const ModelConfig& c) {
  return {{"L", c.L},
          {"d", c.d},
          {"embed_dim", c.embed_dim},
          {"heads", c.heads},
          {"attention_blocks", c.attention_blocks},
          {"ffn_dim", c.ffn_dim},
          {"classes", c.classes},
          {"dropout", c.dropout},
          {"seed", c.seed},
          {"temporal_filters", c.temporal_filters},
          {"temporal_kernel", c.temporal_kernel}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.L = j.at("L").get<int>();
  c.d = j.at("d").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.heads = j.at("heads").get<int>();
  c.attention_blocks = j.at("attention_blocks").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.classes = j.at("classes").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.temporal_filters = j.at("temporal_filters").get<int>();
  c.temporal_kernel = j.at("temporal_kernel").get<int>();
  c.validate();
  return c;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

void save_recording(const Recording& rec, const fs::path& header_path) {
  rec.validate();
  const fs::path bin = sidecar_for(header_path);
  json j;
  j["format_version"] = kFormatVersion;
  j["sample_rate_hz"] = rec.sample_rate_hz;
  j["channel_names"] = rec.channel_names;
  j["start_time_s"] = rec.start_time_s;
  j["sample_count"] = rec.samples();
  j["data_file"] = bin.filename().string();
  j["encoding"] = "float32-le channel-major";
  write_text(header_path, j.dump(1) + "\n");

  std::ofstream out = open_out(bin);
  std::vector<float> row(rec.samples());
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      row[i] = static_cast<float>(rec.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw InputError("failed writing " + bin.string());
}

Recording load_recording(const fs::path& header_path) {
  const json j = parse_json(header_path);
  check_version(j, header_path);
  Recording rec;
  std::size_t samples = 0;
  fs::path bin;
  with_header(header_path, [&] {
    rec.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    rec.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    rec.start_time_s = j.at("start_time_s").get<double>();
    samples = j.at("sample_count").get<std::size_t>();
    bin = resolve(header_path, j.at("data_file").get<std::string>());
    return 0;
  });
  std::ifstream in = open_in(bin);
  rec.data.resize(static_cast<Eigen::Index>(rec.channel_names.size()), static_cast<Eigen::Index>(samples));
  std::vector<float> row(samples);
  for (std::size_t c = 0; c < rec.channel_names.size(); ++c) {
    read_exact(in, row.data(), samples * sizeof(float), bin);
    for (std::size_t i = 0; i < samples; ++i) {
      rec.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = static_cast<double>(row[i]);
    }
  }
  expect_end(in, bin);
  rec.validate();
  return rec;
}

std::string label_track_json(const LabelTrack& track) {
  json j;
  j["format_version"] = kFormatVersion;
  j["intervals"] = json::array();
  for (const auto& iv : track.intervals) {
    j["intervals"].push_back({{"start_s", iv.start_s}, {"end_s", iv.end_s}, {"tag", std::string(to_string(iv.tag))}});
  }
  return j.dump(1) + "\n";
}

LabelTrack label_track_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed label track: ") + e.what());
  }
  check_version(j, "label track");
  LabelTrack track;
  with_header("label track", [&] {
    for (const auto& ji : j.at("intervals")) {
      track.intervals.push_back(
          {ji.at("start_s").get<double>(), ji.at("end_s").get<double>(), tag_from_string(ji.at("tag").get<std::string>())});
    }
    return 0;
  });
  track.validate();
  return track;
}

void save_label_track(const LabelTrack& track, const fs::path& path) { write_text(path, label_track_json(track)); }

LabelTrack load_label_track(const fs::path& path) { return label_track_from_json(read_text(path)); }

void write_matrices(const fs::path& path, const std::vector<Eigen::MatrixXd>& matrices) {
  std::ofstream out = open_out(path);
  out.write(kMatrixMagic, sizeof kMatrixMagic);
  put<std::uint64_t>(out, matrices.size());
  for (const auto& m : matrices) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw InputError("failed writing " + path.string());
}

std::vector<Eigen::MatrixXd> read_matrices(const fs::path& path) {
  std::ifstream in = open_in(path);
  char magic[8];
  read_exact(in, magic, sizeof magic, path);
  if (std::memcmp(magic, kMatrixMagic, sizeof magic) != 0) throw InputError(path.string() + ": not a matrix file");
  const auto count = get<std::uint64_t>(in, path);
  std::vector<Eigen::MatrixXd> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto rows = get<std::uint64_t>(in, path);
    const auto cols = get<std::uint64_t>(in, path);
    if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw InputError(path.string() + ": implausible matrix shape");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    read_exact(in, m.data(), static_cast<std::size_t>(m.size()) * sizeof(double), path);
    out.push_back(std::move(m));
  }
  expect_end(in, path);
  return out;
}

void save_ica_model(const IcaModel& model, const fs::path& header_path) {
  const fs::path bin = sidecar_for(header_path);
  json j;
  j["format_version"] = kFormatVersion;
  j["components"] = model.components();
  j["channels"] = model.channels();
  j["iterations"] = model.iterations;
  j["matrices"] = {"unmixing", "mixing", "mean"};
  j["data_file"] = bin.filename().string();
  j["scores"] = json::array();
  for (const auto& s : model.scores) {
    json row;
    for (auto c : kAllCategories) row[std::string(to_string(c))] = s[static_cast<std::size_t>(c)];
    j["scores"].push_back(row);
  }
  write_text(header_path, j.dump(1) + "\n");
  write_matrices(bin, {model.unmixing, model.mixing, Eigen::MatrixXd(model.mean)});
}

IcaModel load_ica_model(const fs::path& header_path) {
  const json j = parse_json(header_path);
  check_version(j, header_path);
  IcaModel model;
  fs::path bin;
  with_header(header_path, [&] {
    model.iterations = j.at("iterations").get<int>();
    bin = resolve(header_path, j.at("data_file").get<std::string>());
    for (const auto& row : j.at("scores")) {
      CategoryScores s{};
      for (auto c : kAllCategories) s[static_cast<std::size_t>(c)] = row.at(std::string(to_string(c))).get<double>();
      model.scores.push_back(s);
    }
    return 0;
  });
  auto mats = read_matrices(bin);
  if (mats.size() != 3) throw InputError(bin.string() + ": expected 3 matrices");
  model.unmixing = std::move(mats[0]);
  model.mixing = std::move(mats[1]);
  model.mean = mats[2];
  if (model.mixing.rows() != model.unmixing.cols() || model.mixing.cols() != model.unmixing.rows() ||
      model.mean.size() != model.unmixing.cols() || (!model.scores.empty() && !model.labeled())) {
    throw InputError(header_path.string() + ": inconsistent ICA model shapes");
  }
  return model;
}

std::string component_report(const IcaModel& model, const std::vector<ComponentFeatures>& features) {
  std::string out = "index category";
  for (auto c : kAllCategories) out += " " + std::string(to_string(c));
  out += " dominant_hz\n";
  char buf[64];
  for (std::size_t k = 0; k < model.components(); ++k) {
    out += std::to_string(k);
    if (model.labeled()) {
      out += " " + std::string(to_string(argmax(model.scores[k])));
      for (double s : model.scores[k]) {
        std::snprintf(buf, sizeof buf, " %.4f", s);
        out += buf;
      }
    } else {
      out += " unlabeled";
    }
    std::snprintf(buf, sizeof buf, " %.2f\n", k < features.size() ? features[k].dominant_hz : 0.0);
    out += buf;
  }
  return out;
}

void save_epoch_set(const EpochSet& set, const fs::path& manifest_path) {
  const fs::path bin = sidecar_for(manifest_path);
  const Eigen::Index L = set.empty() ? 0 : set.epochs.front().window.rows();
  const Eigen::Index d = set.empty() ? static_cast<Eigen::Index>(set.channel_names.size())
                                     : set.epochs.front().window.cols();
  json j;
  j["format_version"] = kFormatVersion;
  j["window_s"] = set.window_s;
  j["overlap_fraction"] = set.overlap_fraction;
  j["sample_rate_hz"] = set.sample_rate_hz;
  j["channel_names"] = set.channel_names;
  j["L"] = L;
  j["d"] = d;
  j["count"] = set.size();
  j["data_file"] = bin.filename().string();
  j["encoding"] = "float32-le, each epoch L x d row-major";
  std::vector<std::string> labels;
  std::vector<double> origins;
  for (const auto& e : set.epochs) {
    if (e.window.rows() != L || e.window.cols() != d) throw InputError("epochs in a set must share one shape");
    labels.emplace_back(to_string(e.label));
    origins.push_back(e.origin_time_s);
  }
  j["labels"] = labels;
  j["origin_time_s"] = origins;
  write_text(manifest_path, j.dump(1) + "\n");

  std::ofstream out = open_out(bin);
  for (const auto& e : set.epochs) {
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = e.window;
    out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(float)));
  }
  if (!out) throw InputError("failed writing " + bin.string());
}

EpochSet load_epoch_set(const fs::path& manifest_path) {
  const json j = parse_json(manifest_path);
  check_version(j, manifest_path);
  EpochSet set;
  Eigen::Index L = 0, d = 0;
  std::size_t count = 0;
  std::vector<std::string> labels;
  std::vector<double> origins;
  fs::path bin;
  with_header(manifest_path, [&] {
    set.window_s = j.at("window_s").get<double>();
    set.overlap_fraction = j.at("overlap_fraction").get<double>();
    set.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    set.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    L = j.at("L").get<Eigen::Index>();
    d = j.at("d").get<Eigen::Index>();
    count = j.at("count").get<std::size_t>();
    labels = j.at("labels").get<std::vector<std::string>>();
    origins = j.at("origin_time_s").get<std::vector<double>>();
    bin = resolve(manifest_path, j.at("data_file").get<std::string>());
    return 0;
  });
  if (labels.size() != count || origins.size() != count) throw InputError(manifest_path.string() + ": count mismatch");
  std::ifstream in = open_in(bin);
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(L, d);
  for (std::size_t i = 0; i < count; ++i) {
    read_exact(in, rm.data(), static_cast<std::size_t>(rm.size()) * sizeof(float), bin);
    Epoch e;
    e.window = rm;
    e.label = label_from_string(labels[i]);
    e.origin_time_s = origins[i];
    set.epochs.push_back(std::move(e));
  }
  expect_end(in, bin);
  return set;
}

void save_params(const ModelParams& params, const fs::path& manifest_path) {
  const fs::path bin = sidecar_for(manifest_path);
  json j;
  j["format_version"] = kFormatVersion;
  j["config"] = model_config_json(params.config);
  j["input_mean"] = params.input_mean;
  j["input_scale"] = params.input_scale;
  j["parameter_count"] = params.parameter_count();
  j["checksum_fnv1a64"] = hex64(checksum(params));
  j["data_file"] = bin.filename().string();
  j["blocks"] = json::array();
  params.for_each_block([&](const std::string& name, const Eigen::MatrixXd& m) {
    j["blocks"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  write_text(manifest_path, j.dump(1) + "\n");

  std::ofstream out = open_out(bin);
  out.write(kParamsMagic, sizeof kParamsMagic);
  const std::vector<double> values = flatten(params);
  put<std::uint64_t>(out, values.size());
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw InputError("failed writing " + bin.string());
}

ModelParams load_params(const fs::path& manifest_path) {
  const json j = parse_json(manifest_path);
  check_version(j, manifest_path);
  ModelParams params;
  std::string expected_checksum;
  fs::path bin;
  with_header(manifest_path, [&] {
    params = init_params(model_config_from_json(j.at("config")));
    params.input_mean = j.at("input_mean").get<double>();
    params.input_scale = j.at("input_scale").get<double>();
    expected_checksum = j.at("checksum_fnv1a64").get<std::string>();
    bin = resolve(manifest_path, j.at("data_file").get<std::string>());
    return 0;
  });
  std::ifstream in = open_in(bin);
  char magic[8];
  read_exact(in, magic, sizeof magic, bin);
  if (std::memcmp(magic, kParamsMagic, sizeof magic) != 0) throw InputError(bin.string() + ": not a params file");
  const auto count = get<std::uint64_t>(in, bin);
  if (count != params.parameter_count()) throw InputError(bin.string() + ": parameter count does not match config");
  std::vector<double> values(count);
  read_exact(in, values.data(), count * sizeof(double), bin);
  expect_end(in, bin);
  unflatten(params, values);
  if (hex64(checksum(params)) != expected_checksum) throw DataError(bin.string() + ": checksum mismatch");
  return params;
}

std::string train_report_json(const TrainReport& report) {
  json j;
  j["format_version"] = kFormatVersion;
  j["epoch_loss"] = report.epoch_loss;
  j["train_accuracy"] = report.train_accuracy;
  j["epoch_wall_s"] = report.epoch_wall_s;
  j["checksum_fnv1a64"] = hex64(report.checksum);
  return j.dump(1) + "\n";
}

void save_point_cloud(const PointCloud& cloud, const fs::path& header_path) {
  cloud.validate();
  const fs::path bin = sidecar_for(header_path);
  json j;
  j["format_version"] = kFormatVersion;
  j["source"] = cloud.source;
  j["n"] = cloud.size();
  j["dim"] = cloud.points.cols();
  std::vector<std::string> labels;
  for (Label l : cloud.labels) labels.emplace_back(to_string(l));
  j["labels"] = labels;
  j["data_file"] = bin.filename().string();
  j["encoding"] = "float32-le row-major";
  write_text(header_path, j.dump(1) + "\n");

  std::ofstream out = open_out(bin);
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = cloud.points.cast<float>();
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(float)));
  if (!out) throw InputError("failed writing " + bin.string());
}

PointCloud load_point_cloud(const fs::path& header_path) {
  const json j = parse_json(header_path);
  check_version(j, header_path);
  PointCloud cloud;
  Eigen::Index n = 0, dim = 0;
  fs::path bin;
  with_header(header_path, [&] {
    cloud.source = j.at("source").get<std::string>();
    n = j.at("n").get<Eigen::Index>();
    dim = j.at("dim").get<Eigen::Index>();
    for (const auto& l : j.at("labels").get<std::vector<std::string>>()) cloud.labels.push_back(label_from_string(l));
    bin = resolve(header_path, j.at("data_file").get<std::string>());
    return 0;
  });
  std::ifstream in = open_in(bin);
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(n, dim);
  read_exact(in, rm.data(), static_cast<std::size_t>(rm.size()) * sizeof(float), bin);
  expect_end(in, bin);
  cloud.points = rm.cast<double>();
  cloud.validate();
  return cloud;
}

}  // namespace neurowave::io
