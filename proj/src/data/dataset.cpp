#include "cgzsl/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "cgzsl/data/binary_io.hpp"
#include "cgzsl/errors.hpp"
#include "json.hpp"

namespace cgzsl::data {

namespace fs = std::filesystem;

namespace {

constexpr char kMatrixMagic[5] = {'C', 'Z', 'S', 'L', '1'};

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void fail(const std::string& field, const std::string& what) {
  throw ValidationError(field + ": " + what);
}

}  // namespace

void write_matrix(const fs::path& path, const Matrix& m) {
  auto out = open_out(path);
  out.write(kMatrixMagic, sizeof kMatrixMagic);
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  write_f64s(out, m.values());
  if (!out) throw IoError("failed writing " + path.string());
}

Matrix read_matrix(const fs::path& path) {
  auto in = open_in(path);
  char magic[5];
  if (!in.read(magic, 5) || !std::equal(magic, magic + 5, kMatrixMagic)) {
    throw FormatError(path.string() + ": bad magic, expected CZSL1");
  }
  const std::uint32_t rows = read_u32(in);
  const std::uint32_t cols = read_u32(in);
  Matrix m(rows, cols);
  try {
    read_f64s(in, m.values());
  } catch (const FormatError&) {
    throw FormatError(path.string() + ": truncated payload for " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " matrix");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path.string() + ": trailing bytes after matrix payload");
  }
  return m;
}

void write_u32_list(const fs::path& path, const std::vector<std::uint32_t>& values) {
  auto out = open_out(path);
  for (auto v : values) write_u32(out, v);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::uint32_t> read_u32_list(const fs::path& path) {
  std::error_code ec;
  const auto bytes = fs::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string());
  if (bytes % 4 != 0) throw FormatError(path.string() + ": size is not a multiple of 4");
  auto in = open_in(path);
  std::vector<std::uint32_t> out(bytes / 4);
  for (auto& v : out) v = read_u32(in);
  return out;
}

void Dataset::validate() const {
  const std::size_t n = features.rows();
  const std::size_t c = attributes.rows();
  if (c == 0) fail("attributes", "no classes");
  if (labels.size() != n) fail("labels", "count " + std::to_string(labels.size()) + " != n " + std::to_string(n));
  if (!nn::all_finite(features)) fail("features", "non-finite value");
  if (!nn::all_finite(attributes)) fail("attributes", "non-finite value");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= c) fail("labels", "label " + std::to_string(l) + " >= C");
  }
  std::set<std::uint32_t> train(train_idx.begin(), train_idx.end());
  if (train.size() != train_idx.size()) fail("train_idx", "duplicate index");
  std::set<std::uint32_t> test(test_idx.begin(), test_idx.end());
  if (test.size() != test_idx.size()) fail("test_idx", "duplicate index");
  for (auto i : train)
    if (i >= n) fail("train_idx", "index " + std::to_string(i) + " out of range");
  for (auto i : test) {
    if (i >= n) fail("test_idx", "index " + std::to_string(i) + " out of range");
    if (train.contains(i)) fail("test_idx", "index " + std::to_string(i) + " also in train_idx");
  }
  std::vector<bool> has_test(c, false);
  for (auto i : test) has_test[static_cast<std::size_t>(labels[i])] = true;
  for (std::size_t k = 0; k < c; ++k)
    if (!has_test[k]) fail("test_idx", "class " + std::to_string(k) + " has no test rows");
  std::set<std::vector<double>> rows;
  for (std::size_t k = 0; k < c; ++k) {
    auto r = attributes.row(k);
    if (!rows.emplace(r.begin(), r.end()).second) fail("attributes", "duplicate row for class " + std::to_string(k));
  }
  if (!class_names.empty() && class_names.size() != c) fail("class_names", "count != C");
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());

  nlohmann::ordered_json manifest;
  manifest["format_version"] = kManifestVersion;
  manifest["name"] = ds.name;
  manifest["n"] = ds.features.rows();
  manifest["d_x"] = ds.features.cols();
  manifest["C"] = ds.attributes.rows();
  manifest["d_a"] = ds.attributes.cols();
  manifest["files"] = {{"features", "features.bin"},   {"labels", "labels.bin"},
                       {"attributes", "attributes.bin"}, {"train_idx", "train_idx.bin"},
                       {"test_idx", "test_idx.bin"}};
  if (!ds.class_names.empty()) manifest["files"]["class_names"] = "class_names.txt";

  write_matrix(dir / "features.bin", ds.features);
  std::vector<std::uint32_t> labels(ds.labels.begin(), ds.labels.end());
  write_u32_list(dir / "labels.bin", labels);
  write_matrix(dir / "attributes.bin", ds.attributes);
  write_u32_list(dir / "train_idx.bin", ds.train_idx);
  write_u32_list(dir / "test_idx.bin", ds.test_idx);
  if (!ds.class_names.empty()) {
    auto out = open_out(dir / "class_names.txt");
    for (const auto& name : ds.class_names) out << name << '\n';
  }
  auto out = open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError(manifest_path.string() + " not found");
  nlohmann::json manifest;
  try {
    auto in = open_in(manifest_path);
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest.json: ") + e.what());
  }

  Dataset ds;
  std::size_t n = 0, d_x = 0, c = 0, d_a = 0;
  nlohmann::json files;
  try {
    if (manifest.at("format_version").get<int>() != kManifestVersion) {
      fail("format_version", "unsupported version");
    }
    ds.name = manifest.value("name", std::string("dataset"));
    n = manifest.at("n").get<std::size_t>();
    d_x = manifest.at("d_x").get<std::size_t>();
    c = manifest.at("C").get<std::size_t>();
    d_a = manifest.at("d_a").get<std::size_t>();
    files = manifest.at("files");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest.json: ") + e.what());
  }
  auto file = [&](const char* key) -> fs::path {
    if (!files.contains(key)) fail(std::string("files.") + key, "missing");
    return dir / files.at(key).get<std::string>();
  };

  ds.features = read_matrix(file("features"));
  if (ds.features.rows() != n || ds.features.cols() != d_x) fail("features", "shape does not match manifest");
  const auto raw_labels = read_u32_list(file("labels"));
  if (raw_labels.size() != n) fail("labels", "count does not match manifest n");
  for (auto l : raw_labels) {
    if (l >= c) fail("labels", "label " + std::to_string(l) + " >= C");
    ds.labels.push_back(static_cast<int>(l));
  }
  ds.attributes = read_matrix(file("attributes"));
  if (ds.attributes.rows() != c || ds.attributes.cols() != d_a) fail("attributes", "shape does not match manifest");
  ds.train_idx = read_u32_list(file("train_idx"));
  ds.test_idx = read_u32_list(file("test_idx"));
  if (files.contains("class_names")) {
    std::ifstream names(file("class_names"));
    for (std::string line; std::getline(names, line);) ds.class_names.push_back(line);
  }
  ds.validate();
  return ds;
}

namespace {

bool duplicates_earlier(const Matrix& m, std::size_t k) {
  for (std::size_t j = 0; j < k; ++j) {
    if (std::equal(m.row(j).begin(), m.row(j).end(), m.row(k).begin())) return true;
  }
  return false;
}

}  // namespace

Dataset synth_dataset(const SynthParams& p) {
  if (p.num_classes < 4) throw ContractError("synth_dataset: need at least 4 classes");
  if (p.per_class < 4) throw ContractError("synth_dataset: need at least 4 samples per class");
  if (p.d_x == 0 || p.d_a < 2) throw ContractError("synth_dataset: need d_x >= 1 and d_a >= 2");
  if (!(p.noise_scale >= 0.0) || !std::isfinite(p.noise_scale)) {
    throw ContractError("synth_dataset: noise_scale must be finite and >= 0");
  }

  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset ds;
  ds.name = "synthetic";
  ds.attributes = Matrix(p.num_classes, p.d_a);
  for (std::size_t k = 0; k < p.num_classes; ++k) {
    auto row = ds.attributes.row(k);
    double sq = 0.0;
    do {
      sq = 0.0;
      for (double& v : row) {
        v = std::max(normal(rng), 0.0);
        sq += v * v;
      }
      const double norm = std::sqrt(sq);
      for (double& v : row) v /= norm;
      // Few attribute dims can rectify two classes onto the same one-hot row.
    } while (sq < 1e-12 || duplicates_earlier(ds.attributes, k));
  }

  Matrix w(p.d_a, p.d_x);
  for (double& v : w.values()) v = normal(rng);
  Matrix means = nn::matmul(ds.attributes, w);
  for (double& v : means.values()) v = std::max(v, 0.0);

  const std::size_t n = p.num_classes * p.per_class;
  ds.features = Matrix(n, p.d_x);
  ds.labels.resize(n);
  for (std::size_t k = 0; k < p.num_classes; ++k) {
    for (std::size_t s = 0; s < p.per_class; ++s) {
      const std::size_t i = k * p.per_class + s;
      ds.labels[i] = static_cast<int>(k);
      for (std::size_t j = 0; j < p.d_x; ++j) {
        const double noise = p.noise_scale > 0.0 ? p.noise_scale * normal(rng) : 0.0;
        ds.features(i, j) = std::max(means(k, j) + noise, 0.0);
      }
    }
  }

  const std::size_t n_test = std::max<std::size_t>(1, p.per_class / 4);
  std::vector<std::uint32_t> order(p.per_class);
  for (std::size_t k = 0; k < p.num_classes; ++k) {
    for (std::size_t s = 0; s < p.per_class; ++s)
      order[s] = static_cast<std::uint32_t>(k * p.per_class + s);
    std::shuffle(order.begin(), order.end(), rng);
    ds.test_idx.insert(ds.test_idx.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    ds.train_idx.insert(ds.train_idx.end(), order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  }
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());
  ds.validate();
  return ds;
}

}  // namespace cgzsl::data
