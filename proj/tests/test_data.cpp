#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cgzsl/data/binary_io.hpp"
#include "cgzsl/data/dataset.hpp"
#include "cgzsl/errors.hpp"
#include "support.hpp"

using namespace cgzsl;
using namespace cgzsl::data;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

SynthParams small_synth(std::uint64_t seed = 3) {
  SynthParams p;
  p.num_classes = 6;
  p.d_x = 10;
  p.d_a = 5;
  p.per_class = 8;
  p.seed = seed;
  return p;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (i + j) / 2.0;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("little-endian primitives") {
  std::ostringstream out;
  write_u32(out, 0x01020304u);
  write_f64(out, 1.0);
  const std::string b = out.str();
  CHECK(b.size() == 12);
  CHECK(b[0] == 0x04);
  CHECK(b[3] == 0x01);
  CHECK(static_cast<unsigned char>(b[11]) == 0x3F);
  std::istringstream in(b);
  CHECK(read_u32(in) == 0x01020304u);
  CHECK(read_f64(in) == 1.0);
  CHECK_THROWS_AS(read_u32(in), FormatError);
}

TEST_CASE("matrix files round-trip bit-exactly") {
  const auto dir = testing::scratch_dir("data_matrix");
  std::mt19937_64 rng(1);
  Matrix m = testing::random_matrix(7, 3, rng, -1e6, 1e6);
  m(0, 0) = -0.0;
  m(1, 1) = 5e-324;
  write_matrix(dir / "m.bin", m);
  const Matrix r = read_matrix(dir / "m.bin");
  REQUIRE(r.same_shape(m));
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(r.values()[i]) == std::bit_cast<std::uint64_t>(m.values()[i]));
  }
  CHECK(slurp(dir / "m.bin").size() == 5 + 8 + 7 * 3 * 8);
}

TEST_CASE("matrix file errors") {
  const auto dir = testing::scratch_dir("data_matrix_err");
  {
    std::ofstream out(dir / "magic.bin", std::ios::binary);
    out << "XXXX1";
    write_u32(out, 1);
    write_u32(out, 1);
    write_f64(out, 1.0);
  }
  CHECK_THROWS_AS(read_matrix(dir / "magic.bin"), FormatError);
  {
    std::ofstream out(dir / "short.bin", std::ios::binary);
    out << "CZSL1";
    write_u32(out, 2);
    write_u32(out, 2);
    for (int i = 0; i < 3; ++i) write_f64(out, 1.0);
  }
  CHECK_THROWS_AS(read_matrix(dir / "short.bin"), FormatError);
  CHECK_THROWS_AS(read_matrix(dir / "absent.bin"), IoError);

  write_u32_list(dir / "ids.bin", {3, 1, 4});
  CHECK(read_u32_list(dir / "ids.bin") == std::vector<std::uint32_t>{3, 1, 4});
  std::ofstream(dir / "odd.bin", std::ios::binary) << "abcde";
  CHECK_THROWS_AS(read_u32_list(dir / "odd.bin"), FormatError);
}

TEST_CASE("dataset round-trip") {
  const auto dir = testing::scratch_dir("data_roundtrip");
  Dataset ds = synth_dataset(small_synth());
  ds.class_names = {"a", "b", "c", "d", "e", "f"};
  save_dataset(ds, dir);
  const Dataset r = load_dataset(dir);
  CHECK(r == ds);
  CHECK(r.features.rows() == 48);
  CHECK(r.num_classes() == 6);
  CHECK_THROWS_AS(load_dataset(dir / "nowhere"), IoError);
}

TEST_CASE("dataset validation") {
  const Dataset good = synth_dataset(small_synth());
  CHECK_NOTHROW(good.validate());

  Dataset overlap = good;
  overlap.test_idx.push_back(overlap.train_idx.front());
  std::sort(overlap.test_idx.begin(), overlap.test_idx.end());
  CHECK_THROWS_AS(overlap.validate(), ValidationError);

  Dataset bad_label = good;
  bad_label.labels[0] = 6;
  CHECK_THROWS_AS(bad_label.validate(), ValidationError);

  Dataset nan = good;
  nan.features(0, 0) = NAN;
  CHECK_THROWS_AS(nan.validate(), ValidationError);

  // A label equal to C on disk is rejected at load time.
  const auto dir = testing::scratch_dir("data_bad_label");
  save_dataset(good, dir);
  std::vector<std::uint32_t> labels(good.labels.begin(), good.labels.end());
  labels[3] = 6;
  write_u32_list(dir / "labels.bin", labels);
  CHECK_THROWS_AS(load_dataset(dir), ValidationError);
}

TEST_CASE("synthetic data") {
  const SynthParams p = small_synth(9);
  const auto a = testing::scratch_dir("synth_a"), b = testing::scratch_dir("synth_b");
  save_dataset(synth_dataset(p), a);
  save_dataset(synth_dataset(p), b);
  for (const char* f : {"features.bin", "labels.bin", "attributes.bin", "train_idx.bin", "test_idx.bin", "manifest.json"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }

  const Dataset ds = synth_dataset(p);
  CHECK(ds.train_idx.size() == 6 * 6);
  CHECK(ds.test_idx.size() == 6 * 2);
  for (std::size_t k = 0; k < ds.num_classes(); ++k) {
    double sq = 0;
    for (double v : ds.attributes.row(k)) {
      CHECK(v >= 0.0);
      sq += v * v;
    }
    CHECK(sq == doctest::Approx(1.0));
  }

  SynthParams clean = p;
  clean.noise_scale = 0.0;
  const Dataset c = synth_dataset(clean);
  for (std::size_t i = 0; i < c.features.rows(); ++i) {
    const std::size_t first = static_cast<std::size_t>(c.labels[i]) * clean.per_class;
    for (std::size_t j = 0; j < c.features.cols(); ++j) CHECK(c.features(i, j) == c.features(first, j));
  }

  SynthParams tiny = p;
  tiny.num_classes = 3;
  CHECK_THROWS_AS(synth_dataset(tiny), ContractError);
  SynthParams flat = p;
  flat.d_a = 1;
  CHECK_THROWS_AS(synth_dataset(flat), ContractError);
  SynthParams few_dims = p;
  few_dims.num_classes = 12;
  few_dims.d_a = 2;
  CHECK_NOTHROW(synth_dataset(few_dims).validate());
}

TEST_CASE("attribute similarity predicts feature similarity") {
  SynthParams p;
  p.seed = 1;
  const Dataset ds = synth_dataset(p);
  Matrix means(ds.num_classes(), ds.features.cols());
  std::vector<double> counts(ds.num_classes());
  for (std::size_t i = 0; i < ds.features.rows(); ++i) {
    const auto k = static_cast<std::size_t>(ds.labels[i]);
    counts[k] += 1;
    for (std::size_t j = 0; j < ds.features.cols(); ++j) means(k, j) += ds.features(i, j);
  }
  auto cos = [](std::span<const double> x, std::span<const double> y) {
    double d = 0, nx = 0, ny = 0;
    for (std::size_t i = 0; i < x.size(); ++i) d += x[i] * y[i], nx += x[i] * x[i], ny += y[i] * y[i];
    return d / std::sqrt(nx * ny);
  };
  std::vector<double> sa, sf;
  for (std::size_t i = 0; i < ds.num_classes(); ++i) {
    for (std::size_t j = i + 1; j < ds.num_classes(); ++j) {
      sa.push_back(cos(ds.attributes.row(i), ds.attributes.row(j)));
      sf.push_back(cos(means.row(i), means.row(j)));
    }
  }
  CHECK(pearson(ranks(sa), ranks(sf)) > 0.0);
}
