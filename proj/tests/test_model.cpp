#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "cgzsl/errors.hpp"
#include "cgzsl/model/model.hpp"
#include "support.hpp"

using namespace cgzsl;
using namespace cgzsl::model;
using testing::random_matrix;

namespace {

CgzslModel small_model(std::uint64_t seed = 1) { return CgzslModel(ModelConfig::with_defaults(6, 4), seed); }

}  // namespace

TEST_CASE("default configuration") {
  const ModelConfig c = ModelConfig::with_defaults(16, 8);
  CHECK(c.d_z == 8);
  CHECK(c.hidden_g == 64);
  CHECK(c.hidden_d == 64);
  CHECK(c.temperature == 10.0);
  ModelConfig bad = c;
  bad.d_x = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("network shapes and determinism by seed") {
  const CgzslModel m = small_model(3);
  CHECK(m.generator().input_dim() == 4 + 4);
  CHECK(m.generator().output_dim() == 6);
  CHECK(m.discriminator().input_dim() == 4);
  CHECK(m.discriminator().output_dim() == 6);
  CHECK(m.generator() == small_model(3).generator());
  CHECK_FALSE(m.generator() == small_model(4).generator());
}

TEST_CASE("generate") {
  const CgzslModel m = small_model();
  std::mt19937_64 rng(2);
  CHECK(generate(m, Matrix(0, 4), Matrix(0, 4)).rows() == 0);
  const Matrix x = generate(m, sample_noise(50, 4, rng), random_matrix(50, 4, rng));
  CHECK(x.rows() == 50);
  CHECK(x.cols() == 6);
  for (double v : x.values()) CHECK(v >= 0.0);
  CHECK_THROWS_AS(generate(m, Matrix(2, 4), Matrix(3, 4)), ShapeError);
  CHECK_THROWS_AS(project_attributes(m, Matrix(2, 5)), ShapeError);
}

TEST_CASE("classify picks the highest cosine and breaks ties low") {
  const Matrix p = Matrix::from_rows({{1, 0}, {0, 1}, {1, 0}});
  const Matrix x = Matrix::from_rows({{2, 0.1}, {0.1, 3}, {1, 1}});
  const Classification c = classify(x, p);
  CHECK(c.predicted == std::vector<std::size_t>{0, 1, 0});
  CHECK_THROWS_AS(classify(x, Matrix(0, 2)), ContractError);
}

TEST_CASE("classify matches a brute-force argmax and ignores feature scale") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_matrix(30, 5, rng);
    const Matrix p = random_matrix(6, 5, rng);
    const Classification c = classify(x, p);
    Matrix scaled = x;
    scaled *= 7.5;
    CHECK(classify(scaled, p).predicted == c.predicted);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      std::size_t best = 0;
      double best_s = -2.0;
      for (std::size_t k = 0; k < p.rows(); ++k) {
        double dot = 0, nx = 0, np = 0;
        for (std::size_t d = 0; d < 5; ++d) {
          dot += x(i, d) * p(k, d);
          nx += x(i, d) * x(i, d);
          np += p(k, d) * p(k, d);
        }
        const double s = dot / std::sqrt(nx * np);
        if (s > best_s) {
          best_s = s;
          best = k;
        }
      }
      CHECK(c.predicted[i] == best);
    }
  }
}

TEST_CASE("sample_noise is standard normal") {
  std::mt19937_64 rng(11);
  const Matrix z = sample_noise(10000, 8, rng);
  for (std::size_t d = 0; d < 8; ++d) {
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
      s += z(i, d);
      s2 += z(i, d) * z(i, d);
    }
    const double mean = s / z.rows();
    const double var = s2 / z.rows() - mean * mean;
    CHECK(std::abs(mean) <= 0.05);
    CHECK(std::abs(var - 1.0) <= 0.05);
  }
}

TEST_CASE("class bookkeeping") {
  CgzslModel m = small_model();
  const std::vector<double> a{1, 0, 0, 0}, b{0, 1, 0, 0};
  m.encounter(5, a, false);
  m.encounter(2, b, true);
  CHECK(m.encountered_classes() == std::vector<int>{5, 2});
  CHECK(m.seen_classes() == std::vector<int>{2});
  CHECK(m.unseen_classes() == std::vector<int>{5});
  m.mark_seen(5);
  CHECK(m.is_seen(5));
  m.encounter(5, a, false);  // never reverts to unseen
  CHECK(m.is_seen(5));
  CHECK(m.position_of(2) == 1);
  CHECK_THROWS_AS(m.mark_seen(9), ContractError);
  CHECK_THROWS_AS(m.encounter(3, std::vector<double>{1, 2}, true), ShapeError);
}

TEST_CASE("checkpoint round-trip") {
  CgzslModel m = small_model(21);
  const std::vector<double> a{0.5, 0.5, 0, 0.1}, b{0, 1, 0.2, 0};
  m.encounter(0, a, true);
  m.encounter(3, b, false);
  const auto dir = testing::scratch_dir("model_ckpt");
  save_checkpoint(m, dir / "m.ckpt");
  const CgzslModel r = load_checkpoint(dir / "m.ckpt");
  CHECK(r.config() == m.config());
  CHECK(r.generator() == m.generator());
  CHECK(r.discriminator() == m.discriminator());
  CHECK(r.encountered_classes() == m.encountered_classes());
  CHECK(r.seen_classes() == m.seen_classes());
  CHECK(r.encountered_attributes() == m.encountered_attributes());

  std::ofstream(dir / "bad.ckpt", std::ios::binary) << "NOPE1{}\n";
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);

  // Truncated payload.
  std::ifstream in(dir / "m.ckpt", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() - 9);
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), FormatError);
}
