#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "cgzsl/errors.hpp"
#include "cgzsl/eval/metrics.hpp"
#include "cgzsl/eval/report.hpp"
#include "metric_oracles.hpp"
#include "support.hpp"

using namespace cgzsl;
using namespace cgzsl::eval;
using namespace testing::oracle;

namespace {

ExperimentReport sample_report() {
  ExperimentReport r;
  r.setting = "dynamic";
  r.T = 2;
  r.mSA = 0.123456789012;
  r.mUA = 0.5;
  r.mH = 1.0 / 3.0;
  r.forgetting = 0.25;
  r.mAUSUC = 0.4;
  r.trace_class = 3;
  r.seen_accuracy = {{0.9}, {0.8, 0.7}};
  r.unseen_accuracy = {{std::nullopt}, {0.2, 0.1}};
  r.harmonic_accuracy = {{0.9}, {0.32, 0.175}};
  for (std::size_t t = 1; t <= 2; ++t) {
    TaskResult task;
    task.t = t;
    task.num_seen = 4 * t;
    task.num_unseen = t;
    task.seen_acc = 0.9 / t;
    task.unseen_acc = t == 1 ? std::nullopt : std::optional<double>(0.1);
    task.harmonic = 0.3;
    task.ausuc = t == 1 ? std::nullopt : std::optional<double>(0.05);
    task.replay_rows = t == 1 ? 0 : 40;
    if (t == 2) task.shortfall.push_back({1, 10, 7});
    task.similarity = {{3, 1.0}, {1, 0.5}};
    task.losses = {{1.5, 2.5}, {1.25, 2.0}};
    r.tasks.push_back(task);
  }
  r.config = {{"seed", 7}, {"zeta", 1}, {"alpha", 2}};
  quantize(r);
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("per-class accuracy") {
  const std::vector<int> labels{1, 1, 2, 2};
  CHECK(per_class_accuracy(labels, labels, std::vector<int>{1, 2}) == 1.0);
  // Class 1 always right, class 2 always wrong, sizes differ.
  std::vector<int> l, p;
  for (int i = 0; i < 90; ++i) l.push_back(1), p.push_back(1);
  for (int i = 0; i < 10; ++i) l.push_back(2), p.push_back(1);
  CHECK(per_class_accuracy(p, l, std::vector<int>{1, 2}) == doctest::Approx(0.5));
  int overall = 0;
  for (std::size_t i = 0; i < l.size(); ++i) overall += p[i] == l[i];
  CHECK(overall == 90);
  CHECK_THROWS_AS(per_class_accuracy(p, l, std::vector<int>{}), ContractError);
  CHECK_THROWS_AS(per_class_accuracy(p, l, std::vector<int>{3}), ContractError);
}

TEST_CASE("harmonic mean") {
  CHECK(harmonic(0.5, 0.5) == doctest::Approx(0.5));
  CHECK(harmonic(0.7, 0.0) == 0.0);
  CHECK(harmonic(0.0, 0.0) == 0.0);
  CHECK(harmonic(0.8, 0.4) == doctest::Approx(8.0 / 15.0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double s = u(rng), v = u(rng);
    const double h = harmonic(s, v);
    CHECK(h >= std::min(s, v) - 1e-15);
    CHECK(h <= std::max(s, v) + 1e-15);
    CHECK(h <= (s + v) / 2 + 1e-15);
  }
}

TEST_CASE("aggregate examples") {
  const std::vector<TaskAccuracy> one{{0.8, std::nullopt}};
  const Aggregates s1 = aggregate_static(one, 1);
  CHECK(s1.mean_seen == doctest::Approx(0.8));
  CHECK_FALSE(s1.mean_unseen.has_value());
  CHECK_FALSE(s1.mean_harmonic.has_value());

  const std::vector<TaskAccuracy> flat(5, TaskAccuracy{0.6, 0.3});
  const Aggregates st = aggregate_static(flat, 4);
  CHECK(st.mean_seen == doctest::Approx(0.6));
  CHECK(*st.mean_unseen == doctest::Approx(0.3));
  CHECK(*st.mean_harmonic == doctest::Approx(0.4));
  const Aggregates dy = aggregate_dynamic(flat, 5);
  CHECK(*dy.mean_harmonic == doctest::Approx(0.4));

  const std::vector<TaskAccuracy> single{{0.7, 0.2}};
  const Aggregates d1 = aggregate_dynamic(single, 1);
  CHECK(d1.mean_seen == 0.7);
  CHECK(*d1.mean_unseen == 0.2);
  CHECK(*d1.mean_harmonic == doctest::Approx(harmonic(0.7, 0.2)));

  // Mean of per-task H, not H of the means.
  const std::vector<TaskAccuracy> two{{1.0, 0.0}, {0.0, 1.0}};
  const Aggregates m = aggregate_dynamic(two, 2);
  CHECK(*m.mean_harmonic == 0.0);
  CHECK(harmonic(m.mean_seen, *m.mean_unseen) == doctest::Approx(0.5));

  CHECK_THROWS_AS(aggregate_dynamic(two, 0), ContractError);
  CHECK_THROWS_AS(aggregate_static(two, 3), ContractError);
}

TEST_CASE("forgetting examples") {
  CHECK(forgetting({{0.8}, {0.6, 0.9}}) == doctest::Approx(0.2));
  CHECK(forgetting({{0.5}, {0.5, 0.5}, {0.5, 0.5, 0.5}}) == 0.0);
  CHECK(forgetting({{0.1}, {0.2, 0.3}, {0.4, 0.5, 0.6}}) == 0.0);
  CHECK(forgetting({{0.9}}) == 0.0);
  CHECK(forgetting({}) == 0.0);
}

TEST_CASE("aggregates, forgetting and mAUSUC match brute-force oracles") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t T = std::uniform_int_distribution<std::size_t>(1, 10)(rng);
    std::vector<TaskAccuracy> tasks;
    for (std::size_t t = 0; t < T; ++t) tasks.push_back({u(rng), u(rng)});

    double s = 0, us = 0, h = 0;
    for (const auto& t : tasks) s += t.seen, us += *t.unseen, h += oracle_h(t.seen, *t.unseen);
    const Aggregates dy = aggregate_dynamic(tasks, T);
    CHECK(std::abs(dy.mean_seen - s / T) <= 1e-9);
    CHECK(std::abs(*dy.mean_unseen - us / T) <= 1e-9);
    CHECK(std::abs(*dy.mean_harmonic - h / T) <= 1e-9);

    const Aggregates st = aggregate_static(tasks, T);
    CHECK(std::abs(st.mean_seen - s / T) <= 1e-9);
    if (T > 1) {
      const auto& last = tasks.back();
      CHECK(std::abs(*st.mean_unseen - (us - *last.unseen) / (T - 1)) <= 1e-9);
      CHECK(std::abs(*st.mean_harmonic - (h - oracle_h(last.seen, *last.unseen)) / (T - 1)) <= 1e-9);
    } else {
      CHECK_FALSE(st.mean_unseen.has_value());
    }

    std::vector<std::vector<double>> acc(T);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j <= t; ++j) acc[t].push_back(u(rng));
    CHECK(std::abs(forgetting(acc) - oracle_forgetting(acc)) <= 1e-9);

    std::vector<double> per_task(T);
    for (double& v : per_task) v = u(rng);
    double mean = 0;
    for (double v : per_task) mean += v;
    CHECK(std::abs(mausuc(per_task) - mean / T) <= 1e-9);
  }
  CHECK(mausuc(std::vector<double>{1.0, 0.0}) == 0.5);
  CHECK(mausuc(std::vector<double>{0.3}) == 0.3);
}

TEST_CASE("AUSUC special cases") {
  // Perfect classifier: correct column dominates by a wide margin.
  const Matrix perfect = Matrix::from_rows({{0.9, -0.9}, {-0.9, 0.9}});
  const std::vector<int> cols{0, 1}, labels{0, 1}, seen{0}, unseen{1};
  CHECK(ausuc(perfect, cols, labels, seen, unseen) == doctest::Approx(1.0));
  // Never correct for any bias: every row's label column is the worst of its pool.
  const Matrix wrong = Matrix::from_rows(
      {{0.1, 0.5, 0.2, 0.9}, {0.5, 0.1, 0.9, 0.2}, {0.3, 0.2, 0.1, 0.6}, {0.2, 0.4, 0.7, 0.3}});
  const std::vector<int> cols4{0, 1, 2, 3}, seen4{0, 1}, unseen4{2, 3};
  CHECK(ausuc(wrong, cols4, cols4, seen4, unseen4) == 0.0);
  CHECK_THROWS_AS(ausuc(perfect, cols, labels, std::vector<int>{}, unseen), ContractError);
}

TEST_CASE("AUSUC matches a dense bias sweep") {
  // The documented 6-sample, 4-class instance.
  const Matrix s = Matrix::from_rows({{0.9, 0.2, 0.4, 0.1},
                                      {0.3, 0.8, 0.7, 0.0},
                                      {0.5, 0.1, 0.6, 0.2},
                                      {0.2, 0.4, 0.3, 0.5},
                                      {0.7, 0.6, 0.1, 0.65},
                                      {0.1, 0.3, 0.35, 0.2}});
  const std::vector<int> cols{0, 1, 2, 3}, labels{0, 1, 2, 3, 3, 2}, seen{0, 1}, unseen{2, 3};
  CHECK(std::abs(ausuc(s, cols, labels, seen, unseen) - oracle_ausuc(s, cols, labels, seen, unseen, -2.5, 2.5, 10000)) <=
        1e-3);

  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = std::uniform_int_distribution<std::size_t>(2, 6)(rng);
    const std::size_t rows = std::uniform_int_distribution<std::size_t>(classes, 30)(rng);
    const ScoreTable t = random_table(rng, classes, rows);
    const double got = ausuc(t.scores, t.cols, t.labels, t.seen, t.unseen);
    const double want = oracle_ausuc(t.scores, t.cols, t.labels, t.seen, t.unseen, -2.5, 2.5, 10000);
    CAPTURE(trial);
    CHECK(std::abs(got - want) <= 1e-3);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);

    // Positive affine maps of all scores move every breakpoint the same way.
    Matrix affine = t.scores;
    for (double& v : affine.values()) v = 3.0 * v + 0.25;
    CHECK(std::abs(ausuc(affine, t.cols, t.labels, t.seen, t.unseen) - got) <= 1e-9);
  }
}

TEST_CASE("top-k similarity") {
  const Matrix p = Matrix::from_rows({{1, 0}, {0, 1}, {1, 0}, {1, 1}});
  const std::vector<int> ids{7, 3, 5, 9};
  const std::vector<double> probe{1, 0};
  const auto top = top_k_similar(probe, p, ids, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0] == std::pair<int, double>{5, 1.0});  // tie with 7, lower id first
  CHECK(top[1].first == 7);
  CHECK(top[2].first == 9);
  CHECK(top_k_similar(probe, p, ids, 1)[0].second == doctest::Approx(1.0));
  CHECK(top_k_similar(probe, p, ids, 10).size() == 4);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix proj = testing::random_matrix(8, 4, rng);
    const Matrix q = testing::random_matrix(1, 4, rng);
    std::vector<int> cls(8);
    std::iota(cls.begin(), cls.end(), 0);
    const Matrix sims = nn::cosine_matrix(q, proj);
    std::vector<std::pair<double, int>> all;
    for (int c : cls) all.emplace_back(-sims(0, static_cast<std::size_t>(c)), c);
    std::sort(all.begin(), all.end());
    const auto got = top_k_similar(q.row(0), proj, cls, 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(got[k].first == all[k].second);
  }
}

TEST_CASE("report round-trip and byte stability") {
  const ExperimentReport r = sample_report();
  CHECK(report_from_json(report_to_json(r)) == r);
  const auto a = testing::scratch_dir("report_a"), b = testing::scratch_dir("report_b");
  write_report(r, a);
  write_report(read_report(a), b);
  for (const char* f : {"report.json", "metrics.csv", "traces.csv"}) CHECK(slurp(a / f) == slurp(b / f));
  CHECK(read_report(a) == r);

  const std::string csv = slurp(a / "metrics.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2);
  CHECK(csv.rfind("t,seenAcc,unseenAcc,H,AUSUC\n", 0) == 0);
  CHECK(csv.find("1,0.900000000,,0.300000000,\n") != std::string::npos);
  const std::string traces = slurp(a / "traces.csv");
  CHECK(traces.find("2,2,1,0.500000000\n") != std::string::npos);

  // Config keys keep insertion order.
  const std::string json = slurp(a / "report.json");
  CHECK(json.find("\"zeta\"") < json.find("\"alpha\""));

  auto bad = report_to_json(r);
  bad["version"] = 99;
  CHECK_THROWS_AS(report_from_json(bad), FormatError);
  bad = report_to_json(r);
  bad.erase("tasks");
  CHECK_THROWS_AS(report_from_json(bad), FormatError);
  std::ofstream(a / "report.json") << "{not json";
  CHECK_THROWS_AS(read_report(a), FormatError);
}

TEST_CASE("quantization") {
  CHECK(quantize(0.1234567894) == 0.123456789);
  CHECK(quantize(-1e-12) == 0.0);
  CHECK_FALSE(std::signbit(quantize(-1e-12)));
  CHECK(fixed9(std::nullopt).empty());
  CHECK(fixed9(1.0 / 3.0) == "0.333333333");
}
