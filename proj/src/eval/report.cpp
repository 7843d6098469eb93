#include "cgzsl/eval/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cgzsl/errors.hpp"

namespace cgzsl::eval {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

double quantize(double v) {
  if (!std::isfinite(v)) return v;
  const double q = std::round(v * 1e9) / 1e9;
  return q == 0.0 ? 0.0 : q;
}

namespace {

void quantize_cell(Cell& c) {
  if (c) *c = quantize(*c);
}

void quantize_matrix(CellMatrix& m) {
  for (auto& row : m)
    for (auto& c : row) quantize_cell(c);
}

ojson cell_json(const Cell& c) { return c ? ojson(*c) : ojson(nullptr); }

Cell cell_from(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

ojson matrix_json(const CellMatrix& m) {
  ojson out = ojson::array();
  for (const auto& row : m) {
    ojson r = ojson::array();
    for (const auto& c : row) r.push_back(cell_json(c));
    out.push_back(std::move(r));
  }
  return out;
}

CellMatrix matrix_from(const ojson& j) {
  CellMatrix m;
  for (const auto& row : j) {
    std::vector<Cell> r;
    for (const auto& c : row) r.push_back(cell_from(c));
    m.push_back(std::move(r));
  }
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void quantize(ExperimentReport& r) {
  r.mSA = quantize(r.mSA);
  quantize_cell(r.mUA);
  quantize_cell(r.mH);
  r.forgetting = quantize(r.forgetting);
  quantize_cell(r.mAUSUC);
  quantize_matrix(r.seen_accuracy);
  quantize_matrix(r.unseen_accuracy);
  quantize_matrix(r.harmonic_accuracy);
  for (auto& t : r.tasks) {
    t.seen_acc = quantize(t.seen_acc);
    quantize_cell(t.unseen_acc);
    t.harmonic = quantize(t.harmonic);
    quantize_cell(t.ausuc);
    for (auto& [c, s] : t.similarity) s = quantize(s);
    for (auto& [d, g] : t.losses) {
      d = quantize(d);
      g = quantize(g);
    }
  }
}

std::string fixed9(const Cell& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", quantize(*v));
  return buf;
}

ojson report_to_json(const ExperimentReport& r) {
  ojson j;
  j["version"] = r.version;
  j["setting"] = r.setting;
  j["T"] = r.T;
  j["mSA"] = r.mSA;
  j["mUA"] = cell_json(r.mUA);
  j["mH"] = cell_json(r.mH);
  j["forgetting"] = r.forgetting;
  j["forgetting_basis"] = r.forgetting_basis;
  j["mAUSUC"] = cell_json(r.mAUSUC);
  j["trace_class"] = r.trace_class ? ojson(*r.trace_class) : ojson(nullptr);
  j["seen_accuracy"] = matrix_json(r.seen_accuracy);
  j["unseen_accuracy"] = matrix_json(r.unseen_accuracy);
  j["harmonic_accuracy"] = matrix_json(r.harmonic_accuracy);
  j["tasks"] = ojson::array();
  for (const auto& t : r.tasks) {
    ojson e;
    e["t"] = t.t;
    e["num_seen"] = t.num_seen;
    e["num_unseen"] = t.num_unseen;
    e["seen_acc"] = t.seen_acc;
    e["unseen_acc"] = cell_json(t.unseen_acc);
    e["H"] = t.harmonic;
    e["AUSUC"] = cell_json(t.ausuc);
    e["replay_rows"] = t.replay_rows;
    e["replay_misfiled"] = t.replay_misfiled;
    e["shortfall"] = ojson::array();
    for (const auto& s : t.shortfall) {
      e["shortfall"].push_back({{"class", s.class_id}, {"requested", s.requested}, {"kept", s.kept}});
    }
    e["similarity"] = ojson::array();
    for (const auto& [c, s] : t.similarity) e["similarity"].push_back({{"class", c}, {"cosine", s}});
    e["losses"] = ojson::array();
    for (const auto& [d, g] : t.losses) e["losses"].push_back({{"d", d}, {"g", g}});
    j["tasks"].push_back(std::move(e));
  }
  j["config"] = r.config;
  return j;
}

ExperimentReport report_from_json(const ojson& j) {
  ExperimentReport r;
  try {
    r.version = j.at("version").get<int>();
    if (r.version != kReportVersion) throw FormatError("report: unsupported version " + std::to_string(r.version));
    r.setting = j.at("setting").get<std::string>();
    r.T = j.at("T").get<std::size_t>();
    r.mSA = j.at("mSA").get<double>();
    r.mUA = cell_from(j.at("mUA"));
    r.mH = cell_from(j.at("mH"));
    r.forgetting = j.at("forgetting").get<double>();
    r.forgetting_basis = j.at("forgetting_basis").get<std::string>();
    r.mAUSUC = cell_from(j.at("mAUSUC"));
    if (!j.at("trace_class").is_null()) r.trace_class = j.at("trace_class").get<int>();
    r.seen_accuracy = matrix_from(j.at("seen_accuracy"));
    r.unseen_accuracy = matrix_from(j.at("unseen_accuracy"));
    r.harmonic_accuracy = matrix_from(j.at("harmonic_accuracy"));
    for (const auto& e : j.at("tasks")) {
      TaskResult t;
      t.t = e.at("t").get<std::size_t>();
      t.num_seen = e.at("num_seen").get<std::size_t>();
      t.num_unseen = e.at("num_unseen").get<std::size_t>();
      t.seen_acc = e.at("seen_acc").get<double>();
      t.unseen_acc = cell_from(e.at("unseen_acc"));
      t.harmonic = e.at("H").get<double>();
      t.ausuc = cell_from(e.at("AUSUC"));
      t.replay_rows = e.at("replay_rows").get<std::size_t>();
      t.replay_misfiled = e.at("replay_misfiled").get<std::size_t>();
      for (const auto& s : e.at("shortfall")) {
        t.shortfall.push_back({s.at("class").get<int>(), s.at("requested").get<std::size_t>(),
                               s.at("kept").get<std::size_t>()});
      }
      for (const auto& s : e.at("similarity")) t.similarity.emplace_back(s.at("class").get<int>(), s.at("cosine").get<double>());
      for (const auto& s : e.at("losses")) t.losses.emplace_back(s.at("d").get<double>(), s.at("g").get<double>());
      r.tasks.push_back(std::move(t));
    }
    r.config = j.at("config");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
  return r;
}

std::string metrics_csv(const ExperimentReport& r) {
  std::ostringstream out;
  out << "t,seenAcc,unseenAcc,H,AUSUC\n";
  for (const auto& t : r.tasks) {
    out << t.t << ',' << fixed9(t.seen_acc) << ',' << fixed9(t.unseen_acc) << ',' << fixed9(t.harmonic) << ','
        << fixed9(t.ausuc) << '\n';
  }
  return out.str();
}

std::string traces_csv(const ExperimentReport& r) {
  std::ostringstream out;
  out << "t,rank,class,cosine\n";
  for (const auto& t : r.tasks) {
    for (std::size_t k = 0; k < t.similarity.size(); ++k) {
      out << t.t << ',' << k + 1 << ',' << t.similarity[k].first << ',' << fixed9(t.similarity[k].second) << '\n';
    }
  }
  return out.str();
}

void write_report(const ExperimentReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(dir / "metrics.csv", metrics_csv(report));
  write_text(dir / "traces.csv", traces_csv(report));
}

ExperimentReport read_report(const fs::path& dir) {
  const fs::path path = dir / "report.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

}  // namespace cgzsl::eval
