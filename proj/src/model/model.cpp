#include "cgzsl/model/model.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "json.hpp"

#include "cgzsl/data/binary_io.hpp"
#include "cgzsl/errors.hpp"

namespace cgzsl::model {

using nn::Activation;
using nn::DenseNet;
using nn::LayerSpec;

ModelConfig ModelConfig::with_defaults(std::size_t d_x, std::size_t d_a) {
  return ModelConfig{d_x, d_a, d_a, 4 * d_x, 4 * d_x, 10.0};
}

void ModelConfig::validate() const {
  if (d_x == 0 || d_a == 0 || d_z == 0 || hidden_g == 0 || hidden_d == 0) {
    throw ValidationError("model dimensions must all be >= 1");
  }
  if (!(temperature > 0.0)) throw ValidationError("temperature must be > 0");
}

namespace {

DenseNet make_generator(const ModelConfig& c, std::mt19937_64& rng) {
  const LayerSpec specs[] = {{c.d_z + c.d_a, c.hidden_g, Activation::leaky_relu},
                             {c.hidden_g, c.d_x, Activation::relu}};
  return DenseNet(specs, rng);
}

DenseNet make_discriminator(const ModelConfig& c, std::mt19937_64& rng) {
  const LayerSpec specs[] = {{c.d_a, c.hidden_d, Activation::leaky_relu},
                             {c.hidden_d, c.d_x, Activation::linear}};
  return DenseNet(specs, rng);
}

}  // namespace

CgzslModel::CgzslModel(ModelConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  generator_ = make_generator(config_, rng);
  discriminator_ = make_discriminator(config_, rng);
  attributes_ = Matrix(0, config_.d_a);
}

CgzslModel::CgzslModel(ModelConfig config, DenseNet generator, DenseNet discriminator)
    : config_(config), generator_(std::move(generator)), discriminator_(std::move(discriminator)) {
  config_.validate();
  if (generator_.input_dim() != config_.d_z + config_.d_a || generator_.output_dim() != config_.d_x) {
    throw ShapeError("generator dimensions do not match model config");
  }
  if (discriminator_.input_dim() != config_.d_a || discriminator_.output_dim() != config_.d_x) {
    throw ShapeError("discriminator dimensions do not match model config");
  }
  attributes_ = Matrix(0, config_.d_a);
}

void CgzslModel::encounter(int class_id, std::span<const double> attribute, bool seen) {
  if (attribute.size() != config_.d_a) {
    throw ShapeError("attribute row has " + std::to_string(attribute.size()) +
                     " entries, model expects " + std::to_string(config_.d_a));
  }
  if (!knows(class_id)) {
    attr_row_[class_id] = encountered_.size();
    encountered_.push_back(class_id);
    attributes_ = nn::vconcat(attributes_, Matrix::row_vector(attribute));
  }
  if (seen) mark_seen(class_id);
}

void CgzslModel::mark_seen(int class_id) {
  if (!knows(class_id)) throw ContractError("mark_seen: unknown class " + std::to_string(class_id));
  if (!is_seen(class_id)) seen_.push_back(class_id);
}

bool CgzslModel::is_seen(int class_id) const {
  return std::find(seen_.begin(), seen_.end(), class_id) != seen_.end();
}

std::vector<int> CgzslModel::unseen_classes() const {
  std::vector<int> out;
  for (int c : encountered_)
    if (!is_seen(c)) out.push_back(c);
  return out;
}

std::size_t CgzslModel::position_of(int class_id) const {
  const auto it = attr_row_.find(class_id);
  if (it == attr_row_.end()) throw ContractError("unknown class " + std::to_string(class_id));
  return it->second;
}

Matrix CgzslModel::attributes_of(std::span<const int> class_ids) const {
  std::vector<std::size_t> rows;
  rows.reserve(class_ids.size());
  for (int c : class_ids) rows.push_back(position_of(c));
  return nn::select_rows(attributes_, rows);
}

Matrix generate(const CgzslModel& model, const Matrix& z, const Matrix& attrs) {
  const auto& c = model.config();
  if (z.rows() != attrs.rows()) throw ShapeError("generate: noise and attribute row counts differ");
  if (z.cols() != c.d_z || attrs.cols() != c.d_a) throw ShapeError("generate: input dimensions");
  if (z.rows() == 0) return Matrix(0, c.d_x);
  return model.generator().forward(nn::hconcat(z, attrs));
}

Matrix project_attributes(const CgzslModel& model, const Matrix& attrs) {
  if (attrs.cols() != model.config().d_a) throw ShapeError("project_attributes: attribute dimension");
  if (attrs.rows() == 0) return Matrix(0, model.config().d_x);
  return model.discriminator().forward(attrs);
}

Classification classify(const Matrix& x, const Matrix& projections) {
  if (projections.rows() == 0) throw ContractError("classify: no identifier projections");
  Classification out{{}, nn::cosine_matrix(x, projections)};
  out.predicted.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = out.scores.row(i);
    // max_element returns the first maximum, so ties resolve to the lowest index.
    out.predicted[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Matrix sample_noise(std::size_t n, std::size_t d_z, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, d_z);
  for (double& v : z.values()) v = normal(rng);
  return z;
}

namespace {

constexpr char kCheckpointMagic[5] = {'C', 'Z', 'S', 'M', '1'};

nlohmann::ordered_json net_header(const DenseNet& net) {
  auto layers = nlohmann::ordered_json::array();
  for (const auto& s : net.specs()) {
    layers.push_back({{"in", s.in}, {"out", s.out}, {"activation", nn::to_string(s.activation)}});
  }
  return layers;
}

DenseNet read_net(std::istream& in, const nlohmann::json& layers) {
  std::vector<nn::DenseLayer> out;
  for (const auto& l : layers) {
    const auto rows = l.at("in").get<std::size_t>();
    const auto cols = l.at("out").get<std::size_t>();
    nn::DenseLayer layer{Matrix(rows, cols), Matrix(1, cols),
                         nn::activation_from_string(l.at("activation").get<std::string>())};
    data::read_f64s(in, layer.weight.values());
    data::read_f64s(in, layer.bias.values());
    out.push_back(std::move(layer));
  }
  return DenseNet(std::move(out));
}

}  // namespace

void save_checkpoint(const CgzslModel& model, const std::filesystem::path& path) {
  const auto& c = model.config();
  nlohmann::ordered_json header;
  header["dims"] = {{"d_x", c.d_x}, {"d_a", c.d_a}, {"d_z", c.d_z},
                    {"hidden_g", c.hidden_g}, {"hidden_d", c.hidden_d}};
  header["temperature"] = c.temperature;
  header["generator"] = net_header(model.generator());
  header["discriminator"] = net_header(model.discriminator());
  header["encountered"] = model.encountered_classes();
  header["seen"] = model.seen_classes();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  out << header.dump() << '\n';
  for (const DenseNet* net : {&model.generator(), &model.discriminator()}) {
    for (const Matrix* p : net->parameters()) data::write_f64s(out, p->values());
  }
  data::write_f64s(out, model.encountered_attributes().values());
  if (!out) throw IoError("failed writing " + path.string());
}

CgzslModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[5];
  if (!in.read(magic, 5) || !std::equal(magic, magic + 5, kCheckpointMagic)) {
    throw FormatError(path.string() + ": not a model checkpoint (bad magic)");
  }
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
  try {
    const auto& d = header.at("dims");
    ModelConfig cfg{d.at("d_x").get<std::size_t>(), d.at("d_a").get<std::size_t>(),
                    d.at("d_z").get<std::size_t>(), d.at("hidden_g").get<std::size_t>(),
                    d.at("hidden_d").get<std::size_t>(), header.at("temperature").get<double>()};
    DenseNet gen = read_net(in, header.at("generator"));
    DenseNet disc = read_net(in, header.at("discriminator"));
    CgzslModel model(cfg, std::move(gen), std::move(disc));
    const auto encountered = header.at("encountered").get<std::vector<int>>();
    const auto seen = header.at("seen").get<std::vector<int>>();
    std::vector<double> attr(cfg.d_a);
    for (int c : encountered) {
      data::read_f64s(in, attr);
      model.encounter(c, attr, false);
    }
    for (int c : seen) model.mark_seen(c);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
}

}  // namespace cgzsl::model
