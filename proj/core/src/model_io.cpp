#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

#include "ealm/errors.hpp"
#include "ealm/trainer.hpp"

namespace ealm {

namespace {

constexpr std::string_view kMagic = "EALM-AG1";

void expect_word(std::istream& in, std::string_view word) {
  std::string got;
  if (!(in >> got) || got != word) throw ConfigError("agent file: expected '" + std::string(word) + "'");
}

template <class T>
T read_value(std::istream& in, std::string_view what) {
  T value{};
  if (!(in >> value)) throw ConfigError("agent file: bad value for " + std::string(what));
  return value;
}

template <class T>
T read_field(std::istream& in, std::string_view key) {
  expect_word(in, key);
  return read_value<T>(in, key);
}

void write_vector(std::ostream& out, std::span<const double> v) {
  for (double x : v) out << ' ' << x;
  out << '\n';
}

std::vector<double> read_vector(std::istream& in, std::size_t n, std::string_view what) {
  std::vector<double> v(n);
  for (double& x : v) x = read_value<double>(in, what);
  return v;
}

template <class E>
E read_enum(std::istream& in, std::string_view key, int count) {
  const int v = read_field<int>(in, key);
  if (v < 0 || v >= count) throw ConfigError("agent file: bad value for " + std::string(key));
  return static_cast<E>(v);
}

}  // namespace

void save_agent(std::ostream& out, const AgentParams& params, const RewardConfig& reward) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  out << kMagic << '\n';
  out << "embedding_dim " << params.embedding_dim() << '\n';
  out << "reward tau " << reward.tau << " rho " << reward.rho << " alpha " << reward.alpha << " beta "
      << reward.beta << " rr_mode " << static_cast<int>(reward.rr_mode) << " rr_topk " << reward.rr_topk
      << " llh_threshold " << reward.llh_threshold << " llh_mode " << static_cast<int>(reward.llh_mode)
      << " step_reward_mode " << static_cast<int>(reward.step_reward_mode) << '\n';
  out << "biases\n";
  for (const auto& b : params.encoder.action_bias) write_vector(out, b);
  for (const auto& b : params.encoder.status_bias) write_vector(out, b);
  const auto& layers = params.net.layers();
  out << "layers " << layers.size() << '\n';
  for (const auto& layer : layers) {
    out << "layer " << layer.out() << ' ' << layer.in() << ' '
        << (layer.activation == nn::Activation::kRelu ? "relu" : "identity") << '\n';
    write_vector(out, layer.weight.data);
    write_vector(out, layer.bias);
  }
  out << "end\n";
  out.flags(flags);
  out.precision(precision);
}

void save_agent(const std::filesystem::path& path, const AgentParams& params, const RewardConfig& reward) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write agent file " + path.string());
  save_agent(out, params, reward);
  if (!out) throw ConfigError("failed writing agent file " + path.string());
}

AgentModel load_agent(std::istream& in) {
  expect_word(in, kMagic);
  AgentModel model;
  const auto dim = read_field<std::size_t>(in, "embedding_dim");
  if (dim == 0) throw ConfigError("agent file: embedding_dim must be positive");

  expect_word(in, "reward");
  RewardConfig& r = model.reward;
  r.tau = read_field<double>(in, "tau");
  r.rho = read_field<double>(in, "rho");
  r.alpha = read_field<double>(in, "alpha");
  r.beta = read_field<double>(in, "beta");
  r.rr_mode = read_enum<RrMode>(in, "rr_mode", 2);
  r.rr_topk = read_field<std::size_t>(in, "rr_topk");
  r.llh_threshold = read_field<double>(in, "llh_threshold");
  r.llh_mode = read_enum<LlhMode>(in, "llh_mode", 2);
  r.step_reward_mode = read_enum<StepRewardMode>(in, "step_reward_mode", 2);
  r.validate();

  expect_word(in, "biases");
  model.params.encoder = EncoderParams::zeros(dim);
  for (auto& b : model.params.encoder.action_bias) b = read_vector(in, dim, "action bias");
  for (auto& b : model.params.encoder.status_bias) b = read_vector(in, dim, "status bias");

  const auto count = read_field<std::size_t>(in, "layers");
  std::vector<nn::DenseLayer> layers;
  for (std::size_t l = 0; l < count; ++l) {
    expect_word(in, "layer");
    const auto rows = read_value<std::size_t>(in, "layer rows");
    const auto cols = read_value<std::size_t>(in, "layer cols");
    const auto act = read_value<std::string>(in, "activation");
    nn::DenseLayer layer;
    if (act == "relu") {
      layer.activation = nn::Activation::kRelu;
    } else if (act == "identity") {
      layer.activation = nn::Activation::kIdentity;
    } else {
      throw ConfigError("agent file: unknown activation " + act);
    }
    layer.weight = nn::Matrix(rows, cols);
    layer.weight.data = read_vector(in, rows * cols, "weights");
    layer.bias = read_vector(in, rows, "bias");
    layers.push_back(std::move(layer));
  }
  expect_word(in, "end");
  try {
    model.params.net = nn::DenseNet(std::move(layers));
  } catch (const UsageError& e) {
    throw ConfigError(std::string("agent file: ") + e.what());
  }
  if (model.params.net.input_dim() != 2 * dim || model.params.net.output_dim() != kAllActions.size()) {
    throw ConfigError("agent file: network shape does not match embedding_dim");
  }
  return model;
}

AgentModel load_agent(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read agent file " + path.string());
  return load_agent(in);
}

}  // namespace ealm
