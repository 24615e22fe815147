#include "stackbench/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stackbench/errors.hpp"
#include "stackbench/simd.hpp"
#include "stackbench/split.hpp"

namespace stackbench {
namespace {

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

MlpNetwork::MlpNetwork(std::size_t inputs, std::span<const int> hidden_sizes) {
  std::size_t fan_in = inputs;
  std::vector<int> sizes(hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(1);
  for (int s : sizes) {
    if (s <= 0) throw InvalidArgument("MlpNetwork: layer sizes must be positive");
    const auto fan_out = static_cast<std::size_t>(s);
    layers_.push_back({Matrix(fan_out, fan_in), std::vector<double>(fan_out, 0.0)});
    fan_in = fan_out;
  }
}

MlpNetwork::MlpNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty() || layers_.back().weights.rows() != 1) {
    throw InvalidArgument("MlpNetwork: last layer must have a single output");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].weights.rows() ||
        (l > 0 && layers_[l].weights.cols() != layers_[l - 1].weights.rows())) {
      throw InvalidArgument("MlpNetwork: inconsistent layer shapes");
    }
  }
}

void MlpNetwork::initialize(SeededRng& rng, double scale) {
  for (auto& layer : layers_) {
    const auto fans = static_cast<double>(layer.weights.cols() + layer.weights.rows());
    const double bound = scale * 2.0 * std::sqrt(6.0 / fans);
    for (double& w : layer.weights.values()) w = rng.uniform(-bound, bound);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

std::size_t MlpNetwork::inputs() const noexcept {
  return layers_.empty() ? 0 : layers_.front().weights.cols();
}

double MlpNetwork::predict(std::span<const double> x) const {
  std::vector<double> in(x.begin(), x.end()), out;
  double z = 0.0;
  for (const auto& layer : layers_) {
    out.resize(layer.weights.rows());
    for (std::size_t u = 0; u < out.size(); ++u) {
      z = layer.bias[u] + simd::dot(layer.weights.row(u), in);
      out[u] = sigmoid(z);
    }
    in.swap(out);
  }
  return in[0];
}

std::size_t MlpNetwork::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.values().size() + l.bias.size();
  return n;
}

std::vector<double> MlpNetwork::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers_) {
    flat.insert(flat.end(), l.weights.values().begin(), l.weights.values().end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void MlpNetwork::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw InvalidArgument("MlpNetwork: parameter count mismatch");
  auto it = flat.begin();
  for (auto& l : layers_) {
    auto& w = l.weights.values();
    std::copy_n(it, w.size(), w.begin());
    it += static_cast<std::ptrdiff_t>(w.size());
    std::copy_n(it, l.bias.size(), l.bias.begin());
    it += static_cast<std::ptrdiff_t>(l.bias.size());
  }
}

double MlpNetwork::loss(const Matrix& x, std::span<const double> y,
                        std::vector<double>* gradient) const {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return loss(x, y, rows, gradient);
}

double MlpNetwork::loss(const Matrix& x, std::span<const double> y,
                        std::span<const std::size_t> rows, std::vector<double>* gradient) const {
  if (x.cols() != inputs() || y.size() != x.rows()) throw InvalidArgument("MlpNetwork::loss: shape mismatch");
  if (rows.empty()) throw InvalidArgument("MlpNetwork::loss: no rows");
  const std::size_t depth = layers_.size();
  if (gradient) gradient->assign(parameter_count(), 0.0);

  // Offsets of each layer's block in the flat gradient.
  std::vector<std::size_t> offset(depth);
  for (std::size_t l = 0, o = 0; l < depth; ++l) {
    offset[l] = o;
    o += layers_[l].weights.values().size() + layers_[l].bias.size();
  }

  std::vector<std::vector<double>> act(depth + 1);
  std::vector<double> delta, prev_delta;
  double total = 0.0;
  for (auto r : rows) {
    const auto xr = x.row(r);
    act[0].assign(xr.begin(), xr.end());
    double z_out = 0.0;
    for (std::size_t l = 0; l < depth; ++l) {
      const auto& layer = layers_[l];
      act[l + 1].resize(layer.weights.rows());
      for (std::size_t u = 0; u < layer.weights.rows(); ++u) {
        const double z = layer.bias[u] + simd::dot(layer.weights.row(u), act[l]);
        act[l + 1][u] = sigmoid(z);
        z_out = z;
      }
    }
    total += softplus(z_out) - y[r] * z_out;
    if (!gradient) continue;

    delta.assign(1, act[depth][0] - y[r]);
    for (std::size_t l = depth; l-- > 0;) {
      const auto& layer = layers_[l];
      double* g = gradient->data() + offset[l];
      const std::size_t fan_in = layer.weights.cols();
      for (std::size_t u = 0; u < delta.size(); ++u) {
        simd::axpy(delta[u], act[l], {g + u * fan_in, fan_in});
        g[layer.weights.values().size() + u] += delta[u];
      }
      if (l == 0) break;
      prev_delta.assign(fan_in, 0.0);
      for (std::size_t u = 0; u < delta.size(); ++u) simd::axpy(delta[u], layer.weights.row(u), prev_delta);
      for (std::size_t v = 0; v < fan_in; ++v) {
        const double a = act[l][v];
        prev_delta[v] *= a * (1.0 - a);
      }
      delta.swap(prev_delta);
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  if (gradient) {
    for (double& g : *gradient) g *= inv;
  }
  return total * inv;
}

MlpModel::MlpModel(MlpNetwork network, std::vector<double> mean, std::vector<double> scale)
    : net_(std::move(network)), mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != net_.inputs() || scale_.size() != mean_.size()) {
    throw InvalidArgument("mlp: standardization does not match network inputs");
  }
}

Probabilities MlpModel::predict_rows(const Matrix& x) const {
  Probabilities out(x.rows());
  std::vector<double> z(mean_.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = (row[j] - mean_[j]) / scale_[j];
    out[i] = net_.predict(z);
  }
  return out;
}

nlohmann::json MlpModel::parameters() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net_.layers()) {
    layers.push_back({{"rows", l.weights.rows()}, {"cols", l.weights.cols()},
                      {"weights", l.weights.values()}, {"bias", l.bias}});
  }
  return {{"mean", mean_}, {"scale", scale_}, {"layers", layers}};
}

std::shared_ptr<const MlpModel> MlpModel::from_parameters(const nlohmann::json& params,
                                                          std::size_t feature_count) {
  std::vector<MlpNetwork::Layer> layers;
  for (const auto& l : params.at("layers")) {
    layers.push_back({Matrix(l.at("rows").get<std::size_t>(), l.at("cols").get<std::size_t>(),
                             l.at("weights").get<std::vector<double>>()),
                      l.at("bias").get<std::vector<double>>()});
  }
  auto model = std::make_shared<MlpModel>(MlpNetwork(std::move(layers)),
                                          params.at("mean").get<std::vector<double>>(),
                                          params.at("scale").get<std::vector<double>>());
  if (model->feature_count() != feature_count) throw LoadError("mlp: input width mismatch");
  return model;
}

std::shared_ptr<const MlpModel> mlp_fit(const Dataset& data, const MlpSpec& spec,
                                        std::uint64_t seed) {
  if (data.empty()) throw FitError("mlp", "no training rows");
  if (!data.has_both_classes()) throw FitError("mlp", "training labels contain a single class");
  const std::size_t n = data.rows(), p = data.cols();
  const SeededRng master(seed);

  std::vector<double> mean(p, 0.0), scale(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) simd::axpy(1.0, data.features().row(i), mean);
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double d = data.features()(i, j) - mean[j];
      scale[j] += d * d;
    }
  }
  for (double& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 1e-12)) s = 1.0;
  }
  Matrix x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = (data.features()(i, j) - mean[j]) / scale[j];
  }
  const auto y = data.targets();

  MlpNetwork net(p, spec.hidden_sizes);
  SeededRng init_rng = master.child(hash_key("init"));
  net.initialize(init_rng, spec.init_scale);

  SeededRng sample_rng = master.child(hash_key("bootstrap"));
  std::vector<std::size_t> order = subsample_rows(n, spec.bootstrap_fraction, sample_rng);
  SeededRng shuffle_rng = master.child(hash_key("shuffle"));

  std::vector<double> params = net.parameters();
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad;
  const auto batch = static_cast<std::size_t>(spec.batch_size);
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      net.loss(x, y, std::span<const std::size_t>(order).subspan(start, end - start), &grad);
      for (std::size_t k = 0; k < params.size(); ++k) {
        velocity[k] = spec.momentum * velocity[k] - spec.learning_rate * grad[k];
        params[k] += velocity[k];
      }
      net.set_parameters(params);
    }
  }
  return std::make_shared<MlpModel>(std::move(net), std::move(mean), std::move(scale));
}

}  // namespace stackbench
