#pragma once

#include <memory>
#include <span>
#include <vector>

#include "stackbench/dataset.hpp"
#include "stackbench/learner_spec.hpp"
#include "stackbench/model.hpp"
#include "stackbench/rng.hpp"

namespace stackbench {

/// Fully connected sigmoid network with a single sigmoid output unit,
/// trained on cross-entropy.
class MlpNetwork {
 public:
  struct Layer {
    Matrix weights;  // fan_out x fan_in
    std::vector<double> bias;
  };

  MlpNetwork() = default;
  /// Zero weights for inputs -> hidden_sizes... -> 1.
  MlpNetwork(std::size_t inputs, std::span<const int> hidden_sizes);
  explicit MlpNetwork(std::vector<Layer> layers);

  /// Weights uniform in +-scale * 2 sqrt(6 / (fan_in + fan_out)), twice the
  /// Glorot range; biases zero.
  void initialize(SeededRng& rng, double scale = 1.0);

  std::size_t inputs() const noexcept;
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  double predict(std::span<const double> x) const;

  std::size_t parameter_count() const noexcept;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  /// Mean cross-entropy over the rows; gradient (if non-null) in the
  /// parameters() layout, by backpropagation.
  double loss(const Matrix& x, std::span<const double> y, std::vector<double>* gradient) const;
  double loss(const Matrix& x, std::span<const double> y,
              std::span<const std::size_t> rows, std::vector<double>* gradient) const;

 private:
  std::vector<Layer> layers_;
};

/// Network plus the input standardization learned at fit time.
class MlpModel final : public Model {
 public:
  MlpModel(MlpNetwork network, std::vector<double> mean, std::vector<double> scale);

  std::string_view family() const noexcept override { return "mlp"; }
  std::size_t feature_count() const noexcept override { return mean_.size(); }
  Probabilities predict_rows(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  static std::shared_ptr<const MlpModel> from_parameters(const nlohmann::json& params,
                                                         std::size_t feature_count);

  const MlpNetwork& network() const noexcept { return net_; }

 private:
  MlpNetwork net_;
  std::vector<double> mean_;
  std::vector<double> scale_;
};

/// Mini-batch SGD with classical momentum on standardized inputs; weights
/// and per-epoch shuffles come from the seed.
std::shared_ptr<const MlpModel> mlp_fit(const Dataset& data, const MlpSpec& spec,
                                        std::uint64_t seed);

}  // namespace stackbench
