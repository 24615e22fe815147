#include "stackbench/learners.hpp"

#include <chrono>
#include <string>

#include "stackbench/boost.hpp"
#include "stackbench/citree.hpp"
#include "stackbench/errors.hpp"
#include "stackbench/ferns.hpp"
#include "stackbench/forest.hpp"
#include "stackbench/knn.hpp"
#include "stackbench/mars.hpp"
#include "stackbench/mlp.hpp"

namespace stackbench {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::shared_ptr<const Model> dispatch(const LearnerSpec& spec, const Dataset& data, std::uint64_t seed) {
  return std::visit(
      Overloaded{
          [&](const KnnSpec& s) -> std::shared_ptr<const Model> { return fit_knn(s, data); },
          [&](const RandomForestSpec& s) -> std::shared_ptr<const Model> { return fit_forest(s, data, seed); },
          [&](const RandomFernsSpec& s) -> std::shared_ptr<const Model> { return fit_ferns(s, data, seed); },
          [&](const CiTreeSpec& s) -> std::shared_ptr<const Model> { return fit_citree(s, data, seed); },
          [&](const MarsSpec& s) -> std::shared_ptr<const Model> { return mars_fit(data, s); },
          [&](const BoostSpec& s) -> std::shared_ptr<const Model> { return boost_fit(data, s); },
          [&](const MlpSpec& s) -> std::shared_ptr<const Model> { return mlp_fit(data, s, seed); },
      },
      spec);
}

}  // namespace

FittedModel fit(const LearnerSpec& spec, const Dataset& data, std::uint64_t seed) {
  validate(spec);
  const std::string family(family_name(spec));
  if (data.rows() == 0) throw FitError(family, "empty training data");
  const auto start = std::chrono::steady_clock::now();
  auto model = dispatch(spec, data, seed);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return FittedModel(std::move(model), to_json(spec), seed, elapsed.count());
}

Probabilities predict(const FittedModel& model, const Matrix& features) { return model.predict(features); }

}  // namespace stackbench
