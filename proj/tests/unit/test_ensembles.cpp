#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "stackbench/ensembles.hpp"
#include "stackbench/errors.hpp"
#include "stackbench/learners.hpp"
#include "stackbench/metrics.hpp"
#include "stackbench/nnls.hpp"
#include "stackbench/simgen.hpp"

using namespace stackbench;

namespace {

const Dataset& small_data() {
  static const Dataset d = generate(condition_from_id("mixed-low"), 300, 77);
  return d;
}

SuperlearnerSpec cheap_superlearner() {
  SuperlearnerSpec s;
  s.base_specs = {KnnSpec{5, KnnBackend::kdtree}, MarsSpec{}, CiTreeSpec{}};
  s.folds = 5;
  return s;
}

}  // namespace

TEST_SUITE("ensembles") {

TEST_CASE("single-learner superlearner is that learner") {
  SuperlearnerSpec s;
  s.base_specs = {MarsSpec{}};
  const auto sl = fit_superlearner(s, small_data(), 11);
  const auto* m = sl.as<SuperlearnerModel>();
  REQUIRE(m != nullptr);
  CHECK(m->weights().weights == std::vector<double>{1.0});
  const auto direct = fit(MarsSpec{}, small_data(), 11);
  const auto a = sl.predict(small_data().features());
  const auto b = direct.predict(small_data().features());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
}

TEST_CASE("duplicated learner gives the same predictions as one copy") {
  SuperlearnerSpec one, two;
  one.base_specs = {KnnSpec{5, KnnBackend::kdtree}, MarsSpec{}};
  two.base_specs = {KnnSpec{5, KnnBackend::kdtree}, MarsSpec{}, MarsSpec{}};
  one.folds = two.folds = 5;
  const auto a = fit_superlearner(one, small_data(), 3).predict(small_data().features());
  const auto b = fit_superlearner(two, small_data(), 3).predict(small_data().features());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
}

TEST_CASE("base learner order does not matter") {
  auto s = cheap_superlearner();
  const auto fwd = fit_superlearner(s, small_data(), 8);
  std::reverse(s.base_specs.begin(), s.base_specs.end());
  const auto rev = fit_superlearner(s, small_data(), 8);
  const auto wf = fwd.as<SuperlearnerModel>()->weights().weights;
  const auto wr = rev.as<SuperlearnerModel>()->weights().weights;
  for (std::size_t j = 0; j < wf.size(); ++j) CHECK(std::abs(wf[j] - wr[wf.size() - 1 - j]) <= 1e-12);
  const auto a = fwd.predict(small_data().features());
  const auto b = rev.predict(small_data().features());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
}

TEST_CASE("cross-validated risk of the combination is at most the best member's") {
  const auto det = fit_superlearner_detailed(cheap_superlearner(), small_data(), 5);
  const auto y = small_data().targets();
  const auto w = det.model.as<SuperlearnerModel>()->weights().weights;
  const double combined = combination_rss(det.cv_predictions, y, w);
  for (std::size_t j = 0; j < w.size(); ++j) {
    std::vector<double> e(w.size(), 0.0);
    e[j] = 1.0;
    CHECK(combined <= combination_rss(det.cv_predictions, y, e) + 1e-9);
  }
  double sum = 0.0;
  for (double v : w) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("out-of-fold predictions come from models that never saw the row") {
  const auto det = fit_superlearner_detailed(cheap_superlearner(), small_data(), 5);
  REQUIRE(det.fold_of_row.size() == small_data().rows());
  for (std::size_t v = 0; v < 5; ++v) {
    std::vector<std::size_t> train_rows, held;
    for (std::size_t i = 0; i < det.fold_of_row.size(); ++i) (det.fold_of_row[i] == v ? held : train_rows).push_back(i);
    const auto spec = cheap_superlearner().base_specs[0];
    const auto m = fit(spec, small_data().subset(train_rows), superlearner_member_seed(5, spec, v));
    const auto p = m.predict(small_data().subset(held).features());
    for (std::size_t i = 0; i < held.size(); ++i) CHECK(det.cv_predictions(held[i], 0) == p[i]);
  }
}

TEST_CASE("too few rows per class is a fit error") {
  Matrix x(30, 2);
  for (std::size_t i = 0; i < 30; ++i) x(i, 0) = static_cast<double>(i);
  std::vector<int> y(30, 0);
  for (std::size_t i = 0; i < 5; ++i) y[i] = 1;
  CHECK_THROWS_AS(fit_superlearner(preset_fast_superlearner(), Dataset(x, y), 0), FitError);
}

TEST_CASE("logistic meta-learner") {
  auto s = cheap_superlearner();
  s.meta = MetaLearner::logistic;
  const auto m = fit_superlearner(s, small_data(), 2);
  const auto* sl = m.as<SuperlearnerModel>();
  CHECK(sl->coefficients().size() == 4);
  CHECK(sl->weights().weights.empty());
  for (double p : m.predict(small_data().features())) CHECK((p >= 0.0 && p <= 1.0));
}

TEST_CASE("one-member cascade is the member") {
  CascadeSpec c;
  c.layers = {{{MarsSpec{}, 1.0}}};
  const auto cas = fit_cascade(c, small_data(), 21);
  const auto direct = fit(MarsSpec{}, small_data(), 21);
  CHECK(cas.predict(small_data().features()) == direct.predict(small_data().features()));
  CHECK(cascade_member_seed(21, 0, 0) == 21);
  CHECK(cascade_member_seed(21, 0, 1) != cascade_member_seed(21, 1, 0));
}

TEST_CASE("cascade layer widths and passthrough") {
  CascadeSpec c;
  c.layers = {{{KnnSpec{5}, 0.632}, {KnnSpec{5}, 0.632}, {KnnSpec{10}, 1.0}, {MarsSpec{}, 0.8}},
              {{KnnSpec{5}, 1.0}, {CiTreeSpec{}, 1.0}},
              {{KnnSpec{5}, 1.0}}};
  const auto det = fit_cascade_detailed(c, small_data(), 4);
  REQUIRE(det.training_outputs.size() == 3);
  CHECK(det.training_outputs[0].cols() == 4);
  CHECK(det.training_outputs[1].cols() == 2);
  CHECK(det.training_outputs[2].cols() == 1);
  const auto* model = det.model.as<CascadeModel>();
  REQUIRE(model != nullptr);
  CHECK(model->layers()[1][0].feature_count() == 13 + 4);
  CHECK(model->layers()[2][0].feature_count() == 13 + 2);
  CHECK(det.member_rows[0][0].size() == static_cast<std::size_t>(std::lround(0.632 * 300)));
  CHECK(det.member_rows[0][0] != det.member_rows[0][1]);

  c.passthrough = false;
  const auto narrow = fit_cascade(c, small_data(), 4);
  CHECK(narrow.as<CascadeModel>()->layers()[1][0].feature_count() == 4);
  const auto outs = narrow.as<CascadeModel>()->layer_outputs(small_data().features());
  CHECK(outs.back().cols() == 1);

  c.layer_features = LayerFeatures::out_of_fold;
  for (double p : fit_cascade(c, small_data(), 4).predict(small_data().features())) CHECK((p >= 0.0 && p <= 1.0));
}

TEST_CASE("mars dominates the superlearner on linear data") {
  const auto d = generate(condition_from_id("linear-low"), 2500, 1);
  const auto m = fit_algorithm(preset_superlearner(), d, 1);
  const auto w = m.as<SuperlearnerModel>()->weights().weights;
  REQUIRE(w.size() == 6);
  CHECK(std::max_element(w.begin(), w.end()) - w.begin() == 3);
}

TEST_CASE("preset contents") {
  CHECK(preset_names().size() == 8);
  for (const auto& name : preset_names()) CHECK_NOTHROW(validate(preset(name)));
  CHECK_THROWS_AS(preset("nope"), InvalidSpec);

  const auto sl = preset_superlearner();
  REQUIRE(sl.base_specs.size() == 6);
  std::vector<std::string> families;
  for (const auto& s : sl.base_specs) families.emplace_back(family_name(s));
  CHECK(families == std::vector<std::string>{"random_forest", "random_ferns", "knn", "mars", "ctree", "boost"});
  CHECK(sl.folds == 10);
  CHECK(preset_fast_superlearner().base_specs.size() == 2);

  const auto deep = preset_deep_knn();
  REQUIRE(deep.layers.size() == 3);
  CHECK(deep.layers[0].size() == 10);
  CHECK(deep.layers[1].size() == 10);
  CHECK(deep.layers[2].size() == 5);

  const auto mixed = preset_mixed_deep();
  CHECK(mixed.layers[0].size() == 4);
  CHECK(mixed.layers[0][0].bootstrap_fraction == 0.5);
  CHECK(mixed.layers[0][1].bootstrap_fraction == 0.8);

  CHECK(std::get<MlpSpec>(preset_dnn_mirror()).hidden_sizes == std::vector<int>{4, 2, 1});
  CHECK(std::get<MlpSpec>(preset_dnn_tuned()).hidden_sizes == std::vector<int>{13, 5, 3, 1});
  CHECK(preset_knn_superlearner().base_specs.size() == 4);
}

TEST_CASE("algorithm specs round-trip through json") {
  for (const auto& name : preset_names()) {
    const auto spec = preset(name);
    CHECK(to_json(algorithm_spec_from_json(to_json(spec))) == to_json(spec));
  }
  CHECK_THROWS_AS(algorithm_spec_from_json(nlohmann::json{{"kind", "superlearner"}, {"base_learners", nlohmann::json::array()}}),
                  InvalidSpec);
}

}
