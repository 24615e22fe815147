#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace stackbench {

enum class KnnBackend { kdtree, brute };

/// KNN regression: mean label of the k nearest training rows.
struct KnnSpec {
  int k = 5;
  KnnBackend backend = KnnBackend::kdtree;
};

struct RandomForestSpec {
  int n_trees = 500;
  int mtry = 0;  // 0 selects ceil(sqrt(p))
  /// Share of training rows drawn without replacement for each tree.
  double bootstrap_fraction = 0.632;
  int max_depth = 0;  // 0 is unlimited
  int min_leaf = 5;
};

struct RandomFernsSpec {
  int n_ferns = 50;
  int fern_depth = 8;
};

struct CiTreeSpec {
  double alpha = 0.05;
  int n_permutations = 499;
  int min_node = 20;
};

/// identity: least-squares coefficients; logit: the selected basis refit as a
/// logistic regression (calibrated probabilities).
enum class MarsLink { identity, logit };

struct MarsSpec {
  int max_terms = 21;
  int max_degree = 2;
  double gcv_penalty = 3.0;
  MarsLink link = MarsLink::logit;
};

enum class BoostBase { tree, linear };

struct BoostSpec {
  int n_rounds = 100;
  double shrinkage = 0.1;
  BoostBase base = BoostBase::tree;
  int max_depth = 3;  // tree base only
};

struct MlpSpec {
  std::vector<int> hidden_sizes{4, 2, 1};
  double learning_rate = 0.1;
  double momentum = 0.9;
  int epochs = 100;
  int batch_size = 32;
  /// Optional pre-fit subsample of the training rows ("bootstrap size").
  double bootstrap_fraction = 1.0;
  /// Multiplies the Glorot initialization range; 0 gives zero weights.
  double init_scale = 1.0;
};

using LearnerSpec =
    std::variant<KnnSpec, RandomForestSpec, RandomFernsSpec, CiTreeSpec, MarsSpec, BoostSpec, MlpSpec>;

/// Family tag: "knn", "random_forest", "random_ferns", "ctree", "mars", "boost", "mlp".
std::string_view family_name(const LearnerSpec& spec) noexcept;

/// Throws InvalidSpec naming the family and the offending field.
void validate(const LearnerSpec& spec);

nlohmann::json to_json(const LearnerSpec& spec);
/// Missing fields take their defaults; unknown families and fields are errors.
LearnerSpec learner_spec_from_json(const nlohmann::json& doc);

/// Stable 64-bit key of the canonical JSON form. Equal specs share a key, so
/// seeds derived from it do not depend on where a spec sits in a list.
std::uint64_t fingerprint(const LearnerSpec& spec);

}  // namespace stackbench
