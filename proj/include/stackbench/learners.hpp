#pragma once

#include <cstdint>

#include "stackbench/dataset.hpp"
#include "stackbench/learner_spec.hpp"
#include "stackbench/model.hpp"

namespace stackbench {

/// Trains one base learner. Deterministic for fixed (spec, data, seed);
/// fit_seconds on the result is the wall-clock time of this call.
/// Errors: InvalidSpec for out-of-range hyperparameters, FitError (tagged with
/// the family) for empty data or single-class data where the family needs both.
FittedModel fit(const LearnerSpec& spec, const Dataset& data, std::uint64_t seed);

/// Column-checked prediction; same as model.predict(features).
Probabilities predict(const FittedModel& model, const Matrix& features);

}  // namespace stackbench
