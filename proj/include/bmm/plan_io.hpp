#pragma once

#include <json.hpp>

#include "bmm/plan.hpp"

namespace bmm {

enum class ProbabilityEncoding {
  /// Write every probability array.
  kEmbedded,
  /// Write the rule name ("optimal" or "uniform") when the plan's probabilities follow it.
  kNamedRule,
};

/// {"method", "partition", "budgets", "total", "probabilities", ...}
nlohmann::json plan_to_json(const SamplingPlan& plan, ProbabilityEncoding encoding = ProbabilityEncoding::kEmbedded);

/// Rebuilds a plan. A named "optimal" rule needs M and N to regenerate the probabilities.
SamplingPlan plan_from_json(const nlohmann::json& doc, const MatrixView* m = nullptr, const MatrixView* n = nullptr);

}  // namespace bmm
