#include "bmm/plan_io.hpp"

#include <algorithm>

namespace bmm {
namespace {

bool is_optimal_rule(Method m) { return m != Method::kUU && m != Method::kSSM; }

}  // namespace

nlohmann::json plan_to_json(const SamplingPlan& plan, ProbabilityEncoding encoding) {
  nlohmann::json doc;
  doc["method"] = method_name(plan.method);
  doc["partition"] = plan.partition.sizes();
  doc["budgets"] = plan.budgets;
  doc["total"] = plan.total;
  doc["weights"] = plan.weights;
  doc["fallback"] = plan.fallback;
  if (!plan.pilot_product_norms.empty()) doc["pilot_product_norms"] = plan.pilot_product_norms;
  if (encoding == ProbabilityEncoding::kNamedRule) {
    doc["probabilities"] = is_optimal_rule(plan.method) ? "optimal" : "uniform";
  } else {
    doc["probabilities"] = plan.probs.blocks;
  }
  return doc;
}

SamplingPlan plan_from_json(const nlohmann::json& doc, const MatrixView* m, const MatrixView* n) {
  SamplingPlan plan;
  plan.method = parse_method(doc.at("method").get<std::string>());
  plan.partition = BlockPartition(doc.at("partition").get<std::vector<std::size_t>>());
  plan.budgets = doc.at("budgets").get<std::vector<std::size_t>>();
  plan.total = doc.at("total").get<std::size_t>();
  if (doc.contains("weights")) plan.weights = doc["weights"].get<std::vector<double>>();
  if (doc.contains("fallback")) plan.fallback = doc["fallback"].get<bool>();
  if (doc.contains("pilot_product_norms")) {
    plan.pilot_product_norms = doc["pilot_product_norms"].get<std::vector<double>>();
  }
  const auto& probs = doc.at("probabilities");
  if (probs.is_string()) {
    const auto rule = probs.get<std::string>();
    if (rule == "uniform") {
      plan.probs = uniform_probabilities(plan.partition);
    } else if (rule == "optimal") {
      if (m == nullptr || n == nullptr) {
        throw std::invalid_argument("plan uses the optimal rule; M and N are needed to rebuild it");
      }
      plan.probs = optimal_probabilities(*m, *n, plan.partition);
    } else {
      throw std::invalid_argument("unknown probability rule '" + rule + "'");
    }
  } else {
    plan.probs.blocks = probs.get<std::vector<std::vector<double>>>();
    plan.probs.empty.resize(plan.probs.blocks.size());
    for (std::size_t k = 0; k < plan.probs.blocks.size(); ++k) {
      const auto& b = plan.probs.blocks[k];
      plan.probs.empty[k] = std::all_of(b.begin(), b.end(), [](double x) { return x == 0.0; });
    }
  }
  if (plan.budgets.size() != plan.partition.num_blocks() || plan.probs.num_blocks() != plan.partition.num_blocks()) {
    throw DimensionError("plan document block counts disagree");
  }
  std::size_t total = 0;
  for (std::size_t ck : plan.budgets) total += ck;
  if (total != plan.total) throw std::invalid_argument("plan document budgets do not sum to total");
  const double c = static_cast<double>(plan.total);
  double wsum = 0.0;
  for (double w : plan.weights) wsum += w;
  plan.real_budgets.clear();
  for (double w : plan.weights) plan.real_budgets.push_back(wsum > 0.0 ? c * w / wsum : 0.0);
  return plan;
}

}  // namespace bmm
