#pragma once

#include "cfx/policy.hpp"
#include "cfx/schema.hpp"
#include "cfx/scoring.hpp"

namespace cfx {

enum class RuleKind { ThresholdAtLeast, ThresholdAbove };

// Binary threshold rule: positive_class when the comparison holds, otherwise
// default_class. Comparisons are exact floating point, no epsilon.
struct DecisionRule {
    RuleKind kind = RuleKind::ThresholdAtLeast;
    double threshold = 0.0;
    int positive_class = 1;
    int default_class = 0;

    int decide(double score) const {
        bool hit = kind == RuleKind::ThresholdAtLeast ? score >= threshold
                                                      : score > threshold;
        return hit ? positive_class : default_class;
    }
};

struct DecisionSystem {
    ScoringFunction scorer;
    DecisionRule rule;
    int k = 2;

    double score(const Instance& instance) const { return scorer.score(instance); }
    int decide(const Instance& instance) const { return rule.decide(score(instance)); }
};

constexpr int kPowerSetBound = 12;

// I'(E): the instance with every feature in `set` replaced by its
// counterfactual value. Substitution is simultaneous; model-based values are
// computed from the original observed values.
Instance apply_counterfactual(const Instance& instance, const FeatureSet& set,
                              const CounterfactualPolicy& policy);

// substitution from a precomputed counterfactual value vector (kernel path)
Instance substitute(const Instance& instance, const FeatureSet& set,
                    const std::vector<double>& counterfactual_values);

bool is_causal(const DecisionSystem& system, const Instance& instance,
               const FeatureSet& set, const CounterfactualPolicy& policy);

// causal and no proper subset causal; scans all 2^|set|-1 proper subsets.
// Throws InfeasibleError above the power-set bound instead of passing
// silently.
bool is_explanation(const DecisionSystem& system, const Instance& instance,
                    const FeatureSet& set, const CounterfactualPolicy& policy,
                    int power_set_bound = kPowerSetBound);

}  // namespace cfx
