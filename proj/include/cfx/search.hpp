#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cfx/decision.hpp"
#include "cfx/policy.hpp"
#include "cfx/schema.hpp"

#include "json.hpp"

namespace cfx {

// Additive per-feature costs; +infinity marks features that should never be
// part of a preferred explanation. Empty means unit cost per feature.
struct CostFunction {
    std::vector<double> per_feature;

    double of(const FeatureSet& set) const {
        if (per_feature.empty()) return static_cast<double>(set.size());
        double total = 0.0;
        for (int j : set) total += per_feature[static_cast<std::size_t>(j)];
        return total;
    }
};

enum class Ordering {
    ScoreAscending,           // pop the set with the lowest substituted score
    ScorePerCostDescending,   // pop the set with the largest score change per unit cost
};

struct SearchConfig {
    int max_iteration = 30;  // one iteration = one pop (one combination examined)
    Ordering ordering = Ordering::ScoreAscending;
    CostFunction costs;
    int power_set_bound = kPowerSetBound;
    // returns false for features that must not be expanded (e.g. immutable);
    // null allows every feature
    std::function<bool(int)> allow_feature;
};

struct Explanation {
    FeatureSet set;
    int decision_before = 0;
    int decision_after = 0;
    double score_before = 0.0;
    double score_after = 0.0;
    double cost = 0.0;
    // (observed, counterfactual) for each set member, in index order
    std::vector<std::pair<double, double>> substituted;
    std::string reduction;  // "full" | "greedy"

    nlohmann::json to_json(const FeatureSchema& schema) const;
};

// Best-first heuristic search for causal, irreducible feature sets. Returns
// explanations in discovery order; the list is an antichain.
std::vector<Explanation> ebe_search(const DecisionSystem& system, const Instance& instance,
                                    const CounterfactualPolicy& policy,
                                    const SearchConfig& config = {});

// Smallest causal subset when |causal_set| fits the power-set bound (scan by
// size, lexicographic within size); otherwise a 1-minimal greedy pass in
// ascending index order. Precondition: causal_set is causal.
FeatureSet reduce_to_irreducible(const DecisionSystem& system, const Instance& instance,
                                 const FeatureSet& causal_set,
                                 const CounterfactualPolicy& policy, int bound);

// Exhaustive ground truth: every irreducible causal subset of the candidate
// features (observed value != counterfactual value) up to max_size, sorted by
// (size, lexicographic). Candidate count is bounded at 20.
std::vector<Explanation> oracle_all_explanations(const DecisionSystem& system,
                                                 const Instance& instance,
                                                 const CounterfactualPolicy& policy,
                                                 int max_size);

}  // namespace cfx
