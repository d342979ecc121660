#include "cfx/decision.hpp"

namespace cfx {

Instance apply_counterfactual(const Instance& instance, const FeatureSet& set,
                              const CounterfactualPolicy& policy) {
    if (!(instance.schema() == policy.schema()))
        throw Error("policy schema does not match instance schema");
    auto values = instance.values();
    for (int j : set) {
        if (j >= instance.size()) throw Error("feature index out of bounds");
        values[static_cast<std::size_t>(j)] = policy.value_for(instance, j);
    }
    return Instance(instance.schema_ptr(), std::move(values));
}

Instance substitute(const Instance& instance, const FeatureSet& set,
                    const std::vector<double>& counterfactual_values) {
    auto values = instance.values();
    for (int j : set) {
        if (j >= instance.size()) throw Error("feature index out of bounds");
        values[static_cast<std::size_t>(j)] = counterfactual_values[static_cast<std::size_t>(j)];
    }
    return Instance(instance.schema_ptr(), std::move(values));
}

bool is_causal(const DecisionSystem& system, const Instance& instance,
               const FeatureSet& set, const CounterfactualPolicy& policy) {
    return system.decide(apply_counterfactual(instance, set, policy)) !=
           system.decide(instance);
}

bool is_explanation(const DecisionSystem& system, const Instance& instance,
                    const FeatureSet& set, const CounterfactualPolicy& policy,
                    int power_set_bound) {
    if (set.size() > power_set_bound)
        throw InfeasibleError("irreducibility check infeasible: set of " +
                              std::to_string(set.size()) + " exceeds the power-set bound of " +
                              std::to_string(power_set_bound) +
                              "; use the greedy reducer");
    if (set.empty()) return false;

    const int c = system.decide(instance);
    auto counterfactuals = policy.values_for(instance);
    if (system.decide(substitute(instance, set, counterfactuals)) == c) return false;

    const auto& idx = set.indices();
    const unsigned n = static_cast<unsigned>(idx.size());
    // proper nonempty subsets; the empty subset is trivially non-causal
    for (unsigned long long bits = 1; bits + 1 < (1ull << n); ++bits) {
        std::vector<int> sub;
        for (unsigned i = 0; i < n; ++i)
            if (bits & (1ull << i)) sub.push_back(idx[i]);
        if (system.decide(substitute(instance, FeatureSet(std::move(sub)),
                                     counterfactuals)) != c)
            return false;
    }
    return true;
}

}  // namespace cfx
