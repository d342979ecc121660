#pragma once

#include <cstdint>
#include <vector>

#include "cfx/decision.hpp"
#include "cfx/policy.hpp"
#include "cfx/schema.hpp"
#include "cfx/scoring.hpp"

#include "json.hpp"

namespace cfx {

// What a permutation walk measures: a raw score, or the 0/1 indicator that
// the system's decision equals the decision made for the original instance.
struct AttributionTarget {
    enum class Kind { Score, DecisionIndicator };

    Kind kind = Kind::Score;
    const ScoringFunction* fn = nullptr;
    const DecisionSystem* system = nullptr;

    static AttributionTarget score(const ScoringFunction& f) {
        return {Kind::Score, &f, nullptr};
    }
    static AttributionTarget decision_indicator(const DecisionSystem& s) {
        return {Kind::DecisionIndicator, nullptr, &s};
    }
};

struct ShapleyMethod {
    bool exact = true;
    std::uint64_t sample_count = 0;
    std::uint64_t seed = 0;
    bool escalated = false;  // sampled call answered by exact enumeration
};

struct ShapleyReport {
    SchemaPtr schema;
    std::vector<double> values;  // per schema feature; zero outside `active`
    FeatureSet active;
    ShapleyMethod method;
    AttributionTarget::Kind target_kind = AttributionTarget::Kind::Score;
    double baseline_value = 0.0;  // target at I'(active)
    double full_value = 0.0;      // target at I

    nlohmann::json to_json() const;
};

// permutations are processed in fixed blocks of this size; block partial sums
// are combined in block order, so results do not depend on the thread count
inline constexpr std::uint64_t kShapleyBlock = 256;

inline constexpr int kExactShapleyBound = 10;

// Mean marginal impact over all |active|! joining orders. Features outside
// `active` stay at their observed values and receive attribution 0.
ShapleyReport shapley_exact(const AttributionTarget& target, const Instance& instance,
                            const CounterfactualPolicy& policy, const FeatureSet& active);

// Mean marginal impact over sample_count seeded random joining orders.
// Escalates to exact enumeration when |active| <= 7 and sample_count covers
// all joining orders; the report flags the switch.
ShapleyReport shapley_sampled(const AttributionTarget& target, const Instance& instance,
                              const CounterfactualPolicy& policy, const FeatureSet& active,
                              std::uint64_t sample_count, std::uint64_t seed);

// Per-joining-order impact rows in lexicographic order of the active feature
// indices; row r holds the impact of each schema feature under order r.
// Intended for small |active| (bound 8).
std::vector<std::vector<double>> shapley_impact_rows(const AttributionTarget& target,
                                                     const Instance& instance,
                                                     const CounterfactualPolicy& policy,
                                                     const FeatureSet& active);

// Size of the intersection of the top-k features across reports; ranks by
// attribution descending with ties broken by ascending feature index.
int topk_matches(const std::vector<ShapleyReport>& reports, int k);

// Straightforward single-threaded implementations kept as the ground truth
// for the blocked OpenMP kernels above; exercised by tests and bench_kernels.
namespace reference {

ShapleyReport shapley_exact(const AttributionTarget& target, const Instance& instance,
                            const CounterfactualPolicy& policy, const FeatureSet& active);

ShapleyReport shapley_sampled(const AttributionTarget& target, const Instance& instance,
                              const CounterfactualPolicy& policy, const FeatureSet& active,
                              std::uint64_t sample_count, std::uint64_t seed);

}  // namespace reference

}  // namespace cfx
