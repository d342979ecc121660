#pragma once

#include <string>
#include <vector>

#include "cfx/dataset.hpp"
#include "cfx/schema.hpp"

#include "json.hpp"

namespace cfx {

enum class ImputeRule { Zero, Fixed, Mean, Mode, ModelBased };

struct FeatureImputer {
    ImputeRule rule = ImputeRule::Zero;
    double value = 0.0;             // Fixed / frozen Mean / frozen Mode
    std::vector<double> weights;    // ModelBased: length m, own slot zero
    double intercept = 0.0;         // ModelBased
    bool round_to_binary = false;   // ModelBased on a Binary feature
};

// Per-feature counterfactual values realizing evidence removal. Values are
// frozen at build time; ModelBased rules predict from the instance's observed
// values of the other features, never from imputed ones.
class CounterfactualPolicy {
public:
    CounterfactualPolicy(SchemaPtr schema, std::vector<FeatureImputer> rules);

    // Zero rule on every feature; rejects Categorical features
    static CounterfactualPolicy zero(SchemaPtr schema);

    // same fixed value for every feature (tests, simple CLI cases)
    static CounterfactualPolicy fixed(SchemaPtr schema, std::vector<double> values);

    const FeatureSchema& schema() const { return *schema_; }
    const SchemaPtr& schema_ptr() const { return schema_; }
    const FeatureImputer& rule(int j) const { return rules_[static_cast<std::size_t>(j)]; }

    double value_for(const Instance& instance, int feature) const;

    // all m counterfactual values, computed from the instance's observed
    // values (simultaneous-substitution semantics)
    std::vector<double> values_for(const Instance& instance) const;

    nlohmann::json to_json() const;
    static CounterfactualPolicy from_json(const nlohmann::json& j, SchemaPtr schema);

private:
    SchemaPtr schema_;
    std::vector<FeatureImputer> rules_;
};

// Numeric -> Mean, Binary/Categorical -> Mode, frozen from the given stats.
CounterfactualPolicy build_stats_policy(const ColumnStats& stats, SchemaPtr schema);

// Per-feature ridge regressions on the masked rows (the population receiving
// the default decision, in the credit protocol); feature j is predicted from
// all other features. Binary targets are clamped to [0,1] and rounded, ties
// to 0.
CounterfactualPolicy fit_model_based(const Dataset& reference,
                                     const std::vector<bool>& mask, double l2);

}  // namespace cfx
