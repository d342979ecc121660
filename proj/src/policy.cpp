#include "cfx/policy.hpp"

#include <cmath>

#include "linalg.hpp"

namespace cfx {
namespace {

const char* rule_string(ImputeRule r) {
    switch (r) {
        case ImputeRule::Zero: return "zero";
        case ImputeRule::Fixed: return "fixed";
        case ImputeRule::Mean: return "mean";
        case ImputeRule::Mode: return "mode";
        case ImputeRule::ModelBased: return "model_based";
    }
    return "?";
}

ImputeRule rule_from_string(const std::string& s) {
    if (s == "zero") return ImputeRule::Zero;
    if (s == "fixed") return ImputeRule::Fixed;
    if (s == "mean") return ImputeRule::Mean;
    if (s == "mode") return ImputeRule::Mode;
    if (s == "model_based") return ImputeRule::ModelBased;
    throw Error("unknown imputation rule: " + s);
}

}  // namespace

CounterfactualPolicy::CounterfactualPolicy(SchemaPtr schema,
                                           std::vector<FeatureImputer> rules)
    : schema_(std::move(schema)), rules_(std::move(rules)) {
    if (!schema_) throw Error("policy requires a schema");
    if (static_cast<int>(rules_.size()) != schema_->size())
        throw Error("policy must cover every schema feature exactly once");
    for (int j = 0; j < schema_->size(); ++j) {
        const auto& r = rules_[static_cast<std::size_t>(j)];
        FeatureKind kind = schema_->at(j).kind;
        switch (r.rule) {
            case ImputeRule::Zero:
                if (kind == FeatureKind::Categorical)
                    throw Error("zero rule is invalid for categorical feature " +
                                schema_->at(j).name);
                break;
            case ImputeRule::Mean:
                if (kind != FeatureKind::Numeric)
                    throw Error("mean rule is only valid for numeric feature, got " +
                                schema_->at(j).name);
                break;
            case ImputeRule::Mode:
                if (kind == FeatureKind::Numeric)
                    throw Error("mode rule is invalid for numeric feature " +
                                schema_->at(j).name);
                break;
            case ImputeRule::ModelBased:
                if (static_cast<int>(r.weights.size()) != schema_->size())
                    throw Error("model-based rule weight length mismatch");
                if (r.weights[static_cast<std::size_t>(j)] != 0.0)
                    throw Error("model-based rule must not predict from its own feature");
                break;
            case ImputeRule::Fixed:
                if (!schema_->value_ok(j, r.value))
                    throw Error("fixed counterfactual value does not conform to " +
                                schema_->at(j).name);
                break;
        }
    }
}

CounterfactualPolicy CounterfactualPolicy::zero(SchemaPtr schema) {
    std::vector<FeatureImputer> rules(static_cast<std::size_t>(schema->size()));
    return CounterfactualPolicy(std::move(schema), std::move(rules));
}

CounterfactualPolicy CounterfactualPolicy::fixed(SchemaPtr schema,
                                                 std::vector<double> values) {
    if (static_cast<int>(values.size()) != schema->size())
        throw Error("fixed policy needs one value per feature");
    std::vector<FeatureImputer> rules(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        rules[j].rule = ImputeRule::Fixed;
        rules[j].value = values[j];
    }
    return CounterfactualPolicy(std::move(schema), std::move(rules));
}

double CounterfactualPolicy::value_for(const Instance& instance, int feature) const {
    if (feature < 0 || feature >= schema_->size())
        throw Error("feature index out of bounds");
    const auto& r = rules_[static_cast<std::size_t>(feature)];
    switch (r.rule) {
        case ImputeRule::Zero:
            return 0.0;
        case ImputeRule::Fixed:
        case ImputeRule::Mean:
        case ImputeRule::Mode:
            return r.value;
        case ImputeRule::ModelBased: {
            double pred = r.intercept;
            const auto& x = instance.values();
            for (std::size_t j = 0; j < r.weights.size(); ++j)
                pred += r.weights[j] * x[j];
            if (r.round_to_binary) {
                pred = std::min(1.0, std::max(0.0, pred));
                pred = pred > 0.5 ? 1.0 : 0.0;
            }
            return pred;
        }
    }
    return 0.0;
}

std::vector<double> CounterfactualPolicy::values_for(const Instance& instance) const {
    std::vector<double> out(static_cast<std::size_t>(schema_->size()));
    for (int j = 0; j < schema_->size(); ++j)
        out[static_cast<std::size_t>(j)] = value_for(instance, j);
    return out;
}

nlohmann::json CounterfactualPolicy::to_json() const {
    nlohmann::json rules = nlohmann::json::array();
    for (int j = 0; j < schema_->size(); ++j) {
        const auto& r = rules_[static_cast<std::size_t>(j)];
        nlohmann::json e;
        e["feature"] = schema_->at(j).name;
        e["rule"] = rule_string(r.rule);
        switch (r.rule) {
            case ImputeRule::Zero:
                break;
            case ImputeRule::Fixed:
            case ImputeRule::Mean:
            case ImputeRule::Mode:
                e["value"] = r.value;
                break;
            case ImputeRule::ModelBased:
                e["weights"] = r.weights;
                e["intercept"] = r.intercept;
                e["round_to_binary"] = r.round_to_binary;
                break;
        }
        rules.push_back(std::move(e));
    }
    return {{"version", 1}, {"rules", rules}};
}

CounterfactualPolicy CounterfactualPolicy::from_json(const nlohmann::json& j,
                                                     SchemaPtr schema) {
    const auto& rules_json = j.at("rules");
    if (static_cast<int>(rules_json.size()) != schema->size())
        throw Error("policy file does not match schema size");
    std::vector<FeatureImputer> rules(rules_json.size());
    for (std::size_t i = 0; i < rules_json.size(); ++i) {
        const auto& e = rules_json[i];
        const std::string name = e.at("feature").get<std::string>();
        if (schema->index_of(name) != static_cast<int>(i))
            throw Error("policy file feature order does not match schema: " + name);
        auto& r = rules[i];
        r.rule = rule_from_string(e.at("rule").get<std::string>());
        switch (r.rule) {
            case ImputeRule::Zero:
                break;
            case ImputeRule::Fixed:
            case ImputeRule::Mean:
            case ImputeRule::Mode:
                r.value = e.at("value").get<double>();
                break;
            case ImputeRule::ModelBased:
                r.weights = e.at("weights").get<std::vector<double>>();
                r.intercept = e.at("intercept").get<double>();
                r.round_to_binary = e.at("round_to_binary").get<bool>();
                break;
        }
    }
    return CounterfactualPolicy(std::move(schema), std::move(rules));
}

CounterfactualPolicy build_stats_policy(const ColumnStats& stats, SchemaPtr schema) {
    if (!stats.schema || !(*stats.schema == *schema))
        throw Error("stats were computed over a different schema");
    std::vector<FeatureImputer> rules(static_cast<std::size_t>(schema->size()));
    for (int j = 0; j < schema->size(); ++j) {
        auto& r = rules[static_cast<std::size_t>(j)];
        const auto& e = stats.cols[static_cast<std::size_t>(j)];
        if (schema->at(j).kind == FeatureKind::Numeric) {
            r.rule = ImputeRule::Mean;
            r.value = e.mean;
        } else {
            r.rule = ImputeRule::Mode;
            r.value = e.mode;
        }
    }
    return CounterfactualPolicy(std::move(schema), std::move(rules));
}

CounterfactualPolicy fit_model_based(const Dataset& reference,
                                     const std::vector<bool>& mask, double l2) {
    if (mask.size() != reference.size())
        throw Error("mask length does not match row count");
    std::size_t selected = 0;
    for (bool b : mask) selected += b ? 1 : 0;
    if (selected == 0) throw Error("model-based imputation needs a non-empty mask");

    const auto& schema = *reference.schema;
    const auto m = static_cast<std::size_t>(schema.size());
    for (int j = 0; j < schema.size(); ++j)
        if (schema.at(j).kind == FeatureKind::Categorical)
            throw Error("model-based imputation requires numeric or binary features; "
                        "one-hot encode " + schema.at(j).name + " upstream");

    std::vector<FeatureImputer> rules(m);
    const std::size_t cols = m;  // other features plus intercept column
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> design(selected * cols);
        std::vector<double> target(selected);
        std::size_t r = 0;
        for (std::size_t row = 0; row < reference.size(); ++row) {
            if (!mask[row]) continue;
            const auto& x = reference.rows[row].values();
            std::size_t c = 0;
            for (std::size_t k = 0; k < m; ++k) {
                if (k == j) continue;
                design[r * cols + c++] = x[k];
            }
            design[r * cols + c] = 1.0;  // intercept
            target[r] = x[j];
            ++r;
        }
        auto w = linalg::ridge_solve(design, selected, cols, target, l2);
        auto& rule = rules[j];
        rule.rule = ImputeRule::ModelBased;
        rule.weights.assign(m, 0.0);
        std::size_t c = 0;
        for (std::size_t k = 0; k < m; ++k) {
            if (k == j) continue;
            rule.weights[k] = w[c++];
        }
        rule.intercept = w[c];
        rule.round_to_binary = schema.at(static_cast<int>(j)).kind == FeatureKind::Binary;
    }
    return CounterfactualPolicy(reference.schema, std::move(rules));
}

}  // namespace cfx
