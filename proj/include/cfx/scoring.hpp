#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfx/schema.hpp"

#include "json.hpp"

namespace cfx {

enum class ScoringKind { Linear, Logistic, Polynomial, Product };

struct Monomial {
    double coeff = 0.0;
    std::vector<int> indices;  // feature index multiset, e.g. {0,0,2} = x0^2*x2
};

// z-scoring parameters applied before the weights; counterfactual values and
// explanations stay in raw feature units
struct Standardization {
    std::vector<double> mean;
    std::vector<double> scale;
};

double sigmoid(double z);

class ScoringFunction {
public:
    static ScoringFunction linear(std::vector<double> weights, double intercept,
                                  std::optional<Standardization> std = {});
    static ScoringFunction logistic(std::vector<double> weights, double intercept,
                                    std::optional<Standardization> std = {});
    static ScoringFunction polynomial(std::vector<Monomial> terms, int feature_count);
    static ScoringFunction product(std::vector<ScoringFunction> components);

    ScoringKind kind() const { return kind_; }
    int feature_count() const { return feature_count_; }

    double score(const Instance& instance) const;
    double score(const std::vector<double>& x) const;

    const std::vector<double>& weights() const { return weights_; }
    double intercept() const { return intercept_; }
    const std::optional<Standardization>& standardization() const { return std_; }
    const std::vector<Monomial>& terms() const { return terms_; }
    const std::vector<ScoringFunction>& components() const { return components_; }

    nlohmann::json to_json() const;
    static ScoringFunction from_json(const nlohmann::json& j);

private:
    ScoringFunction() = default;

    ScoringKind kind_ = ScoringKind::Linear;
    int feature_count_ = 0;
    std::vector<double> weights_;
    double intercept_ = 0.0;
    std::optional<Standardization> std_;
    std::vector<Monomial> terms_;
    std::vector<ScoringFunction> components_;
};

// Flattened linear-family view: score = combine(act(z_1), ..., act(z_C)) with
// z_c = w_c.x + b_c. Standardization is folded into the weights. Available for
// Linear, Logistic, and Products of those; lets kernels re-score an instance
// in O(C) after a single-feature change.
struct LinearComponent {
    std::vector<double> weights;
    double intercept = 0.0;
    bool sigmoid = false;
};

std::optional<std::vector<LinearComponent>> linear_components(const ScoringFunction& fn);

double combine_components(const std::vector<LinearComponent>& comps,
                          const std::vector<double>& z);

}  // namespace cfx
