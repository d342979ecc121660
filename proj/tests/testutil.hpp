#pragma once

// shared generators and independent oracles for the test suites

#include <cmath>
#include <vector>

#include "cfx/decision.hpp"
#include "cfx/rng.hpp"
#include "cfx/schema.hpp"
#include "cfx/scoring.hpp"

namespace testutil {

using namespace cfx;

// two-pass mean with correction term (independent of the production path)
inline double two_pass_mean(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    double mean = sum / static_cast<double>(v.size());
    double resid = 0.0;
    for (double x : v) resid += x - mean;
    return mean + resid / static_cast<double>(v.size());
}

// term-by-term polynomial evaluation over raw values
inline double eval_terms(const std::vector<Monomial>& terms, const std::vector<double>& x) {
    double total = 0.0;
    for (const auto& t : terms) {
        double prod = t.coeff;
        for (int j : t.indices) prod *= x[static_cast<std::size_t>(j)];
        total += prod;
    }
    return total;
}

// random integer-coefficient polynomial over m binary features: singletons,
// pairs, and a few triples
inline std::vector<Monomial> random_poly_terms(Rng& rng, int m) {
    std::vector<Monomial> terms;
    auto coeff = [&]() {
        double c = static_cast<double>(1 + rng.below(3));
        return rng.uniform() < 0.5 ? -c : c;
    };
    for (int j = 0; j < m; ++j)
        if (rng.uniform() < 0.8) terms.push_back({coeff(), {j}});
    for (int t = 0; t < m; ++t) {
        int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        if (a != b) terms.push_back({coeff(), {a, b}});
    }
    for (int t = 0; t < m / 2; ++t) {
        int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        if (a != b && b != c && a != c) terms.push_back({coeff(), {a, b, c}});
    }
    if (terms.empty()) terms.push_back({1.0, {0}});
    return terms;
}

inline Instance random_binary_instance(Rng& rng, const SchemaPtr& schema) {
    std::vector<double> values(static_cast<std::size_t>(schema->size()));
    bool any = false;
    for (auto& v : values) {
        v = rng.uniform() < 0.5 ? 1.0 : 0.0;
        any = any || v == 1.0;
    }
    if (!any) values[0] = 1.0;  // ensure at least one candidate feature
    return Instance(schema, std::move(values));
}

// a threshold placed between the all-counterfactual score and the observed
// score, so that causal sets usually exist
inline DecisionSystem random_poly_system(Rng& rng, const SchemaPtr& schema,
                                         const Instance& instance) {
    auto terms = random_poly_terms(rng, schema->size());
    auto fn = ScoringFunction::polynomial(terms, schema->size());
    double s_full = fn.score(instance);
    std::vector<double> zeros(static_cast<std::size_t>(schema->size()), 0.0);
    double s_base = fn.score(zeros);
    double t = (s_full + s_base) / 2.0;
    if (s_full == s_base) t = s_full;  // degenerate; explanations may not exist
    return DecisionSystem{std::move(fn),
                          DecisionRule{RuleKind::ThresholdAtLeast, t, 1, 0}, 2};
}

}  // namespace testutil
