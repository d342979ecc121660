#include "cfx/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace cfx {
namespace {

// visit all size-s index combinations of 0..n-1 in lexicographic order;
// stop early when fn returns true
bool for_each_combination(int n, int s, const std::function<bool(const std::vector<int>&)>& fn) {
    std::vector<int> comb(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) comb[static_cast<std::size_t>(i)] = i;
    while (true) {
        if (fn(comb)) return true;
        int i = s - 1;
        while (i >= 0 && comb[static_cast<std::size_t>(i)] == n - s + i) --i;
        if (i < 0) return false;
        ++comb[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < s; ++k)
            comb[static_cast<std::size_t>(k)] = comb[static_cast<std::size_t>(k - 1)] + 1;
    }
}

struct Entry {
    int band = 0;        // cost-0 sets precede positive-cost sets under cost ordering
    double primary = 0;  // score, or -progress/cost
    FeatureSet set;
    double score = 0.0;
    double cost = 0.0;
};

struct EntryLess {
    bool operator()(const Entry& a, const Entry& b) const {
        if (a.band != b.band) return a.band < b.band;
        if (a.primary != b.primary) return a.primary < b.primary;
        if (a.set.size() != b.set.size()) return a.set.size() < b.set.size();
        return a.set < b.set;
    }
};

// fresh, authoritative score of I'(E); the frontier keys may use the folded
// linear fast path, but causality checks and reported values go through here
double fresh_score(const DecisionSystem& system, const Instance& instance,
                   const FeatureSet& set, const std::vector<double>& cf) {
    return system.scorer.score(substitute(instance, set, cf).values());
}

Explanation make_explanation(const DecisionSystem& system, const Instance& instance,
                             const FeatureSet& set, const std::vector<double>& cf,
                             const CostFunction& costs, int decision_before,
                             double score_before, std::string reduction) {
    Explanation e;
    e.set = set;
    e.decision_before = decision_before;
    e.score_before = score_before;
    e.score_after = fresh_score(system, instance, set, cf);
    e.decision_after = system.rule.decide(e.score_after);
    e.cost = costs.of(set);
    for (int j : set) e.substituted.emplace_back(instance[j], cf[j]);
    e.reduction = std::move(reduction);
    return e;
}

}  // namespace

std::vector<Explanation> ebe_search(const DecisionSystem& system, const Instance& instance,
                                    const CounterfactualPolicy& policy,
                                    const SearchConfig& config) {
    if (config.max_iteration < 1) throw Error("max_iteration must be at least 1");
    if (config.power_set_bound < 1) throw Error("power_set_bound must be at least 1");
    if (!config.costs.per_feature.empty() &&
        static_cast<int>(config.costs.per_feature.size()) != instance.size())
        throw Error("cost function length does not match schema");

    const int c0 = system.decide(instance);
    const double p0 = system.score(instance);
    const auto cf = policy.values_for(instance);
    const double sign = c0 == system.rule.positive_class ? 1.0 : -1.0;

    std::vector<int> candidates;
    for (int j = 0; j < instance.size(); ++j) {
        if (instance[j] == cf[static_cast<std::size_t>(j)]) continue;
        if (config.allow_feature && !config.allow_feature(j)) continue;
        candidates.push_back(j);
    }

    // folded linear view for cheap frontier keys
    auto comps = linear_components(system.scorer);
    std::vector<double> z_full;
    std::vector<std::vector<double>> delta;  // [component][feature]
    if (comps) {
        z_full.resize(comps->size());
        delta.assign(comps->size(), std::vector<double>(static_cast<std::size_t>(instance.size()), 0.0));
        for (std::size_t c = 0; c < comps->size(); ++c) {
            double z = (*comps)[c].intercept;
            for (int j = 0; j < instance.size(); ++j)
                z += (*comps)[c].weights[static_cast<std::size_t>(j)] * instance[j];
            z_full[c] = z;
            for (int j : candidates)
                delta[c][static_cast<std::size_t>(j)] =
                    (*comps)[c].weights[static_cast<std::size_t>(j)] *
                    (cf[static_cast<std::size_t>(j)] - instance[j]);
        }
    }
    auto heuristic_score = [&](const FeatureSet& set) {
        if (!comps) return fresh_score(system, instance, set, cf);
        double prod = 1.0;
        for (std::size_t c = 0; c < comps->size(); ++c) {
            double z = z_full[c];
            for (int j : set) z += delta[c][static_cast<std::size_t>(j)];
            prod *= (*comps)[c].sigmoid ? sigmoid(z) : z;
        }
        return prod;
    };

    auto make_entry = [&](FeatureSet set, double score) {
        Entry e;
        e.score = score;
        e.cost = config.costs.of(set);
        e.set = std::move(set);
        if (config.ordering == Ordering::ScoreAscending) {
            e.primary = score;
        } else if (e.cost == 0.0) {
            e.band = 0;
            e.primary = score;
        } else {
            e.band = 1;
            e.primary = -(sign * (p0 - score)) / e.cost;
        }
        if (std::isnan(e.primary)) throw Error("scorer produced a non-finite score");
        return e;
    };

    std::set<Entry, EntryLess> frontier;
    std::set<std::vector<int>> visited;
    frontier.insert(make_entry(FeatureSet{}, p0));
    visited.insert({});

    std::vector<Explanation> found;
    auto superset_of_found = [&](const FeatureSet& set) {
        return std::any_of(found.begin(), found.end(),
                           [&](const Explanation& e) { return e.set.subset_of(set); });
    };

    for (int iter = 0; iter < config.max_iteration && !frontier.empty(); ++iter) {
        Entry current = *frontier.begin();
        frontier.erase(frontier.begin());

        if (superset_of_found(current.set)) continue;

        if (system.rule.decide(fresh_score(system, instance, current.set, cf)) == c0) {
            // not causal: grow by one feature still at its observed value
            for (int j : candidates) {
                if (current.set.contains(j)) continue;
                FeatureSet next = current.set.with(j);
                if (visited.count(next.indices())) continue;
                if (superset_of_found(next)) continue;
                visited.insert(next.indices());
                double key_score = heuristic_score(next);
                frontier.insert(make_entry(std::move(next), key_score));
            }
        } else {
            FeatureSet reduced = reduce_to_irreducible(system, instance, current.set,
                                                       policy, config.power_set_bound);
            bool greedy = current.set.size() > config.power_set_bound;
            bool duplicate_or_super =
                std::any_of(found.begin(), found.end(), [&](const Explanation& e) {
                    return e.set == reduced || e.set.subset_of(reduced);
                });
            if (!duplicate_or_super) {
                // greedy reduction can produce a subset of an earlier result
                std::erase_if(found, [&](const Explanation& e) {
                    return reduced.proper_subset_of(e.set);
                });
                found.push_back(make_explanation(system, instance, reduced, cf,
                                                 config.costs, c0, p0,
                                                 greedy ? "greedy" : "full"));
            }
        }
    }
    return found;
}

FeatureSet reduce_to_irreducible(const DecisionSystem& system, const Instance& instance,
                                 const FeatureSet& causal_set,
                                 const CounterfactualPolicy& policy, int bound) {
    const int c0 = system.decide(instance);
    const auto cf = policy.values_for(instance);
    auto causal = [&](const FeatureSet& set) {
        return system.rule.decide(fresh_score(system, instance, set, cf)) != c0;
    };
    if (!causal(causal_set))
        throw Error("reduce_to_irreducible requires a causal input set");

    const auto& idx = causal_set.indices();
    const int n = causal_set.size();
    if (n <= bound) {
        FeatureSet best;
        for (int s = 1; s < n; ++s) {
            bool stop = for_each_combination(n, s, [&](const std::vector<int>& comb) {
                std::vector<int> sub;
                sub.reserve(comb.size());
                for (int p : comb) sub.push_back(idx[static_cast<std::size_t>(p)]);
                FeatureSet candidate(std::move(sub));
                if (causal(candidate)) {
                    best = std::move(candidate);
                    return true;
                }
                return false;
            });
            if (stop) return best;
        }
        return causal_set;
    }

    // greedy pass: drop each feature in ascending index order when the
    // remainder stays causal
    std::vector<int> current = idx;
    for (int j : idx) {
        if (current.size() == 1) break;
        std::vector<int> tentative;
        tentative.reserve(current.size() - 1);
        for (int k : current)
            if (k != j) tentative.push_back(k);
        if (causal(FeatureSet(tentative))) current = std::move(tentative);
    }
    return FeatureSet(std::move(current));
}

std::vector<Explanation> oracle_all_explanations(const DecisionSystem& system,
                                                 const Instance& instance,
                                                 const CounterfactualPolicy& policy,
                                                 int max_size) {
    const int c0 = system.decide(instance);
    const double p0 = system.score(instance);
    const auto cf = policy.values_for(instance);

    std::vector<int> candidates;
    for (int j = 0; j < instance.size(); ++j)
        if (instance[j] != cf[static_cast<std::size_t>(j)]) candidates.push_back(j);
    const int n = static_cast<int>(candidates.size());
    if (n > 20)
        throw InfeasibleError("oracle infeasible: " + std::to_string(n) +
                              " candidate features exceed the bound of 20");
    const int limit = max_size <= 0 ? n : std::min(max_size, n);

    std::vector<Explanation> out;
    CostFunction unit_costs;
    for (int s = 1; s <= limit; ++s) {
        for_each_combination(n, s, [&](const std::vector<int>& comb) {
            std::vector<int> sub;
            sub.reserve(comb.size());
            for (int p : comb) sub.push_back(candidates[static_cast<std::size_t>(p)]);
            FeatureSet set(std::move(sub));
            bool dominated = std::any_of(out.begin(), out.end(), [&](const Explanation& e) {
                return e.set.proper_subset_of(set);
            });
            if (!dominated &&
                system.rule.decide(fresh_score(system, instance, set, cf)) != c0)
                out.push_back(make_explanation(system, instance, set, cf, unit_costs,
                                               c0, p0, "full"));
            return false;
        });
    }
    return out;
}

nlohmann::json Explanation::to_json(const FeatureSchema& schema) const {
    nlohmann::json features = nlohmann::json::array();
    nlohmann::json observed = nlohmann::json::object();
    nlohmann::json counterfactual = nlohmann::json::object();
    std::size_t i = 0;
    for (int j : set) {
        const auto& name = schema.at(j).name;
        features.push_back(name);
        observed[name] = substituted[i].first;
        counterfactual[name] = substituted[i].second;
        ++i;
    }
    return {{"features", features},
            {"observed", observed},
            {"counterfactual", counterfactual},
            {"score_before", score_before},
            {"score_after", score_after},
            {"decision_before", decision_before},
            {"decision_after", decision_after},
            {"cost", cost},
            {"reduction", reduction}};
}

}  // namespace cfx
