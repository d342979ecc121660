#include "cfx/shapley.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cfx/rng.hpp"

namespace cfx {
namespace {

const std::uint64_t kFactorial[] = {1,
                                    1,
                                    2,
                                    6,
                                    24,
                                    120,
                                    720,
                                    5040,
                                    40320,
                                    362880,
                                    3628800,
                                    39916800,
                                    479001600};

// lexicographic unranking (factorial number system) of a permutation of
// active positions 0..n-1
void unrank_permutation(std::uint64_t index, int n, std::vector<int>& out) {
    std::vector<int> avail(static_cast<std::size_t>(n));
    std::iota(avail.begin(), avail.end(), 0);
    out.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::uint64_t f = kFactorial[n - 1 - i];
        auto k = static_cast<std::size_t>(index / f);
        index %= f;
        out[static_cast<std::size_t>(i)] = avail[k];
        avail.erase(avail.begin() + static_cast<long>(k));
    }
}

double eval_target(const AttributionTarget& target, const std::vector<double>& x,
                   int original_decision) {
    if (target.kind == AttributionTarget::Kind::Score) return target.fn->score(x);
    double s = target.system->scorer.score(x);
    return target.system->rule.decide(s) == original_decision ? 1.0 : 0.0;
}

const ScoringFunction& target_scorer(const AttributionTarget& target) {
    return target.kind == AttributionTarget::Kind::Score ? *target.fn
                                                         : target.system->scorer;
}

// shared, immutable per-call setup for the permutation walkers
struct WalkSetup {
    const AttributionTarget* target = nullptr;
    int original_decision = 0;
    std::vector<int> active;           // feature ids, ascending
    std::vector<double> baseline_x;    // I'(active)
    std::vector<double> observed;      // observed values of active features
    // linear fast path
    bool linear = false;
    std::vector<LinearComponent> comps;
    std::vector<double> z0;                  // component pre-activations at baseline
    std::vector<std::vector<double>> delta;  // [component][active pos] flip delta
};

WalkSetup make_setup(const AttributionTarget& target, const Instance& instance,
                     const CounterfactualPolicy& policy, const FeatureSet& active) {
    WalkSetup s;
    s.target = &target;
    s.active.assign(active.begin(), active.end());
    const int m = instance.size();
    for (int j : s.active)
        if (j < 0 || j >= m) throw Error("active feature index out of bounds");

    if (target.kind == AttributionTarget::Kind::DecisionIndicator)
        s.original_decision = target.system->decide(instance);

    auto counterfactuals = policy.values_for(instance);
    s.baseline_x = instance.values();
    s.observed.reserve(s.active.size());
    for (int j : s.active) {
        s.observed.push_back(instance[j]);
        s.baseline_x[static_cast<std::size_t>(j)] =
            counterfactuals[static_cast<std::size_t>(j)];
    }

    if (auto comps = linear_components(target_scorer(target))) {
        s.linear = true;
        s.comps = std::move(*comps);
        s.z0.resize(s.comps.size());
        for (std::size_t c = 0; c < s.comps.size(); ++c) {
            double z = s.comps[c].intercept;
            for (std::size_t j = 0; j < s.baseline_x.size(); ++j)
                z += s.comps[c].weights[j] * s.baseline_x[j];
            s.z0[c] = z;
        }
        s.delta.assign(s.comps.size(), std::vector<double>(s.active.size()));
        for (std::size_t c = 0; c < s.comps.size(); ++c)
            for (std::size_t p = 0; p < s.active.size(); ++p) {
                int j = s.active[p];
                s.delta[c][p] =
                    s.comps[c].weights[static_cast<std::size_t>(j)] *
                    (s.observed[p] - s.baseline_x[static_cast<std::size_t>(j)]);
            }
    }
    return s;
}

// mutable per-block walker state; flip() moves one active position from its
// counterfactual value to its observed value
class Walker {
public:
    explicit Walker(const WalkSetup& setup) : s_(&setup) {
        if (s_->linear) {
            z_ = s_->z0;
        } else {
            x_ = s_->baseline_x;
        }
        baseline_value_ = value();
    }

    double baseline_value() const { return baseline_value_; }

    double flip(int pos) {
        if (s_->linear) {
            for (std::size_t c = 0; c < z_.size(); ++c)
                z_[c] += s_->delta[c][static_cast<std::size_t>(pos)];
        } else {
            x_[static_cast<std::size_t>(s_->active[static_cast<std::size_t>(pos)])] =
                s_->observed[static_cast<std::size_t>(pos)];
        }
        return value();
    }

    void rewind() {
        if (s_->linear) {
            z_ = s_->z0;
        } else {
            for (std::size_t p = 0; p < s_->active.size(); ++p) {
                auto j = static_cast<std::size_t>(s_->active[p]);
                x_[j] = s_->baseline_x[j];
            }
        }
    }

    // walk one joining order, adding each position's marginal impact
    void walk(const std::vector<int>& perm, double* sums) {
        double prev = baseline_value_;
        for (int pos : perm) {
            double v = flip(pos);
            sums[pos] += v - prev;
            prev = v;
        }
        rewind();
    }

private:
    double value() const {
        if (s_->linear) {
            double score = combine_components(s_->comps, z_);
            if (s_->target->kind == AttributionTarget::Kind::Score) return score;
            return s_->target->system->rule.decide(score) == s_->original_decision
                       ? 1.0
                       : 0.0;
        }
        return eval_target(*s_->target, x_, s_->original_decision);
    }

    const WalkSetup* s_;
    std::vector<double> z_;
    std::vector<double> x_;
    double baseline_value_ = 0.0;
};

ShapleyReport make_report(const WalkSetup& setup, const Instance& instance,
                          const FeatureSet& active, const AttributionTarget& target) {
    ShapleyReport report;
    report.schema = instance.schema_ptr();
    report.values.assign(static_cast<std::size_t>(instance.size()), 0.0);
    report.active = active;
    report.target_kind = target.kind;
    report.full_value = eval_target(target, instance.values(), setup.original_decision);
    report.baseline_value = eval_target(target, setup.baseline_x, setup.original_decision);
    return report;
}

// blocked mean over a permutation stream; bit-identical for any thread count
ShapleyReport blocked_run(const WalkSetup& setup, const Instance& instance,
                          const FeatureSet& active, const AttributionTarget& target,
                          std::uint64_t total,
                          const std::function<void(std::uint64_t, std::vector<int>&, Walker&,
                                                   double*)>& run_block) {
    auto report = make_report(setup, instance, active, target);
    const auto n = static_cast<std::size_t>(active.size());
    if (n == 0 || total == 0) return report;

    const auto blocks = static_cast<std::int64_t>((total + kShapleyBlock - 1) / kShapleyBlock);
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(blocks),
                                             std::vector<double>(n, 0.0));

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t b = 0; b < blocks; ++b) {
        Walker walker(setup);
        std::vector<int> perm(n);
        run_block(static_cast<std::uint64_t>(b), perm, walker,
                  partial[static_cast<std::size_t>(b)].data());
    }

    std::vector<double> sums(n, 0.0);
    for (std::int64_t b = 0; b < blocks; ++b)
        for (std::size_t p = 0; p < n; ++p)
            sums[p] += partial[static_cast<std::size_t>(b)][p];
    for (std::size_t p = 0; p < n; ++p)
        report.values[static_cast<std::size_t>(setup.active[p])] =
            sums[p] / static_cast<double>(total);
    return report;
}

}  // namespace

ShapleyReport shapley_exact(const AttributionTarget& target, const Instance& instance,
                            const CounterfactualPolicy& policy, const FeatureSet& active) {
    const int n = active.size();
    if (n > kExactShapleyBound)
        throw InfeasibleError("exact Shapley infeasible for " + std::to_string(n) +
                              " active features (bound " +
                              std::to_string(kExactShapleyBound) +
                              "); use shapley_sampled");
    auto setup = make_setup(target, instance, policy, active);
    const std::uint64_t total = kFactorial[n];

    auto report = blocked_run(
        setup, instance, active, target, total,
        [&](std::uint64_t b, std::vector<int>& perm, Walker& walker, double* sums) {
            const std::uint64_t first = b * kShapleyBlock;
            const std::uint64_t last = std::min(first + kShapleyBlock, total);
            unrank_permutation(first, n, perm);
            for (std::uint64_t i = first; i < last; ++i) {
                walker.walk(perm, sums);
                std::next_permutation(perm.begin(), perm.end());
            }
        });
    report.method = {true, 0, 0, false};
    return report;
}

ShapleyReport shapley_sampled(const AttributionTarget& target, const Instance& instance,
                              const CounterfactualPolicy& policy, const FeatureSet& active,
                              std::uint64_t sample_count, std::uint64_t seed) {
    if (sample_count < 1) throw Error("sample_count must be at least 1");
    const int n = active.size();
    if (n <= 7 && sample_count >= kFactorial[n]) {
        auto report = shapley_exact(target, instance, policy, active);
        report.method = {true, sample_count, seed, true};
        return report;
    }
    auto setup = make_setup(target, instance, policy, active);

    auto report = blocked_run(
        setup, instance, active, target, sample_count,
        [&](std::uint64_t b, std::vector<int>& perm, Walker& walker, double* sums) {
            const std::uint64_t first = b * kShapleyBlock;
            const std::uint64_t last = std::min(first + kShapleyBlock, sample_count);
            Rng rng = Rng::stream(seed, b);
            for (std::uint64_t i = first; i < last; ++i) {
                std::iota(perm.begin(), perm.end(), 0);
                rng.shuffle(perm);
                walker.walk(perm, sums);
            }
        });
    report.method = {false, sample_count, seed, false};
    return report;
}

std::vector<std::vector<double>> shapley_impact_rows(const AttributionTarget& target,
                                                     const Instance& instance,
                                                     const CounterfactualPolicy& policy,
                                                     const FeatureSet& active) {
    const int n = active.size();
    if (n > 8) throw InfeasibleError("impact rows are bounded to 8 active features");
    auto setup = make_setup(target, instance, policy, active);
    Walker walker(setup);

    std::vector<std::vector<double>> rows;
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> sums(static_cast<std::size_t>(n));
    do {
        std::fill(sums.begin(), sums.end(), 0.0);
        walker.walk(perm, sums.data());
        std::vector<double> row(static_cast<std::size_t>(instance.size()), 0.0);
        for (int p = 0; p < n; ++p)
            row[static_cast<std::size_t>(setup.active[static_cast<std::size_t>(p)])] =
                sums[static_cast<std::size_t>(p)];
        rows.push_back(std::move(row));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return rows;
}

int topk_matches(const std::vector<ShapleyReport>& reports, int k) {
    if (reports.size() < 2) throw Error("topk_matches needs at least 2 reports");
    if (k < 1) throw Error("k must be at least 1");
    const auto& first = reports.front();
    for (const auto& r : reports)
        if (r.values.size() != first.values.size() || !(r.active == first.active))
            throw Error("topk_matches: mismatched feature sets");

    auto topk = [&](const ShapleyReport& r) {
        std::vector<int> order(r.values.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (r.values[static_cast<std::size_t>(a)] !=
                r.values[static_cast<std::size_t>(b)])
                return r.values[static_cast<std::size_t>(a)] >
                       r.values[static_cast<std::size_t>(b)];
            return a < b;
        });
        order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(k)));
        std::sort(order.begin(), order.end());
        return order;
    };

    std::vector<int> common = topk(first);
    for (std::size_t i = 1; i < reports.size(); ++i) {
        auto cur = topk(reports[i]);
        std::vector<int> out;
        std::set_intersection(common.begin(), common.end(), cur.begin(), cur.end(),
                              std::back_inserter(out));
        common = std::move(out);
    }
    return static_cast<int>(common.size());
}

nlohmann::json ShapleyReport::to_json() const {
    nlohmann::json values_json = nlohmann::json::array();
    for (int j : active)
        values_json.push_back({{"feature", schema->at(j).name},
                               {"value", values[static_cast<std::size_t>(j)]}});
    nlohmann::json method_json = {{"kind", method.exact ? "exact" : "sampled"}};
    if (!method.exact || method.escalated) {
        method_json["sample_count"] = method.sample_count;
        method_json["seed"] = method.seed;
        method_json["escalated"] = method.escalated;
    }
    return {{"values", values_json},
            {"method", method_json},
            {"target", target_kind == AttributionTarget::Kind::Score ? "score" : "decision"},
            {"baseline_value", baseline_value},
            {"full_value", full_value}};
}

}  // namespace cfx
