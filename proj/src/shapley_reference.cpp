#include <algorithm>
#include <numeric>

#include "cfx/rng.hpp"
#include "cfx/shapley.hpp"

// Plain single-threaded implementations: fresh re-scoring after every flip,
// straight accumulation in stream order. No shared machinery with the blocked
// kernels beyond the sample-stream contract (per-block seeding), so the two
// paths cross-check each other.

namespace cfx::reference {
namespace {

double eval(const AttributionTarget& target, const std::vector<double>& x,
            int original_decision) {
    if (target.kind == AttributionTarget::Kind::Score) return target.fn->score(x);
    int d = target.system->rule.decide(target.system->scorer.score(x));
    return d == original_decision ? 1.0 : 0.0;
}

struct Frame {
    std::vector<int> active;
    std::vector<double> baseline;
    std::vector<double> observed;
    int original_decision = 0;
};

Frame make_frame(const AttributionTarget& target, const Instance& instance,
                 const CounterfactualPolicy& policy, const FeatureSet& active) {
    Frame f;
    f.active.assign(active.begin(), active.end());
    if (target.kind == AttributionTarget::Kind::DecisionIndicator)
        f.original_decision = target.system->decide(instance);
    f.baseline = instance.values();
    for (int j : f.active) {
        f.observed.push_back(instance[j]);
        f.baseline[static_cast<std::size_t>(j)] = policy.value_for(instance, j);
    }
    return f;
}

void walk(const AttributionTarget& target, const Frame& f, const std::vector<int>& perm,
          std::vector<double>& sums) {
    std::vector<double> x = f.baseline;
    double prev = eval(target, x, f.original_decision);
    for (int pos : perm) {
        x[static_cast<std::size_t>(f.active[static_cast<std::size_t>(pos)])] =
            f.observed[static_cast<std::size_t>(pos)];
        double v = eval(target, x, f.original_decision);
        sums[static_cast<std::size_t>(pos)] += v - prev;
        prev = v;
    }
}

ShapleyReport finish(const Frame& f, const Instance& instance, const FeatureSet& active,
                     const AttributionTarget& target, const std::vector<double>& sums,
                     std::uint64_t total) {
    ShapleyReport report;
    report.schema = instance.schema_ptr();
    report.values.assign(static_cast<std::size_t>(instance.size()), 0.0);
    report.active = active;
    report.target_kind = target.kind;
    report.full_value = eval(target, instance.values(), f.original_decision);
    report.baseline_value = eval(target, f.baseline, f.original_decision);
    for (std::size_t p = 0; p < f.active.size(); ++p)
        report.values[static_cast<std::size_t>(f.active[p])] =
            sums[p] / static_cast<double>(total);
    return report;
}

}  // namespace

ShapleyReport shapley_exact(const AttributionTarget& target, const Instance& instance,
                            const CounterfactualPolicy& policy, const FeatureSet& active) {
    auto f = make_frame(target, instance, policy, active);
    const auto n = f.active.size();
    std::vector<double> sums(n, 0.0);
    std::uint64_t total = 0;
    if (n > 0) {
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        do {
            walk(target, f, perm, sums);
            ++total;
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    auto report = finish(f, instance, active, target, sums, std::max<std::uint64_t>(total, 1));
    report.method = {true, 0, 0, false};
    return report;
}

ShapleyReport shapley_sampled(const AttributionTarget& target, const Instance& instance,
                              const CounterfactualPolicy& policy, const FeatureSet& active,
                              std::uint64_t sample_count, std::uint64_t seed) {
    auto f = make_frame(target, instance, policy, active);
    const auto n = f.active.size();
    std::vector<double> sums(n, 0.0);
    std::vector<int> perm(n);
    for (std::uint64_t b = 0; b * kShapleyBlock < sample_count && n > 0; ++b) {
        Rng rng = Rng::stream(seed, b);
        const std::uint64_t last = std::min((b + 1) * kShapleyBlock, sample_count);
        for (std::uint64_t i = b * kShapleyBlock; i < last; ++i) {
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(perm);
            walk(target, f, perm, sums);
        }
    }
    auto report = finish(f, instance, active, target, sums, sample_count);
    report.method = {false, sample_count, seed, false};
    return report;
}

}  // namespace cfx::reference
