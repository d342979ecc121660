// Compares the blocked OpenMP Shapley kernels against the serial reference
// implementations (correctness and wall clock), and times a batch of searches
// with 1 thread vs all threads. Pass --smoke for a fast CI-sized run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <omp.h>

#include "cfx/decision.hpp"
#include "cfx/policy.hpp"
#include "cfx/rng.hpp"
#include "cfx/schema.hpp"
#include "cfx/scoring.hpp"
#include "cfx/search.hpp"
#include "cfx/shapley.hpp"

using namespace cfx;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
    return d;
}

struct Workload {
    SchemaPtr schema;
    DecisionSystem system{ScoringFunction::linear({0.0}, 0.0), DecisionRule{}, 2};
    std::vector<Instance> instances;
};

Workload make_workload(int m, int n_instances, int likes, std::uint64_t seed) {
    Workload w;
    w.schema = binary_schema(m);
    Rng rng(seed);
    std::vector<double> weights(static_cast<std::size_t>(m));
    for (auto& v : weights) v = rng.normal() * 0.4 + 0.25;
    w.system = DecisionSystem{ScoringFunction::logistic(std::move(weights), -4.0),
                              DecisionRule{RuleKind::ThresholdAtLeast, 0.5, 1, 0}, 2};
    for (int i = 0; i < n_instances; ++i) {
        std::vector<double> x(static_cast<std::size_t>(m), 0.0);
        for (int l = 0; l < likes; ++l)
            x[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(m)))] = 1.0;
        w.instances.emplace_back(w.schema, std::move(x));
    }
    return w;
}

FeatureSet ones_of(const Instance& inst) {
    std::vector<int> idx;
    for (int j = 0; j < inst.size(); ++j)
        if (inst[j] != 0.0) idx.push_back(j);
    return FeatureSet(std::move(idx));
}

}  // namespace

int main(int argc, char** argv) {
    bool smoke = argc > 1 && std::strcmp(argv[1], "--smoke") == 0;
    const int m = smoke ? 400 : 4000;
    const int exact_features = smoke ? 7 : 9;
    const std::uint64_t samples = smoke ? 20000 : 200000;
    const int batch = smoke ? 16 : 96;
    const int likes = smoke ? 24 : 48;

    std::printf("threads available: %d\n", omp_get_max_threads());

    auto w = make_workload(m, batch, likes, 7);
    auto policy = CounterfactualPolicy::zero(w.schema);
    auto target = AttributionTarget::decision_indicator(w.system);

    // exact kernel on the first instance restricted to a small active set
    {
        auto active_all = ones_of(w.instances.front()).indices();
        active_all.resize(std::min<std::size_t>(active_all.size(),
                                                static_cast<std::size_t>(exact_features)));
        FeatureSet active(active_all);
        double t0 = now_ms();
        auto serial = reference::shapley_exact(target, w.instances.front(), policy, active);
        double t1 = now_ms();
        auto parallel = shapley_exact(target, w.instances.front(), policy, active);
        double t2 = now_ms();
        std::printf("exact  n=%d: serial %8.1f ms | parallel %8.1f ms | speedup %4.1fx | "
                    "max|diff| %.2e\n",
                    active.size(), t1 - t0, t2 - t1, (t1 - t0) / std::max(t2 - t1, 1e-9),
                    max_abs_diff(serial.values, parallel.values));
    }

    // sampled kernel on a dense instance
    {
        FeatureSet active = ones_of(w.instances.front());
        double t0 = now_ms();
        auto serial = reference::shapley_sampled(target, w.instances.front(), policy,
                                                 active, samples, 42);
        double t1 = now_ms();
        auto parallel =
            shapley_sampled(target, w.instances.front(), policy, active, samples, 42);
        double t2 = now_ms();
        std::printf("sample N=%-7llu: serial %8.1f ms | parallel %8.1f ms | speedup %4.1fx | "
                    "max|diff| %.2e\n",
                    static_cast<unsigned long long>(samples), t1 - t0, t2 - t1,
                    (t1 - t0) / std::max(t2 - t1, 1e-9),
                    max_abs_diff(serial.values, parallel.values));
    }

    // batch of searches: 1 thread vs all
    {
        std::vector<std::size_t> sizes(w.instances.size());
        auto run = [&](int threads) {
            double t0 = now_ms();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(w.instances.size()); ++i) {
                auto found = ebe_search(w.system, w.instances[static_cast<std::size_t>(i)],
                                        policy, {});
                sizes[static_cast<std::size_t>(i)] = found.size();
            }
            return now_ms() - t0;
        };
        double serial_ms = run(1);
        auto serial_sizes = sizes;
        double parallel_ms = run(omp_get_max_threads());
        bool same = serial_sizes == sizes;
        std::printf("search batch=%d: serial %8.1f ms | parallel %8.1f ms | speedup %4.1fx | "
                    "results %s\n",
                    batch, serial_ms, parallel_ms, serial_ms / std::max(parallel_ms, 1e-9),
                    same ? "identical" : "DIFFER");
        if (!same) return 1;
    }
    return 0;
}
