#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace cfx {

// One harness run: numeric metric rows plus wall-clock timing rows kept
// separate so that `rows` is exactly reproducible per seed while timings are
// allowed to vary.
struct BenchResult {
    std::string experiment;
    std::vector<std::string> columns;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> timing_columns;
    std::vector<std::vector<double>> timing_rows;
    std::uint64_t seed = 0;
    nlohmann::json config;
    bool passed = true;
    std::vector<std::string> notes;

    void write_csv(const std::string& path) const;
    nlohmann::json to_json(bool include_timings = true) const;
};

// Rebuilds the three demo systems and checks every joining-order impact row,
// both Shapley vectors per system, and the oracle and search explanation sets
// against frozen golden values, exactly.
BenchResult repro_examples();

struct ConsistencyConfig {
    int feature_count = 10822;
    int reference_rows = 2000;
    int users_per_quantile = 40;
    int runs = 5;
    std::uint64_t sample_count = 4100;
    int k = 3;
    double top_fraction = 0.01;
    int max_iteration = 30;
    std::uint64_t seed = 1;
};

// Sparse binary targeting benchmark: per density quantile, the mean top-k
// match count across repeated sampled attributions and the mean first
// explanation size, with trend assertions (one sub-5%-relative inversion
// allowed).
BenchResult bench_consistency(const ConsistencyConfig& config);

struct StudyConfig {
    std::uint64_t seed = 1;
    int rows = 0;           // generator row count; 0 = study default
    int explain_count = 0;  // instances to explain; 0 = study default
};

// which: "credit", "targeting", or "donation"
BenchResult run_case_study(const std::string& which, const StudyConfig& config = {});

// non-increasing (direction -1) or non-decreasing (+1) across quantile
// means; one inversion tolerated when the relative gap is below 5%
bool trend_holds(const std::vector<double>& means, int direction);

}  // namespace cfx
