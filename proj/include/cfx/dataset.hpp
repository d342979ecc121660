#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfx/schema.hpp"

namespace cfx {

struct Dataset {
    SchemaPtr schema;
    std::vector<Instance> rows;
    std::optional<std::vector<double>> target;
    std::string target_name;

    std::size_t size() const { return rows.size(); }
    double value(std::size_t row, int col) const { return rows[row][col]; }
};

struct ColumnStatsEntry {
    double mean = 0.0;  // numeric columns
    double mode = 0.0;  // binary/categorical columns (interned id)
    double min = 0.0;
    double max = 0.0;
    std::int64_t nonzero_count = 0;
    std::int64_t count = 0;
};

struct ColumnStats {
    SchemaPtr schema;
    std::vector<ColumnStatsEntry> cols;
};

// CSV per RFC 4180: header row mandatory, quoted fields with doubled quotes,
// '.' decimal point. Column kinds are inferred unless overridden by hints:
// Binary when every value is 0 or 1, Numeric when every value parses as a
// real, Categorical otherwise. Empty cells are a hard error. target_name
// selects a column that is excluded from the feature schema.
Dataset load_csv(const std::string& path,
                 const std::map<std::string, FeatureKind>& hints = {},
                 const std::string& target_name = "");

void save_csv(const Dataset& dataset, const std::string& path);

// Means use compensated summation; mode ties break toward the smallest
// interned id. When mask is given, stats cover only rows with mask[i] true.
ColumnStats compute_stats(const Dataset& dataset,
                          const std::vector<bool>* mask = nullptr);

// Deterministic shuffle under seed, then a floor(n*train_fraction) /
// remainder partition.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed);

}  // namespace cfx
