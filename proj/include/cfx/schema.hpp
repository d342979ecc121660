#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "cfx/error.hpp"

namespace cfx {

enum class FeatureKind { Numeric, Binary, Categorical };

const char* kind_name(FeatureKind k);

struct Feature {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    // declared vocabulary for Categorical features; values are interned to
    // their position in this list at construction time
    std::vector<std::string> vocab;
};

// Ordered, uniquely named feature list. Immutable after construction.
class FeatureSchema {
public:
    explicit FeatureSchema(std::vector<Feature> features);

    int size() const { return static_cast<int>(features_.size()); }
    const Feature& at(int j) const { return features_.at(static_cast<std::size_t>(j)); }
    const std::vector<Feature>& features() const { return features_; }

    // -1 when the name is not declared
    int index_of(const std::string& name) const;

    // interned id of a categorical value, -1 when absent from the vocabulary
    int vocab_id(int j, const std::string& value) const;

    // true when v conforms to feature j's kind (binary in {0,1}, categorical
    // an integral id within the vocabulary)
    bool value_ok(int j, double v) const;

    bool operator==(const FeatureSchema& other) const;

private:
    std::vector<Feature> features_;
    std::unordered_map<std::string, int> by_name_;
};

using SchemaPtr = std::shared_ptr<const FeatureSchema>;

SchemaPtr make_schema(std::vector<Feature> features);

// convenience: m Binary features named A1..Am (demo systems, tests)
SchemaPtr binary_schema(int m);

// Feature vector aligned to a schema. Immutable.
class Instance {
public:
    Instance(SchemaPtr schema, std::vector<double> values);

    const FeatureSchema& schema() const { return *schema_; }
    const SchemaPtr& schema_ptr() const { return schema_; }
    int size() const { return static_cast<int>(values_.size()); }
    double operator[](int j) const { return values_[static_cast<std::size_t>(j)]; }
    const std::vector<double>& values() const { return values_; }

    bool operator==(const Instance& other) const { return values_ == other.values_; }

private:
    SchemaPtr schema_;
    std::vector<double> values_;
};

// Subset of feature positions, canonically sorted ascending.
class FeatureSet {
public:
    FeatureSet() = default;
    explicit FeatureSet(std::vector<int> indices);

    static FeatureSet single(int j) { return FeatureSet(std::vector<int>{j}); }

    int size() const { return static_cast<int>(idx_.size()); }
    bool empty() const { return idx_.empty(); }
    bool contains(int j) const;
    bool subset_of(const FeatureSet& other) const;
    bool proper_subset_of(const FeatureSet& other) const {
        return size() < other.size() && subset_of(other);
    }

    FeatureSet with(int j) const;

    const std::vector<int>& indices() const { return idx_; }
    auto begin() const { return idx_.begin(); }
    auto end() const { return idx_.end(); }

    bool operator==(const FeatureSet& other) const { return idx_ == other.idx_; }
    bool operator<(const FeatureSet& other) const { return idx_ < other.idx_; }

private:
    std::vector<int> idx_;
};

}  // namespace cfx
