#include "cfx/schema.hpp"

#include <algorithm>
#include <cmath>

namespace cfx {

const char* kind_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::Numeric: return "numeric";
        case FeatureKind::Binary: return "binary";
        case FeatureKind::Categorical: return "categorical";
    }
    return "?";
}

FeatureSchema::FeatureSchema(std::vector<Feature> features)
    : features_(std::move(features)) {
    if (features_.empty()) throw Error("schema must declare at least one feature");
    for (int j = 0; j < size(); ++j) {
        const auto& f = features_[static_cast<std::size_t>(j)];
        if (f.name.empty()) throw Error("feature name must not be empty");
        if (!by_name_.emplace(f.name, j).second)
            throw Error("duplicate feature name: " + f.name);
        if (f.kind == FeatureKind::Categorical && f.vocab.empty())
            throw Error("categorical feature has empty vocabulary: " + f.name);
    }
}

int FeatureSchema::index_of(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
}

int FeatureSchema::vocab_id(int j, const std::string& value) const {
    const auto& vocab = at(j).vocab;
    auto it = std::find(vocab.begin(), vocab.end(), value);
    return it == vocab.end() ? -1 : static_cast<int>(it - vocab.begin());
}

bool FeatureSchema::value_ok(int j, double v) const {
    if (!std::isfinite(v)) return false;
    switch (at(j).kind) {
        case FeatureKind::Numeric:
            return true;
        case FeatureKind::Binary:
            return v == 0.0 || v == 1.0;
        case FeatureKind::Categorical:
            return v == std::floor(v) && v >= 0.0 &&
                   v < static_cast<double>(at(j).vocab.size());
    }
    return false;
}

bool FeatureSchema::operator==(const FeatureSchema& other) const {
    if (size() != other.size()) return false;
    for (int j = 0; j < size(); ++j) {
        const auto& a = at(j);
        const auto& b = other.at(j);
        if (a.name != b.name || a.kind != b.kind || a.vocab != b.vocab) return false;
    }
    return true;
}

SchemaPtr make_schema(std::vector<Feature> features) {
    return std::make_shared<const FeatureSchema>(std::move(features));
}

SchemaPtr binary_schema(int m) {
    std::vector<Feature> fs;
    fs.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
        fs.push_back({"A" + std::to_string(j + 1), FeatureKind::Binary, {}});
    return make_schema(std::move(fs));
}

Instance::Instance(SchemaPtr schema, std::vector<double> values)
    : schema_(std::move(schema)), values_(std::move(values)) {
    if (!schema_) throw Error("instance requires a schema");
    if (static_cast<int>(values_.size()) != schema_->size())
        throw Error("instance has " + std::to_string(values_.size()) +
                    " values for a schema of " + std::to_string(schema_->size()));
    for (int j = 0; j < schema_->size(); ++j)
        if (!schema_->value_ok(j, values_[static_cast<std::size_t>(j)]))
            throw Error("value does not conform to " +
                        std::string(kind_name(schema_->at(j).kind)) + " feature " +
                        schema_->at(j).name);
}

FeatureSet::FeatureSet(std::vector<int> indices) : idx_(std::move(indices)) {
    std::sort(idx_.begin(), idx_.end());
    idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
    if (!idx_.empty() && idx_.front() < 0) throw Error("negative feature index");
}

bool FeatureSet::contains(int j) const {
    return std::binary_search(idx_.begin(), idx_.end(), j);
}

bool FeatureSet::subset_of(const FeatureSet& other) const {
    return std::includes(other.idx_.begin(), other.idx_.end(), idx_.begin(), idx_.end());
}

FeatureSet FeatureSet::with(int j) const {
    auto v = idx_;
    auto pos = std::lower_bound(v.begin(), v.end(), j);
    if (pos == v.end() || *pos != j) v.insert(pos, j);
    return FeatureSet(std::move(v));
}

}  // namespace cfx
