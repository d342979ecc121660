#include "cfx/scoring.hpp"

#include <cmath>

namespace cfx {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

ScoringFunction ScoringFunction::linear(std::vector<double> weights, double intercept,
                                        std::optional<Standardization> std) {
    ScoringFunction fn;
    fn.kind_ = ScoringKind::Linear;
    fn.feature_count_ = static_cast<int>(weights.size());
    fn.weights_ = std::move(weights);
    fn.intercept_ = intercept;
    fn.std_ = std::move(std);
    if (fn.std_ && (fn.std_->mean.size() != fn.weights_.size() ||
                    fn.std_->scale.size() != fn.weights_.size()))
        throw Error("standardization parameter length mismatch");
    return fn;
}

ScoringFunction ScoringFunction::logistic(std::vector<double> weights, double intercept,
                                          std::optional<Standardization> std) {
    auto fn = linear(std::move(weights), intercept, std::move(std));
    fn.kind_ = ScoringKind::Logistic;
    return fn;
}

ScoringFunction ScoringFunction::polynomial(std::vector<Monomial> terms,
                                            int feature_count) {
    ScoringFunction fn;
    fn.kind_ = ScoringKind::Polynomial;
    fn.feature_count_ = feature_count;
    fn.terms_ = std::move(terms);
    for (const auto& t : fn.terms_)
        for (int j : t.indices)
            if (j < 0 || j >= feature_count)
                throw Error("monomial references feature index out of range");
    return fn;
}

ScoringFunction ScoringFunction::product(std::vector<ScoringFunction> components) {
    if (components.size() < 2) throw Error("product needs at least 2 components");
    ScoringFunction fn;
    fn.kind_ = ScoringKind::Product;
    fn.feature_count_ = components.front().feature_count();
    for (const auto& c : components)
        if (c.feature_count() != fn.feature_count_)
            throw Error("product components disagree on feature count");
    fn.components_ = std::move(components);
    return fn;
}

double ScoringFunction::score(const Instance& instance) const {
    if (instance.size() != feature_count_)
        throw Error("instance size does not match scoring function");
    return score(instance.values());
}

double ScoringFunction::score(const std::vector<double>& x) const {
    switch (kind_) {
        case ScoringKind::Linear:
        case ScoringKind::Logistic: {
            double z = intercept_;
            if (std_) {
                for (std::size_t j = 0; j < weights_.size(); ++j)
                    z += weights_[j] * (x[j] - std_->mean[j]) / std_->scale[j];
            } else {
                for (std::size_t j = 0; j < weights_.size(); ++j)
                    z += weights_[j] * x[j];
            }
            return kind_ == ScoringKind::Logistic ? sigmoid(z) : z;
        }
        case ScoringKind::Polynomial: {
            double acc = 0.0;
            for (const auto& t : terms_) {
                double prod = t.coeff;
                for (int j : t.indices) prod *= x[static_cast<std::size_t>(j)];
                acc += prod;
            }
            return acc;
        }
        case ScoringKind::Product: {
            double prod = 1.0;
            for (const auto& c : components_) prod *= c.score(x);
            return prod;
        }
    }
    return 0.0;
}

namespace {

const char* kind_string(ScoringKind k) {
    switch (k) {
        case ScoringKind::Linear: return "linear";
        case ScoringKind::Logistic: return "logistic";
        case ScoringKind::Polynomial: return "polynomial";
        case ScoringKind::Product: return "product";
    }
    return "?";
}

}  // namespace

nlohmann::json ScoringFunction::to_json() const {
    nlohmann::json j;
    j["kind"] = kind_string(kind_);
    j["feature_count"] = feature_count_;
    switch (kind_) {
        case ScoringKind::Linear:
        case ScoringKind::Logistic:
            j["weights"] = weights_;
            j["intercept"] = intercept_;
            if (std_) {
                j["standardization"] = {{"mean", std_->mean}, {"scale", std_->scale}};
            } else {
                j["standardization"] = nullptr;
            }
            break;
        case ScoringKind::Polynomial: {
            auto terms = nlohmann::json::array();
            for (const auto& t : terms_)
                terms.push_back({{"coeff", t.coeff}, {"indices", t.indices}});
            j["terms"] = terms;
            break;
        }
        case ScoringKind::Product: {
            auto comps = nlohmann::json::array();
            for (const auto& c : components_) comps.push_back(c.to_json());
            j["components"] = comps;
            break;
        }
    }
    return j;
}

ScoringFunction ScoringFunction::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear" || kind == "logistic") {
        std::optional<Standardization> std;
        if (j.contains("standardization") && !j["standardization"].is_null()) {
            Standardization s;
            s.mean = j["standardization"].at("mean").get<std::vector<double>>();
            s.scale = j["standardization"].at("scale").get<std::vector<double>>();
            std = std::move(s);
        }
        auto weights = j.at("weights").get<std::vector<double>>();
        double intercept = j.at("intercept").get<double>();
        return kind == "linear"
                   ? linear(std::move(weights), intercept, std::move(std))
                   : logistic(std::move(weights), intercept, std::move(std));
    }
    if (kind == "polynomial") {
        std::vector<Monomial> terms;
        for (const auto& t : j.at("terms")) {
            Monomial m;
            m.coeff = t.at("coeff").get<double>();
            m.indices = t.at("indices").get<std::vector<int>>();
            terms.push_back(std::move(m));
        }
        return polynomial(std::move(terms), j.at("feature_count").get<int>());
    }
    if (kind == "product") {
        std::vector<ScoringFunction> comps;
        for (const auto& c : j.at("components")) comps.push_back(from_json(c));
        return product(std::move(comps));
    }
    throw Error("unknown scoring function kind: " + kind);
}

std::optional<std::vector<LinearComponent>> linear_components(const ScoringFunction& fn) {
    auto fold = [](const ScoringFunction& f) {
        LinearComponent c;
        c.sigmoid = f.kind() == ScoringKind::Logistic;
        c.intercept = f.intercept();
        c.weights = f.weights();
        if (const auto& std = f.standardization()) {
            for (std::size_t j = 0; j < c.weights.size(); ++j) {
                c.weights[j] /= std->scale[j];
                c.intercept -= c.weights[j] * std->mean[j];
            }
        }
        return c;
    };
    switch (fn.kind()) {
        case ScoringKind::Linear:
        case ScoringKind::Logistic:
            return std::vector<LinearComponent>{fold(fn)};
        case ScoringKind::Product: {
            std::vector<LinearComponent> out;
            for (const auto& c : fn.components()) {
                if (c.kind() != ScoringKind::Linear && c.kind() != ScoringKind::Logistic)
                    return std::nullopt;
                out.push_back(fold(c));
            }
            return out;
        }
        case ScoringKind::Polynomial:
            return std::nullopt;
    }
    return std::nullopt;
}

double combine_components(const std::vector<LinearComponent>& comps,
                          const std::vector<double>& z) {
    double prod = 1.0;
    for (std::size_t c = 0; c < comps.size(); ++c)
        prod *= comps[c].sigmoid ? sigmoid(z[c]) : z[c];
    return prod;
}

}  // namespace cfx
