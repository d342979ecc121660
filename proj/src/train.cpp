#include "cfx/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "linalg.hpp"

namespace cfx {
namespace {

void check_binary_target(const Dataset& data) {
    if (!data.target) throw Error("training requires a target column");
    bool has0 = false, has1 = false;
    for (double y : *data.target) {
        if (y == 0.0) has0 = true;
        else if (y == 1.0) has1 = true;
        else throw Error("classification target must be 0/1");
    }
    if (!has0 || !has1) throw Error("single-class target");
}

Standardization fit_standardization(const Dataset& data) {
    Standardization s;
    const auto m = static_cast<std::size_t>(data.schema->size());
    s.mean.assign(m, 0.0);
    s.scale.assign(m, 1.0);
    const double n = static_cast<double>(data.size());
    for (std::size_t j = 0; j < m; ++j) {
        double sum = 0.0;
        for (const auto& row : data.rows) sum += row[static_cast<int>(j)];
        s.mean[j] = sum / n;
        double ss = 0.0;
        for (const auto& row : data.rows) {
            double d = row[static_cast<int>(j)] - s.mean[j];
            ss += d * d;
        }
        double sd = std::sqrt(ss / n);
        s.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

std::vector<double> standardized_matrix(const Dataset& data, const Standardization* s) {
    const auto m = static_cast<std::size_t>(data.schema->size());
    std::vector<double> x(data.size() * m);
    for (std::size_t r = 0; r < data.size(); ++r)
        for (std::size_t j = 0; j < m; ++j) {
            double v = data.rows[r][static_cast<int>(j)];
            x[r * m + j] = s ? (v - s->mean[j]) / s->scale[j] : v;
        }
    return x;
}

double loss_on_matrix(const std::vector<double>& x, const std::vector<double>& y,
                      std::size_t m, const std::vector<double>& w, double b, double l2) {
    const std::size_t n = y.size();
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double z = b;
        for (std::size_t j = 0; j < m; ++j) z += w[j] * x[r * m + j];
        // log(1+exp(-z)) stable in both tails
        double nll = z > 0.0 ? std::log1p(std::exp(-z)) - (y[r] - 1.0) * z
                             : std::log1p(std::exp(z)) - y[r] * z;
        loss += nll;
    }
    loss /= static_cast<double>(n);
    double reg = 0.0;
    for (double wj : w) reg += wj * wj;
    return loss + 0.5 * l2 * reg;
}

void gradient_on_matrix(const std::vector<double>& x, const std::vector<double>& y,
                        std::size_t m, const std::vector<double>& w, double b,
                        double l2, std::vector<double>& gw, double& gb) {
    const std::size_t n = y.size();
    gw.assign(m, 0.0);
    gb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double z = b;
        for (std::size_t j = 0; j < m; ++j) z += w[j] * x[r * m + j];
        double resid = sigmoid(z) - y[r];
        for (std::size_t j = 0; j < m; ++j) gw[j] += resid * x[r * m + j];
        gb += resid;
    }
    for (std::size_t j = 0; j < m; ++j)
        gw[j] = gw[j] / static_cast<double>(n) + l2 * w[j];
    gb /= static_cast<double>(n);
}

}  // namespace

double logistic_loss(const Dataset& data, const std::vector<double>& weights,
                     double intercept, double l2) {
    auto x = standardized_matrix(data, nullptr);
    return loss_on_matrix(x, *data.target, static_cast<std::size_t>(data.schema->size()),
                          weights, intercept, l2);
}

void logistic_gradient(const Dataset& data, const std::vector<double>& weights,
                       double intercept, double l2, std::vector<double>& grad_w,
                       double& grad_b) {
    auto x = standardized_matrix(data, nullptr);
    gradient_on_matrix(x, *data.target, static_cast<std::size_t>(data.schema->size()),
                       weights, intercept, l2, grad_w, grad_b);
}

std::pair<ScoringFunction, TrainReport> train_logistic(const Dataset& train, double l2,
                                                       const LogisticConfig& config) {
    check_binary_target(train);
    if (l2 < 0.0) throw Error("l2 must be nonnegative");

    std::optional<Standardization> std_params;
    if (config.standardize) std_params = fit_standardization(train);
    auto x = standardized_matrix(train, std_params ? &*std_params : nullptr);
    const auto m = static_cast<std::size_t>(train.schema->size());
    const auto& y = *train.target;

    std::vector<double> w(m, 0.0);
    double b = 0.0;
    std::vector<double> gw;
    double gb = 0.0;

    TrainReport report;
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        gradient_on_matrix(x, y, m, w, b, l2, gw, gb);
        double norm2 = gb * gb;
        for (double g : gw) norm2 += g * g;
        report.gradient_norm = std::sqrt(norm2);
        report.iterations = epoch;
        if (!std::isfinite(report.gradient_norm))
            throw TrainingDiverged("training diverged: non-finite gradient");
        if (report.gradient_norm <= config.tolerance) {
            report.converged = true;
            break;
        }
        for (std::size_t j = 0; j < m; ++j) w[j] -= config.learning_rate * gw[j];
        b -= config.learning_rate * gb;
        if (!std::isfinite(b))
            throw TrainingDiverged("training diverged: non-finite parameters");
    }
    report.final_loss = loss_on_matrix(x, y, m, w, b, l2);
    if (!std::isfinite(report.final_loss))
        throw TrainingDiverged("training diverged: non-finite loss");

    return {ScoringFunction::logistic(std::move(w), b, std::move(std_params)), report};
}

std::pair<ScoringFunction, TrainReport> train_linear(const Dataset& train, double l2,
                                                     bool standardize) {
    if (!train.target) throw Error("training requires a target column");
    if (train.size() < 2) throw Error("linear regression needs at least 2 rows");
    if (l2 < 0.0) throw Error("l2 must be nonnegative");

    std::optional<Standardization> std_params;
    if (standardize) std_params = fit_standardization(train);
    const auto m = static_cast<std::size_t>(train.schema->size());
    const std::size_t n = train.size();
    const std::size_t cols = m + 1;  // intercept column

    std::vector<double> design(n * cols);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < m; ++j) {
            double v = train.rows[r][static_cast<int>(j)];
            design[r * cols + j] =
                std_params ? (v - std_params->mean[j]) / std_params->scale[j] : v;
        }
        design[r * cols + m] = 1.0;
    }
    auto theta = linalg::ridge_solve(design, n, cols, *train.target, l2);

    std::vector<double> w(theta.begin(), theta.begin() + static_cast<long>(m));
    double b = theta[m];

    TrainReport report;
    report.converged = true;
    report.iterations = 1;
    double rss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double pred = b;
        for (std::size_t j = 0; j < m; ++j) pred += w[j] * design[r * cols + j];
        double d = pred - (*train.target)[r];
        rss += d * d;
    }
    report.final_loss = rss / static_cast<double>(n);

    return {ScoringFunction::linear(std::move(w), b, std::move(std_params)), report};
}

double percentile_threshold(const ScoringFunction& scorer, const Dataset& reference,
                            double top_fraction) {
    if (reference.size() == 0) throw Error("empty reference set");
    if (!(top_fraction > 0.0 && top_fraction < 1.0))
        throw Error("top fraction must lie in (0,1)");
    std::vector<double> scores(reference.size());
    for (std::size_t r = 0; r < reference.size(); ++r)
        scores[r] = scorer.score(reference.rows[r]);
    std::sort(scores.begin(), scores.end(), std::greater<>());
    auto take = static_cast<std::size_t>(
        std::ceil(static_cast<double>(reference.size()) * top_fraction));
    take = std::min(std::max<std::size_t>(take, 1), reference.size());
    return scores[take - 1];
}

void save_model(const ScoringFunction& fn, const std::vector<std::string>& feature_names,
                const std::string& path) {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["features"] = feature_names;
    doc["model"] = fn.to_json();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << doc.dump(2) << '\n';
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open file");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    if (doc.value("version", 0) != 1)
        throw DataError(path + ": unsupported model file version");
    ModelFile out{ScoringFunction::from_json(doc.at("model")),
                  doc.at("features").get<std::vector<std::string>>()};
    return out;
}

}  // namespace cfx
