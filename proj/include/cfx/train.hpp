#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cfx/dataset.hpp"
#include "cfx/scoring.hpp"

namespace cfx {

struct TrainReport {
    int iterations = 0;
    double final_loss = 0.0;
    double gradient_norm = 0.0;
    bool converged = false;
};

struct LogisticConfig {
    double learning_rate = 0.5;
    int max_epochs = 10000;
    double tolerance = 1e-8;
    bool standardize = false;
};

// mean negative log-likelihood + l2*|w|^2/2 (intercept unpenalized);
// exposed for the finite-difference gradient checks
double logistic_loss(const Dataset& data, const std::vector<double>& weights,
                     double intercept, double l2);
void logistic_gradient(const Dataset& data, const std::vector<double>& weights,
                       double intercept, double l2, std::vector<double>& grad_w,
                       double& grad_b);

// Deterministic full-batch gradient descent from zero initialization.
// Requires a binary target with both classes present; throws
// TrainingDiverged on a non-finite loss.
std::pair<ScoringFunction, TrainReport> train_logistic(const Dataset& train, double l2,
                                                       const LogisticConfig& config = {});

// Ridge normal equations with the intercept fit by column augmentation.
std::pair<ScoringFunction, TrainReport> train_linear(const Dataset& train, double l2,
                                                     bool standardize = false);

// Score t such that a ThresholdAtLeast(t) rule selects the ceil(n*f) highest
// scoring rows of the reference set.
double percentile_threshold(const ScoringFunction& scorer, const Dataset& reference,
                            double top_fraction);

// versioned model document: {version, kind, schema feature names, weights,
// intercept, standardization or null}
struct ModelFile {
    ScoringFunction fn;
    std::vector<std::string> feature_names;
};

void save_model(const ScoringFunction& fn, const std::vector<std::string>& feature_names,
                const std::string& path);
ModelFile load_model(const std::string& path);

}  // namespace cfx
