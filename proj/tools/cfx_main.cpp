#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "cfx/dataset.hpp"
#include "cfx/decision.hpp"
#include "cfx/demo.hpp"
#include "cfx/error.hpp"
#include "cfx/experiments.hpp"
#include "cfx/policy.hpp"
#include "cfx/rng.hpp"
#include "cfx/search.hpp"
#include "cfx/shapley.hpp"
#include "cfx/train.hpp"

namespace {

using cfx::Dataset;
using cfx::DecisionSystem;
using cfx::FeatureSet;
using cfx::Instance;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAssertion = 2;
constexpr int kExitNoExplanations = 3;
constexpr int kExitInfeasible = 4;

void write_output(const std::string& text, const std::string& output_path) {
    if (output_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(output_path, std::ios::binary);
    if (!out) throw cfx::DataError(output_path + ": cannot open for writing");
    out << text;
}

// keep only the named columns, in the model's order
Dataset project_dataset(const Dataset& data, const std::vector<std::string>& names) {
    std::vector<cfx::Feature> features;
    std::vector<int> sources;
    for (const auto& name : names) {
        int j = data.schema->index_of(name);
        if (j < 0) throw cfx::Error("column missing from data: " + name);
        features.push_back(data.schema->at(j));
        sources.push_back(j);
    }
    Dataset out;
    out.schema = cfx::make_schema(std::move(features));
    out.target = data.target;
    out.target_name = data.target_name;
    out.rows.reserve(data.size());
    for (const auto& row : data.rows) {
        std::vector<double> values(sources.size());
        for (std::size_t c = 0; c < sources.size(); ++c) values[c] = row[sources[c]];
        out.rows.emplace_back(out.schema, std::move(values));
    }
    return out;
}

Instance instance_from_json(const cfx::SchemaPtr& schema, const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw cfx::Error(std::string("cannot parse --instance JSON: ") + e.what());
    }
    if (!j.is_object()) throw cfx::Error("--instance JSON must be an object");
    std::vector<double> values(static_cast<std::size_t>(schema->size()));
    for (int f = 0; f < schema->size(); ++f) {
        const auto& feature = schema->at(f);
        if (!j.contains(feature.name))
            throw cfx::Error("--instance JSON is missing feature " + feature.name);
        const auto& v = j[feature.name];
        if (feature.kind == cfx::FeatureKind::Categorical) {
            int id = v.is_string() ? schema->vocab_id(f, v.get<std::string>())
                                   : static_cast<int>(v.get<double>());
            if (id < 0) throw cfx::Error("value outside vocabulary for " + feature.name);
            values[static_cast<std::size_t>(f)] = static_cast<double>(id);
        } else {
            values[static_cast<std::size_t>(f)] = v.get<double>();
        }
    }
    return Instance(schema, std::move(values));
}

struct CommonFlags {
    std::string model_path;
    std::string model2_path;
    std::string demo;
    std::string data_path;
    std::string target_column;
    std::string instance_text;
    std::string policy_kind = "zero";
    std::string policy_data;
    std::string policy_population = "all";
    double policy_l2 = 1e-6;
    double threshold = std::numeric_limits<double>::quiet_NaN();
    std::string rule_kind = "at-least";
    double top_fraction = 0.0;
    std::string reference_path;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--model", f.model_path, "model JSON file");
    cmd->add_option("--model2", f.model2_path,
                    "second model; scores multiply into a product system");
    cmd->add_option("--demo", f.demo, "builtin fixture: example1|example2|example3");
    cmd->add_option("--data", f.data_path, "CSV with instances (for --instance row index)");
    cmd->add_option("--target-column", f.target_column,
                    "target column to exclude from loaded CSVs");
    cmd->add_option("--instance", f.instance_text, "CSV row index or inline JSON object");
    cmd->add_option("--policy", f.policy_kind,
                    "counterfactual policy: zero|mean|mode|model-based");
    cmd->add_option("--policy-data", f.policy_data, "CSV backing mean/mode/model-based");
    cmd->add_option("--policy-population", f.policy_population,
                    "rows the policy is built from: all|default-decision");
    cmd->add_option("--policy-l2", f.policy_l2, "ridge strength for model-based policy");
    cmd->add_option("--threshold", f.threshold, "decision threshold on the score");
    cmd->add_option("--rule", f.rule_kind, "threshold comparison: at-least|above");
    cmd->add_option("--top-fraction", f.top_fraction,
                    "derive the threshold selecting this top fraction of --reference");
    cmd->add_option("--reference", f.reference_path, "CSV for --top-fraction");
}

struct ResolvedCase {
    cfx::SchemaPtr schema;
    DecisionSystem system;
    Instance instance;
    cfx::CounterfactualPolicy policy;
};

ResolvedCase resolve_case(const CommonFlags& f) {
    if (!f.demo.empty()) {
        int which = f.demo == "example1" ? 1 : f.demo == "example2" ? 2
                    : f.demo == "example3" ? 3 : 0;
        if (which == 0) throw cfx::Error("unknown demo: " + f.demo);
        auto d = cfx::make_demo(which);
        Instance instance = f.instance_text.empty()
                                ? d.instance
                                : instance_from_json(d.schema, f.instance_text);
        return ResolvedCase{d.schema, d.system, std::move(instance), d.policy};
    }

    if (f.model_path.empty()) throw cfx::Error("--model or --demo is required");
    auto model_file = cfx::load_model(f.model_path);
    cfx::ScoringFunction scorer = model_file.fn;
    if (!f.model2_path.empty()) {
        auto second = cfx::load_model(f.model2_path);
        if (second.feature_names != model_file.feature_names)
            throw cfx::Error("--model2 feature names differ from --model");
        scorer = cfx::ScoringFunction::product({model_file.fn, second.fn});
    }

    // schema: from --data / --policy-data when available, all-numeric otherwise
    cfx::SchemaPtr schema;
    std::optional<Dataset> data;
    if (!f.data_path.empty()) {
        data = project_dataset(
            cfx::load_csv(f.data_path, {}, f.target_column), model_file.feature_names);
        schema = data->schema;
    }
    std::optional<Dataset> policy_data;
    if (!f.policy_data.empty()) {
        policy_data = project_dataset(
            cfx::load_csv(f.policy_data, {}, f.target_column), model_file.feature_names);
        if (!schema) schema = policy_data->schema;
    }
    if (!schema) {
        std::vector<cfx::Feature> features;
        for (const auto& name : model_file.feature_names)
            features.push_back({name, cfx::FeatureKind::Numeric, {}});
        schema = cfx::make_schema(std::move(features));
    }

    // decision rule
    cfx::DecisionRule rule;
    rule.kind = f.rule_kind == "above" ? cfx::RuleKind::ThresholdAbove
                                       : cfx::RuleKind::ThresholdAtLeast;
    if (f.rule_kind != "above" && f.rule_kind != "at-least")
        throw cfx::Error("--rule must be at-least or above");
    bool have_threshold = !std::isnan(f.threshold);
    if (have_threshold == (f.top_fraction > 0.0))
        throw cfx::Error("exactly one of --threshold or --top-fraction is required");
    if (have_threshold) {
        rule.threshold = f.threshold;
    } else {
        if (f.reference_path.empty())
            throw cfx::Error("--top-fraction requires --reference");
        auto reference = project_dataset(
            cfx::load_csv(f.reference_path, {}, f.target_column),
            model_file.feature_names);
        rule.threshold = cfx::percentile_threshold(scorer, reference, f.top_fraction);
    }
    DecisionSystem system{std::move(scorer), rule, 2};

    // instance
    if (f.instance_text.empty()) throw cfx::Error("--instance is required");
    Instance instance = [&] {
        bool is_index = !f.instance_text.empty() &&
                        f.instance_text.find_first_not_of("0123456789") ==
                            std::string::npos;
        if (is_index) {
            if (!data) throw cfx::Error("--instance row index requires --data");
            auto row = static_cast<std::size_t>(std::stoull(f.instance_text));
            if (row >= data->size())
                throw cfx::Error("--instance row index out of range");
            return data->rows[row];
        }
        return instance_from_json(schema, f.instance_text);
    }();

    // policy
    auto policy = [&]() -> cfx::CounterfactualPolicy {
        if (f.policy_kind == "zero") return cfx::CounterfactualPolicy::zero(schema);
        if (!policy_data)
            throw cfx::Error("--policy " + f.policy_kind + " requires --policy-data");
        std::optional<std::vector<bool>> mask;
        if (f.policy_population == "default-decision") {
            std::vector<bool> m(policy_data->size());
            for (std::size_t r = 0; r < policy_data->size(); ++r)
                m[r] = system.decide(policy_data->rows[r]) == rule.default_class;
            mask = std::move(m);
        } else if (f.policy_population != "all") {
            throw cfx::Error("--policy-population must be all or default-decision");
        }
        if (f.policy_kind == "mean" || f.policy_kind == "mode") {
            auto stats = cfx::compute_stats(*policy_data, mask ? &*mask : nullptr);
            if (f.policy_kind == "mean")
                return cfx::build_stats_policy(stats, schema);
            // mode everywhere: only meaningful for binary/categorical schemas
            std::vector<cfx::FeatureImputer> rules(
                static_cast<std::size_t>(schema->size()));
            for (int j = 0; j < schema->size(); ++j) {
                rules[static_cast<std::size_t>(j)].rule = cfx::ImputeRule::Mode;
                rules[static_cast<std::size_t>(j)].value =
                    stats.cols[static_cast<std::size_t>(j)].mode;
            }
            return cfx::CounterfactualPolicy(schema, std::move(rules));
        }
        if (f.policy_kind == "model-based") {
            std::vector<bool> m = mask ? *mask : std::vector<bool>(policy_data->size(), true);
            return cfx::fit_model_based(*policy_data, m, f.policy_l2);
        }
        throw cfx::Error("unknown policy kind: " + f.policy_kind);
    }();

    return ResolvedCase{schema, std::move(system), std::move(instance), std::move(policy)};
}

std::string format_explanations(const std::vector<cfx::Explanation>& found,
                                const cfx::FeatureSchema& schema,
                                const std::string& format) {
    if (format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& e : found) arr.push_back(e.to_json(schema));
        nlohmann::json doc{{"count", found.size()}, {"explanations", arr}};
        return doc.dump(2) + "\n";
    }
    std::ostringstream out;
    if (format == "csv") {
        out << "features,score_before,score_after,decision_before,decision_after,cost,reduction\n";
        for (const auto& e : found) {
            std::string names;
            for (int j : e.set) {
                if (!names.empty()) names += '|';
                names += schema.at(j).name;
            }
            out << names << ',' << e.score_before << ',' << e.score_after << ','
                << e.decision_before << ',' << e.decision_after << ',' << e.cost << ','
                << e.reduction << '\n';
        }
        return out.str();
    }
    // table
    int i = 0;
    for (const auto& e : found) {
        out << "explanation " << ++i << ": ";
        for (int j : e.set)
            out << schema.at(j).name << " (" << e.substituted[0].first << ") ";
        out << " score " << e.score_before << " -> " << e.score_after << "\n";
    }
    if (found.empty()) out << "no explanations found\n";
    return out.str();
}

int cmd_train(const std::string& data_path, const std::string& target,
              const std::string& task, double l2, const std::string& model_out,
              bool standardize, double learning_rate, int max_epochs) {
    auto data = cfx::load_csv(data_path, {}, target);
    if (!data.target) throw cfx::Error("target column required");

    cfx::ScoringFunction model = cfx::ScoringFunction::linear({0.0}, 0.0);
    cfx::TrainReport report;
    if (task == "classify") {
        cfx::LogisticConfig cfg;
        cfg.standardize = standardize;
        cfg.learning_rate = learning_rate;
        cfg.max_epochs = max_epochs;
        std::tie(model, report) = cfx::train_logistic(data, l2, cfg);
    } else if (task == "regress") {
        std::tie(model, report) = cfx::train_linear(data, l2, standardize);
    } else {
        throw cfx::Error("--task must be classify or regress");
    }

    std::vector<std::string> names;
    for (int j = 0; j < data.schema->size(); ++j)
        names.push_back(data.schema->at(j).name);
    cfx::save_model(model, names, model_out);
    std::cout << "trained " << task << " model on " << data.size() << " rows: iterations="
              << report.iterations << " loss=" << report.final_loss
              << " grad_norm=" << report.gradient_norm
              << " converged=" << (report.converged ? "yes" : "no") << "\n"
              << "model written to " << model_out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("CFX_THREADS")) {
        int n = std::atoi(threads);
        if (n > 0) omp_set_num_threads(n);
    }

    CLI::App app{"counterfactual explanation engine"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::string output_path;
    std::string format = "json";
    app.add_option("--seed", seed, "seed for all randomized steps")->capture_default_str();
    app.add_option("--output", output_path, "write output to this file instead of stdout");
    app.add_option("--format", format, "json|csv|table")->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "fit a model on a CSV dataset");
    train->fallthrough();
    std::string train_data, train_target, train_task, model_out;
    double train_l2 = 1e-4, train_lr = 0.5;
    int train_epochs = 10000;
    bool train_standardize = false;
    train->add_option("--data", train_data)->required();
    train->add_option("--target", train_target)->required();
    train->add_option("--task", train_task, "classify|regress")->required();
    train->add_option("--l2", train_l2)->capture_default_str();
    train->add_option("--model-out", model_out)->required();
    train->add_flag("--standardize", train_standardize, "z-score features before fitting");
    train->add_option("--learning-rate", train_lr)->capture_default_str();
    train->add_option("--max-epochs", train_epochs)->capture_default_str();

    // explain
    auto* explain = app.add_subcommand("explain", "counterfactual explanations for a decision");
    explain->fallthrough();
    CommonFlags ef;
    add_common_flags(explain, ef);
    int max_iter = 30;
    int max_size = 0;
    bool oracle_mode = false;
    std::string costs_text;
    std::vector<std::string> exclude_names;
    explain->add_option("--max-iter", max_iter)->capture_default_str();
    explain->add_option("--costs", costs_text,
                        "JSON object feature->cost (\"inf\" allowed); switches to "
                        "score-per-cost ordering");
    explain->add_option("--exclude", exclude_names, "feature names never expanded");
    explain->add_flag("--all", oracle_mode, "exhaustive oracle over all candidate subsets");
    explain->add_option("--max-size", max_size, "oracle subset size bound (0 = all)");

    // shap
    auto* shap = app.add_subcommand("shap", "Shapley attributions for a decision or score");
    shap->fallthrough();
    CommonFlags sf;
    add_common_flags(shap, sf);
    std::string shap_target = "decision";
    bool shap_exact = false;
    std::uint64_t shap_samples = 4100;
    int shap_runs = 1, shap_k = 3;
    shap->add_option("--target", shap_target, "score|decision")->capture_default_str();
    shap->add_flag("--exact", shap_exact, "enumerate all joining orders");
    shap->add_option("--samples", shap_samples)->capture_default_str();
    shap->add_option("--runs", shap_runs)->capture_default_str();
    shap->add_option("--k", shap_k)->capture_default_str();

    // bench
    auto* bench = app.add_subcommand("bench", "run a named experiment harness");
    bench->fallthrough();
    std::string experiment;
    int bench_upq = 0, bench_features = 0, bench_reference = 0, bench_runs = 0;
    int bench_rows = 0, bench_explain = 0, bench_k = 0;
    std::uint64_t bench_samples = 0;
    bench->add_option("--experiment", experiment,
                      "examples|consistency|credit|targeting|donation")->required();
    bench->add_option("--users-per-quantile", bench_upq);
    bench->add_option("--features", bench_features);
    bench->add_option("--reference-rows", bench_reference);
    bench->add_option("--runs", bench_runs);
    bench->add_option("--samples", bench_samples);
    bench->add_option("--k", bench_k);
    bench->add_option("--rows", bench_rows);
    bench->add_option("--explain-count", bench_explain);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) return cmd_train(train_data, train_target, train_task, train_l2,
                                     model_out, train_standardize, train_lr, train_epochs);

        if (*explain) {
            auto rc = resolve_case(ef);
            std::vector<cfx::Explanation> found;
            if (oracle_mode) {
                found = cfx::oracle_all_explanations(rc.system, rc.instance, rc.policy,
                                                     max_size);
            } else {
                cfx::SearchConfig cfg;
                cfg.max_iteration = max_iter;
                if (!costs_text.empty()) {
                    auto costs_json = nlohmann::json::parse(costs_text);
                    cfg.costs.per_feature.assign(
                        static_cast<std::size_t>(rc.schema->size()), 1.0);
                    for (auto& [name, value] : costs_json.items()) {
                        int j = rc.schema->index_of(name);
                        if (j < 0) throw cfx::Error("unknown feature in --costs: " + name);
                        cfg.costs.per_feature[static_cast<std::size_t>(j)] =
                            value.is_string()
                                ? std::numeric_limits<double>::infinity()
                                : value.get<double>();
                    }
                    cfg.ordering = cfx::Ordering::ScorePerCostDescending;
                }
                if (!exclude_names.empty()) {
                    std::set<int> excluded;
                    for (const auto& name : exclude_names) {
                        int j = rc.schema->index_of(name);
                        if (j < 0) throw cfx::Error("unknown feature in --exclude: " + name);
                        excluded.insert(j);
                    }
                    cfg.allow_feature = [excluded](int j) { return !excluded.count(j); };
                }
                found = cfx::ebe_search(rc.system, rc.instance, rc.policy, cfg);
            }
            write_output(format_explanations(found, *rc.schema, format), output_path);
            return found.empty() ? kExitNoExplanations : kExitOk;
        }

        if (*shap) {
            auto rc = resolve_case(sf);
            cfx::AttributionTarget target =
                shap_target == "score"
                    ? cfx::AttributionTarget::score(rc.system.scorer)
                    : cfx::AttributionTarget::decision_indicator(rc.system);
            if (shap_target != "score" && shap_target != "decision")
                throw cfx::Error("--target must be score or decision");

            auto cf = rc.policy.values_for(rc.instance);
            std::vector<int> active_idx;
            for (int j = 0; j < rc.instance.size(); ++j)
                if (rc.instance[j] != cf[static_cast<std::size_t>(j)])
                    active_idx.push_back(j);
            FeatureSet active(std::move(active_idx));

            std::vector<cfx::ShapleyReport> reports;
            for (int r = 0; r < shap_runs; ++r) {
                std::uint64_t run_seed = cfx::mix64(seed + static_cast<std::uint64_t>(r));
                reports.push_back(shap_exact
                                      ? cfx::shapley_exact(target, rc.instance, rc.policy,
                                                           active)
                                      : cfx::shapley_sampled(target, rc.instance, rc.policy,
                                                             active, shap_samples,
                                                             run_seed));
            }

            if (format == "csv") {
                std::ostringstream out;
                out << "run,feature,value\n";
                for (std::size_t r = 0; r < reports.size(); ++r)
                    for (int j : reports[r].active)
                        out << r << ',' << rc.schema->at(j).name << ','
                            << reports[r].values[static_cast<std::size_t>(j)] << '\n';
                if (reports.size() >= 2)
                    out << "topk_matches,," << cfx::topk_matches(reports, shap_k) << '\n';
                write_output(out.str(), output_path);
            } else {
                nlohmann::json arr = nlohmann::json::array();
                for (const auto& r : reports) arr.push_back(r.to_json());
                nlohmann::json doc{{"reports", arr}};
                if (reports.size() >= 2)
                    doc["topk_matches"] = cfx::topk_matches(reports, shap_k);
                write_output(doc.dump(2) + "\n", output_path);
            }
            return kExitOk;
        }

        if (*bench) {
            cfx::BenchResult result;
            if (experiment == "examples") {
                result = cfx::repro_examples();
            } else if (experiment == "consistency") {
                cfx::ConsistencyConfig cfg;
                cfg.seed = seed;
                if (bench_upq > 0) cfg.users_per_quantile = bench_upq;
                if (bench_features > 0) cfg.feature_count = bench_features;
                if (bench_reference > 0) cfg.reference_rows = bench_reference;
                if (bench_runs > 0) cfg.runs = bench_runs;
                if (bench_samples > 0) cfg.sample_count = bench_samples;
                if (bench_k > 0) cfg.k = bench_k;
                result = cfx::bench_consistency(cfg);
            } else if (experiment == "credit" || experiment == "targeting" ||
                       experiment == "donation") {
                cfx::StudyConfig cfg;
                cfg.seed = seed;
                cfg.rows = bench_rows > 0 ? bench_rows
                           : bench_reference > 0 ? bench_reference : 0;
                cfg.explain_count = bench_explain;
                result = cfx::run_case_study(experiment, cfg);
            } else {
                std::cerr << "unknown experiment: " << experiment << "\n";
                return kExitUsage;
            }

            result.seed = result.seed ? result.seed : seed;
            std::string prefix = output_path.empty() ? ("cfx_" + experiment) : output_path;
            result.write_csv(prefix + ".csv");
            {
                std::ofstream out(prefix + ".json", std::ios::binary);
                out << result.to_json().dump(2) << '\n';
            }
            std::cout << "experiment " << experiment << ": "
                      << (result.passed ? "PASS" : "FAIL") << "; results in " << prefix
                      << ".csv / " << prefix << ".json\n";
            for (const auto& note : result.notes)
                if (note.rfind("FAIL", 0) == 0 || note.rfind("MISMATCH", 0) == 0)
                    std::cerr << note << "\n";
            return result.passed ? kExitOk : kExitAssertion;
        }
    } catch (const cfx::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const cfx::TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAssertion;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
