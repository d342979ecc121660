#include "cfx/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "cfx/rng.hpp"

namespace cfx {
namespace {

// one RFC-4180 record; returns false at end of input
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int ch;
    while ((ch = in.get()) != EOF) {
        any = true;
        char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get();
            fields.push_back(std::move(field));
            return true;
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(c);
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

bool parse_real(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

Dataset load_csv(const std::string& path,
                 const std::map<std::string, FeatureKind>& hints,
                 const std::string& target_name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open file");

    std::vector<std::string> header;
    if (!read_record(in, header) || header.empty())
        throw DataError(path + ":1: missing header row");
    {
        std::unordered_map<std::string, int> seen;
        for (const auto& name : header) {
            if (name.empty()) throw DataError(path + ":1: empty header name");
            if (!seen.emplace(name, 1).second)
                throw DataError(path + ":1: duplicate header name: " + name);
        }
    }

    int target_col = -1;
    if (!target_name.empty()) {
        auto it = std::find(header.begin(), header.end(), target_name);
        if (it == header.end())
            throw DataError(path + ": target column not found: " + target_name);
        target_col = static_cast<int>(it - header.begin());
    }

    const std::size_t ncols = header.size();
    std::vector<std::vector<std::string>> cells(ncols);
    std::vector<std::string> record;
    std::size_t line = 1;
    while (read_record(in, record)) {
        ++line;
        if (record.size() == 1 && record[0].empty()) continue;  // trailing newline
        if (record.size() != ncols)
            throw DataError(path + ":" + std::to_string(line) + ": expected " +
                            std::to_string(ncols) + " fields, got " +
                            std::to_string(record.size()));
        for (std::size_t c = 0; c < ncols; ++c) {
            if (record[c].empty())
                throw DataError(path + ":" + std::to_string(line) +
                                ": missing value in column " + header[c]);
            cells[c].push_back(std::move(record[c]));
        }
    }
    const std::size_t nrows = cells[0].size();
    if (nrows == 0) throw DataError(path + ": no data rows");

    // per-column kind: hint wins, otherwise inferred
    std::vector<FeatureKind> kinds(ncols, FeatureKind::Numeric);
    for (std::size_t c = 0; c < ncols; ++c) {
        auto hint = hints.find(header[c]);
        if (hint != hints.end()) {
            kinds[c] = hint->second;
            continue;
        }
        bool all_real = true;
        bool all_01 = true;
        double v = 0.0;
        for (const auto& s : cells[c]) {
            if (!parse_real(s, v)) {
                all_real = false;
                break;
            }
            if (v != 0.0 && v != 1.0) all_01 = false;
        }
        kinds[c] = !all_real       ? FeatureKind::Categorical
                   : all_01        ? FeatureKind::Binary
                                   : FeatureKind::Numeric;
    }

    std::vector<Feature> features;
    std::vector<int> feature_cols;
    for (std::size_t c = 0; c < ncols; ++c) {
        if (static_cast<int>(c) == target_col) continue;
        Feature f;
        f.name = header[c];
        f.kind = kinds[c];
        if (f.kind == FeatureKind::Categorical) {
            // vocabulary in first-appearance order
            std::unordered_map<std::string, int> seen;
            for (const auto& s : cells[c])
                if (seen.emplace(s, 1).second) f.vocab.push_back(s);
        }
        features.push_back(std::move(f));
        feature_cols.push_back(static_cast<int>(c));
    }
    if (features.empty()) throw DataError(path + ": no feature columns");
    auto schema = make_schema(std::move(features));

    Dataset out;
    out.schema = schema;
    out.rows.reserve(nrows);
    for (std::size_t r = 0; r < nrows; ++r) {
        std::vector<double> values(feature_cols.size());
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            const auto& cell = cells[static_cast<std::size_t>(feature_cols[j])][r];
            const auto& f = schema->at(static_cast<int>(j));
            if (f.kind == FeatureKind::Categorical) {
                int id = schema->vocab_id(static_cast<int>(j), cell);
                if (id < 0)
                    throw DataError(path + ": value '" + cell +
                                    "' outside vocabulary of " + f.name);
                values[j] = static_cast<double>(id);
            } else {
                double v = 0.0;
                if (!parse_real(cell, v))
                    throw DataError(path + ":" + std::to_string(r + 2) +
                                    ": cannot parse '" + cell + "' in " +
                                    std::string(kind_name(f.kind)) + " column " +
                                    f.name);
                if (!schema->value_ok(static_cast<int>(j), v))
                    throw DataError(path + ":" + std::to_string(r + 2) + ": value " +
                                    cell + " does not conform to " +
                                    std::string(kind_name(f.kind)) + " column " +
                                    f.name);
                values[j] = v;
            }
        }
        out.rows.emplace_back(schema, std::move(values));
    }

    if (target_col >= 0) {
        std::vector<double> target(nrows);
        for (std::size_t r = 0; r < nrows; ++r) {
            const auto& cell = cells[static_cast<std::size_t>(target_col)][r];
            double v = 0.0;
            if (!parse_real(cell, v))
                throw DataError(path + ":" + std::to_string(r + 2) +
                                ": cannot parse target value '" + cell + "'");
            target[r] = v;
        }
        out.target = std::move(target);
        out.target_name = target_name;
    }
    return out;
}

void save_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path + ": cannot open for writing");
    const auto& schema = *dataset.schema;
    for (int j = 0; j < schema.size(); ++j) {
        if (j) out << ',';
        out << quote_if_needed(schema.at(j).name);
    }
    if (dataset.target) out << ',' << quote_if_needed(dataset.target_name);
    out << '\n';
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        for (int j = 0; j < schema.size(); ++j) {
            if (j) out << ',';
            double v = dataset.rows[r][j];
            if (schema.at(j).kind == FeatureKind::Categorical)
                out << quote_if_needed(schema.at(j).vocab[static_cast<std::size_t>(v)]);
            else
                out << format_double(v);
        }
        if (dataset.target) out << ',' << format_double((*dataset.target)[r]);
        out << '\n';
    }
}

ColumnStats compute_stats(const Dataset& dataset, const std::vector<bool>* mask) {
    if (mask && mask->size() != dataset.size())
        throw Error("stats mask length does not match row count");
    std::size_t selected = 0;
    if (mask) {
        for (bool b : *mask) selected += b ? 1 : 0;
    } else {
        selected = dataset.size();
    }
    if (selected == 0) throw Error("stats over an empty row subset");

    const auto& schema = *dataset.schema;
    ColumnStats stats;
    stats.schema = dataset.schema;
    stats.cols.resize(static_cast<std::size_t>(schema.size()));

    for (int j = 0; j < schema.size(); ++j) {
        auto& e = stats.cols[static_cast<std::size_t>(j)];
        e.count = static_cast<std::int64_t>(selected);
        e.min = std::numeric_limits<double>::infinity();
        e.max = -std::numeric_limits<double>::infinity();
        double sum = 0.0, comp = 0.0;  // Kahan
        std::unordered_map<double, std::int64_t> freq;
        for (std::size_t r = 0; r < dataset.size(); ++r) {
            if (mask && !(*mask)[r]) continue;
            double v = dataset.rows[r][j];
            double y = v - comp;
            double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            e.min = std::min(e.min, v);
            e.max = std::max(e.max, v);
            if (v != 0.0) ++e.nonzero_count;
            if (schema.at(j).kind != FeatureKind::Numeric) ++freq[v];
        }
        e.mean = sum / static_cast<double>(selected);
        if (schema.at(j).kind != FeatureKind::Numeric) {
            double best = 0.0;
            std::int64_t best_count = -1;
            for (auto& [value, count] : freq)
                if (count > best_count || (count == best_count && value < best)) {
                    best = value;
                    best_count = count;
                }
            e.mode = best;
        }
    }
    return stats;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw Error("train fraction must lie in (0,1)");
    if (dataset.size() < 2) throw Error("split requires at least 2 rows");

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);

    auto n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(dataset.size()) * train_fraction));

    auto take = [&](std::size_t from, std::size_t to) {
        Dataset part;
        part.schema = dataset.schema;
        part.target_name = dataset.target_name;
        if (dataset.target) part.target = std::vector<double>{};
        for (std::size_t i = from; i < to; ++i) {
            part.rows.push_back(dataset.rows[order[i]]);
            if (dataset.target) part.target->push_back((*dataset.target)[order[i]]);
        }
        return part;
    };
    return {take(0, n_train), take(n_train, dataset.size())};
}

}  // namespace cfx
