#pragma once

// Supervised dataset assembly: zero-order-hold synchronization of the fast
// sensor stream with the slower image labels, deterministic k-fold splits,
// and a lossless CSV round trip.

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmcd/rng.hpp"
#include "cmcd/types.hpp"
#include "cmcd/util.hpp"

namespace cmcd::data {

struct LabeledDataset {
    std::size_t n_features = 0;
    std::vector<double> features;     // row-major, rows x n_features
    std::vector<double> timestamps;   // seconds, sorted within each scenario
    std::vector<std::uint8_t> labels; // 0 / 1

    // scenario id -> row count, in insertion order; plus free-form parameters
    std::vector<std::pair<std::string, std::size_t>> scenarios;
    std::map<std::string, std::string> params;

    std::size_t rows() const { return labels.size(); }

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * n_features, n_features};
    }

    void append_row(double t, std::span<const double> x, int label) {
        if (n_features == 0) n_features = x.size();
        if (x.size() != n_features) throw std::invalid_argument("feature dimension mismatch");
        if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
        features.insert(features.end(), x.begin(), x.end());
        timestamps.push_back(t);
        labels.push_back(std::uint8_t(label));
    }

    void append(const LabeledDataset& other) {
        if (rows() == 0 && n_features == 0) n_features = other.n_features;
        if (other.n_features != n_features) throw std::invalid_argument("feature dimension mismatch");
        features.insert(features.end(), other.features.begin(), other.features.end());
        timestamps.insert(timestamps.end(), other.timestamps.begin(), other.timestamps.end());
        labels.insert(labels.end(), other.labels.begin(), other.labels.end());
        scenarios.insert(scenarios.end(), other.scenarios.begin(), other.scenarios.end());
    }

    std::size_t positives() const {
        std::size_t c = 0;
        for (auto l : labels) c += l;
        return c;
    }

    LabeledDataset subset(std::span<const std::uint32_t> idx) const {
        LabeledDataset out;
        out.n_features = n_features;
        out.params = params;
        out.features.reserve(idx.size() * n_features);
        out.timestamps.reserve(idx.size());
        out.labels.reserve(idx.size());
        for (auto i : idx) {
            const auto r = row(i);
            out.features.insert(out.features.end(), r.begin(), r.end());
            out.timestamps.push_back(timestamps[i]);
            out.labels.push_back(labels[i]);
        }
        return out;
    }
};

struct SyncOptions {
    // Drop sensor rows within one camera period of a label transition.
    bool drop_transition_rows = false;
    double camera_period_s = 1.0 / 30.0;
};

// Aligns sensor frames with image labels by zero-order hold: each sensor
// frame takes the label of the most recent image at or before its timestamp.
// Sensor frames before the first image are dropped.
inline LabeledDataset synchronize(std::span<const SensorFrame> sensors,
                                  std::span<const std::pair<double, int>> image_labels,
                                  const SyncOptions& opt = {}) {
    if (image_labels.empty()) throw std::invalid_argument("synchronize: empty label stream");

    LabeledDataset out;
    std::size_t li = 0;
    for (const auto& f : sensors) {
        if (f.timestamp < image_labels.front().first) continue;
        while (li + 1 < image_labels.size() && image_labels[li + 1].first <= f.timestamp) ++li;

        if (opt.drop_transition_rows) {
            const bool after_change = li > 0 && image_labels[li].second != image_labels[li - 1].second &&
                                      f.timestamp - image_labels[li].first < opt.camera_period_s;
            const bool before_change = li + 1 < image_labels.size() &&
                                       image_labels[li + 1].second != image_labels[li].second &&
                                       image_labels[li + 1].first - f.timestamp < opt.camera_period_s;
            if (after_change || before_change) continue;
        }
        out.append_row(f.timestamp, f.values, image_labels[li].second);
    }
    return out;
}

// ---- k-fold split ----

struct FoldSplit {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<std::int32_t> fold_of_row;

    std::vector<std::uint32_t> fold_rows(int fold) const {
        std::vector<std::uint32_t> out;
        for (std::size_t i = 0; i < fold_of_row.size(); ++i)
            if (fold_of_row[i] == fold) out.push_back(std::uint32_t(i));
        return out;
    }
    std::vector<std::uint32_t> other_rows(int fold) const {
        std::vector<std::uint32_t> out;
        for (std::size_t i = 0; i < fold_of_row.size(); ++i)
            if (fold_of_row[i] != fold) out.push_back(std::uint32_t(i));
        return out;
    }
    std::uint64_t hash() const {
        return fnv1a64({reinterpret_cast<const char*>(fold_of_row.data()),
                        fold_of_row.size() * sizeof(std::int32_t)});
    }
};

// Seeded shuffle, then k contiguous chunks; fold sizes differ by at most 1.
inline FoldSplit kfold_split(std::size_t n_rows, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold: k must be >= 2");
    if (std::size_t(k) > n_rows) throw std::invalid_argument("kfold: k exceeds row count");

    std::vector<std::uint32_t> idx(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) idx[i] = std::uint32_t(i);
    Rng rng(seed);
    rng.shuffle(idx);

    FoldSplit split;
    split.k = k;
    split.seed = seed;
    split.fold_of_row.assign(n_rows, -1);
    const std::size_t base = n_rows / std::size_t(k);
    const std::size_t extra = n_rows % std::size_t(k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t size = base + (std::size_t(f) < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) split.fold_of_row[idx[pos++]] = f;
    }
    return split;
}

// ---- CSV round trip ----
// Header: `# n=9, scenario=<id>:<rows>;..., key=value, ...`
// Rows:   `timestamp,v1..vn,label`

inline std::string dataset_csv(const LabeledDataset& ds) {
    std::string out = "# n=" + std::to_string(ds.n_features);
    if (!ds.scenarios.empty()) {
        out += ", scenario=";
        bool first = true;
        for (const auto& [id, count] : ds.scenarios) {
            if (!first) out += ';';
            out += id + ":" + std::to_string(count);
            first = false;
        }
    }
    out += ", positives=" + std::to_string(ds.positives());
    out += ", negatives=" + std::to_string(ds.rows() - ds.positives());
    for (const auto& [k, v] : ds.params) out += ", " + k + "=" + v;
    out += '\n';

    out += "timestamp";
    for (std::size_t i = 1; i <= ds.n_features; ++i) out += ",v" + std::to_string(i);
    out += ",label\n";

    for (std::size_t r = 0; r < ds.rows(); ++r) {
        out += fmt_double(ds.timestamps[r]);
        const auto row = ds.row(r);
        for (double v : row) {
            out += ',';
            out += fmt_double(v);
        }
        out += ',';
        out += char('0' + ds.labels[r]);
        out += '\n';
    }
    return out;
}

inline LabeledDataset parse_dataset_csv(const std::string& text) {
    LabeledDataset ds;
    std::size_t line_no = 0;
    bool meta_seen = false, header_seen = false;
    std::size_t declared_positives = 0, declared_negatives = 0;
    bool has_declared_counts = false;

    for (std::string_view raw : split(text, '\n')) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty()) continue;

        if (!meta_seen && line.starts_with("#")) {
            meta_seen = true;
            for (auto field : split(line.substr(1), ',')) {
                field = trim(field);
                const auto eq = field.find('=');
                if (eq == std::string_view::npos) continue;
                const std::string_view key = trim(field.substr(0, eq));
                const std::string_view val = trim(field.substr(eq + 1));
                if (key == "n") ds.n_features = std::size_t(parse_int(val));
                else if (key == "scenario") {
                    for (auto part : split(val, ';')) {
                        const auto colon = part.rfind(':');
                        if (colon == std::string_view::npos)
                            ds.scenarios.emplace_back(std::string(part), 0);
                        else
                            ds.scenarios.emplace_back(std::string(part.substr(0, colon)),
                                                      std::size_t(parse_int(part.substr(colon + 1))));
                    }
                } else if (key == "positives") {
                    declared_positives = std::size_t(parse_int(val));
                    has_declared_counts = true;
                } else if (key == "negatives") {
                    declared_negatives = std::size_t(parse_int(val));
                } else {
                    ds.params[std::string(key)] = std::string(val);
                }
            }
            continue;
        }
        if (!header_seen && line.starts_with("timestamp")) {
            header_seen = true;
            continue;
        }

        const auto cols = split(line, ',');
        if (ds.n_features == 0 && cols.size() >= 3) ds.n_features = cols.size() - 2;
        if (cols.size() != ds.n_features + 2)
            throw std::runtime_error("dataset CSV line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(ds.n_features + 2) + " columns, got " +
                                     std::to_string(cols.size()));
        try {
            ds.timestamps.push_back(parse_double(cols[0]));
            for (std::size_t i = 1; i + 1 < cols.size(); ++i)
                ds.features.push_back(parse_double(cols[i]));
            const long long label = parse_int(cols.back());
            if (label != 0 && label != 1) throw std::runtime_error("label must be 0 or 1");
            ds.labels.push_back(std::uint8_t(label));
        } catch (const std::exception& e) {
            throw std::runtime_error("dataset CSV line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    if (has_declared_counts) {
        if (declared_positives != ds.positives() ||
            declared_negatives != ds.rows() - ds.positives())
            throw std::runtime_error("dataset CSV: class counts in header do not match rows");
    }
    return ds;
}

}  // namespace cmcd::data
