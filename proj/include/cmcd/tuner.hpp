#pragma once

// K-fold cross-validation grid search over learning rate x max_features x
// subsample, reporting mean accuracy, population std over folds, and mean
// training wall time per configuration. One seeded fold split is shared by
// the whole grid so configurations are compared on identical data.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cmcd/dataset.hpp"
#include "cmcd/gbt.hpp"
#include "cmcd/util.hpp"

namespace cmcd::tuner {

struct GridSpec {
    std::vector<double> learning_rates{0.2, 0.6, 1.0};
    std::vector<gbt::MaxFeatures> max_features{gbt::MaxFeatures::All, gbt::MaxFeatures::Log2};
    std::vector<double> subsamples{1.0, 0.2};
    int n_estimators = 500;
    int max_depth = 3;
    int k = 4;
    std::uint64_t seed = 0;
    int min_samples_leaf = 1;
    unsigned workers = 1;

    void validate() const {
        if (learning_rates.empty() || max_features.empty() || subsamples.empty())
            throw std::invalid_argument("grid dimensions must be non-empty");
        if (k < 2) throw std::invalid_argument("grid k must be >= 2");
    }

    std::size_t size() const {
        return learning_rates.size() * max_features.size() * subsamples.size();
    }

    // Grid order: learning rate outermost, then max_features, then subsample
    // (the conventional layout for this kind of tuning table).
    gbt::Hyperparams config(std::size_t flat_index) const {
        const std::size_t per_lr = max_features.size() * subsamples.size();
        gbt::Hyperparams hp;
        hp.learning_rate = learning_rates[flat_index / per_lr];
        hp.max_features = max_features[(flat_index % per_lr) / subsamples.size()];
        hp.subsample = subsamples[flat_index % subsamples.size()];
        hp.n_estimators = n_estimators;
        hp.max_depth = max_depth;
        hp.seed = seed;
        hp.min_samples_leaf = min_samples_leaf;
        return hp;
    }
};

struct CvCell {
    gbt::Hyperparams hp;
    std::vector<double> fold_accuracy;  // percent, per fold
    double mean_accuracy = 0.0;         // percent
    double std_deviation = 0.0;         // percent, population std over folds
    double mean_train_seconds = 0.0;
    bool flagged = false;               // e.g. a single-class training fold
    std::string flag_reason;
    std::uint64_t fold_hash = 0;        // hash of the fold assignment this cell saw

    // per-fold held-out predictions, in fold-row order (audit trail)
    std::vector<std::vector<std::uint8_t>> fold_predictions;
};

struct CvReport {
    std::vector<CvCell> cells;  // grid order
    data::FoldSplit split;
    int chosen = -1;            // index into cells, -1 if nothing usable
};

inline void finalize_cell(CvCell& cell) {
    const std::size_t k = cell.fold_accuracy.size();
    if (k == 0) return;
    double mean = 0.0;
    for (double a : cell.fold_accuracy) mean += a;
    mean /= double(k);
    double var = 0.0;
    for (double a : cell.fold_accuracy) var += (a - mean) * (a - mean);
    cell.mean_accuracy = mean;
    cell.std_deviation = std::sqrt(var / double(k));
}

// Lexicographic choice: max mean accuracy, then min std, then min train time.
inline int select_best(const CvReport& report) {
    int best = -1;
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        const auto& c = report.cells[i];
        if (c.flagged) continue;
        if (best < 0) {
            best = int(i);
            continue;
        }
        const auto& b = report.cells[std::size_t(best)];
        if (c.mean_accuracy > b.mean_accuracy ||
            (c.mean_accuracy == b.mean_accuracy && c.std_deviation < b.std_deviation) ||
            (c.mean_accuracy == b.mean_accuracy && c.std_deviation == b.std_deviation &&
             c.mean_train_seconds < b.mean_train_seconds))
            best = int(i);
    }
    return best;
}

struct GridSearchOptions {
    bool store_predictions = false;
    double decision_threshold = 0.5;
};

inline CvReport grid_search(const data::LabeledDataset& ds, const GridSpec& grid,
                            const GridSearchOptions& opt = {}) {
    grid.validate();
    CvReport report;
    report.split = data::kfold_split(ds.rows(), grid.k, grid.seed);
    report.cells.resize(grid.size());
    const std::uint64_t split_hash = report.split.hash();

    // Fold datasets are shared by every configuration.
    std::vector<data::LabeledDataset> train_sets(static_cast<std::size_t>(grid.k));
    std::vector<data::LabeledDataset> test_sets(static_cast<std::size_t>(grid.k));
    std::vector<std::vector<std::uint32_t>> test_rows(static_cast<std::size_t>(grid.k));
    for (int f = 0; f < grid.k; ++f) {
        train_sets[std::size_t(f)] = ds.subset(report.split.other_rows(f));
        test_rows[std::size_t(f)] = report.split.fold_rows(f);
        test_sets[std::size_t(f)] = ds.subset(test_rows[std::size_t(f)]);
    }

    auto run_cell = [&](std::size_t ci) {
        CvCell cell;
        cell.hp = grid.config(ci);
        cell.fold_hash = split_hash;
        double total_seconds = 0.0;
        for (int f = 0; f < grid.k && !cell.flagged; ++f) {
            try {
                const auto t0 = std::chrono::steady_clock::now();
                const auto model = gbt::train(train_sets[std::size_t(f)], cell.hp);
                const auto t1 = std::chrono::steady_clock::now();
                total_seconds += std::chrono::duration<double>(t1 - t0).count();

                const auto& test = test_sets[std::size_t(f)];
                std::size_t correct = 0;
                std::vector<std::uint8_t> preds;
                if (opt.store_predictions) preds.reserve(test.rows());
                for (std::size_t r = 0; r < test.rows(); ++r) {
                    const int pred = model.proba(test.row(r)) >= opt.decision_threshold ? 1 : 0;
                    correct += pred == int(test.labels[r]);
                    if (opt.store_predictions) preds.push_back(std::uint8_t(pred));
                }
                cell.fold_accuracy.push_back(100.0 * double(correct) / double(test.rows()));
                if (opt.store_predictions) cell.fold_predictions.push_back(std::move(preds));
            } catch (const std::exception& e) {
                cell.flagged = true;
                cell.flag_reason = "fold " + std::to_string(f) + ": " + e.what();
            }
        }
        if (!cell.flagged) {
            cell.mean_train_seconds = total_seconds / double(grid.k);
            finalize_cell(cell);
        }
        report.cells[ci] = std::move(cell);
    };

    if (grid.workers <= 1) {
        for (std::size_t ci = 0; ci < report.cells.size(); ++ci) run_cell(ci);
    } else {
        std::atomic<std::size_t> next{0};
        const unsigned n_workers = std::min<std::size_t>(grid.workers, report.cells.size());
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t ci = next.fetch_add(1); ci < report.cells.size();
                     ci = next.fetch_add(1))
                    run_cell(ci);
            });
        for (auto& t : pool) t.join();
    }

    report.chosen = select_best(report);
    return report;
}

// ---- report rendering ----

inline std::string report_csv(const CvReport& report) {
    std::string out =
        "learning_rate,max_features,subsample,mean_accuracy_pct,std_deviation_pct,"
        "mean_train_seconds,flagged,fold_accuracies\n";
    for (const auto& c : report.cells) {
        out += fmt_double(c.hp.learning_rate) + "," + gbt::max_features_name(c.hp.max_features) +
               "," + fmt_double(c.hp.subsample) + "," + fmt_double(c.mean_accuracy) + "," +
               fmt_double(c.std_deviation) + "," + fmt_double(c.mean_train_seconds) + "," +
               (c.flagged ? "1" : "0") + ",";
        for (std::size_t i = 0; i < c.fold_accuracy.size(); ++i) {
            if (i) out += ';';
            out += fmt_double(c.fold_accuracy[i]);
        }
        out += '\n';
    }
    return out;
}

// Aligned text table, one
// column per configuration, rows for mean accuracy / std / training time.
// Population std over folds is used (noted in the header).
inline std::string report_table(const CvReport& report) {
    const int w = 9;
    auto pad = [&](std::string s) {
        if (int(s.size()) < w) s.insert(s.begin(), std::size_t(w - int(s.size())), ' ');
        return s + " |";
    };
    auto num = [&](double v, const char* fmt) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), fmt, v);
        return pad(buf);
    };

    std::string head = "configurations: mean accuracy over k folds, population std, mean train time\n";
    std::string r0 = "Learning Rate     |", r1 = "Max Features      |", r2 = "Sub-Sample        |";
    std::string r3 = "Mean Accuracy (%) |", r4 = "Std Deviation (%) |", r5 = "Training Time (s) |";
    for (const auto& c : report.cells) {
        r0 += num(c.hp.learning_rate, "%g");
        r1 += pad(gbt::max_features_name(c.hp.max_features));
        r2 += num(c.hp.subsample, "%g");
        if (c.flagged) {
            r3 += pad("flagged");
            r4 += pad("-");
            r5 += pad("-");
        } else {
            r3 += num(c.mean_accuracy, "%.1f");
            r4 += num(c.std_deviation, "%.2f");
            r5 += num(c.mean_train_seconds, "%.1f");
        }
    }
    std::string out = head + r0 + "\n" + r1 + "\n" + r2 + "\n" + r3 + "\n" + r4 + "\n" + r5 + "\n";
    if (report.chosen >= 0) {
        const auto& c = report.cells[std::size_t(report.chosen)];
        char line[128];
        std::snprintf(line, sizeof(line), "chosen: learning_rate=%g max_features=%s subsample=%g\n",
                      c.hp.learning_rate, gbt::max_features_name(c.hp.max_features).c_str(),
                      c.hp.subsample);
        out += line;
    }
    return out;
}

}  // namespace cmcd::tuner
