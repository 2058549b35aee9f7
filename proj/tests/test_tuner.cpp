#include <doctest.h>

#include "cmcd/tuner.hpp"

#include "oracles.hpp"

using namespace cmcd;

namespace {

// trivially separable data
data::LabeledDataset separable(std::size_t n) {
    data::LabeledDataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = i % 2;
        ds.append_row(double(i), std::vector<double>{y ? 2.0 + double(i % 7) : -2.0 - double(i % 5)},
                      y);
    }
    return ds;
}

// Reference 4-fold tuning results, entered as a fixture:
// columns lr {0.2, 0.6, 1} x max_features {all, log2} x subsample {1.0, 0.2}.
tuner::CvReport reference_table_fixture() {
    const double means[12] = {97.8, 97.8, 97.7, 97.5, 97.7, 98.2, 98.6, 98.0, 97.0, 93.5, 82.1, 97.9};
    const double stds[12] = {0.05, 0.07, 0.07, 0.03, 1.48, 0.14, 0.04, 0.20, 2.06, 6.95, 18.0, 0.23};
    const double times[12] = {108.0, 65.3, 47.5, 40.4, 94.7, 64.2, 46.1, 40.0, 77.9, 64.5, 41.9, 37.9};

    tuner::GridSpec grid;  // default grid matches the table layout
    tuner::CvReport report;
    for (std::size_t i = 0; i < 12; ++i) {
        tuner::CvCell cell;
        cell.hp = grid.config(i);
        cell.mean_accuracy = means[i];
        cell.std_deviation = stds[i];
        cell.mean_train_seconds = times[i];
        report.cells.push_back(std::move(cell));
    }
    return report;
}

}  // namespace

TEST_CASE("grid order is lr x max_features x subsample") {
    tuner::GridSpec grid;
    CHECK(grid.size() == 12);
    CHECK(grid.config(0).learning_rate == 0.2);
    CHECK(grid.config(0).max_features == gbt::MaxFeatures::All);
    CHECK(grid.config(0).subsample == 1.0);
    CHECK(grid.config(1).subsample == 0.2);
    CHECK(grid.config(2).max_features == gbt::MaxFeatures::Log2);
    CHECK(grid.config(6).learning_rate == 0.6);
    CHECK(grid.config(6).max_features == gbt::MaxFeatures::Log2);
    CHECK(grid.config(6).subsample == 1.0);
    CHECK(grid.config(11).learning_rate == 1.0);
}

TEST_CASE("single configuration on separable data: 100% accuracy, zero std") {
    tuner::GridSpec grid;
    grid.learning_rates = {0.5};
    grid.max_features = {gbt::MaxFeatures::All};
    grid.subsamples = {1.0};
    grid.n_estimators = 10;
    grid.max_depth = 1;
    grid.k = 2;
    grid.seed = 3;

    const auto report = tuner::grid_search(separable(40), grid);
    REQUIRE(report.cells.size() == 1);
    CHECK_FALSE(report.cells[0].flagged);
    CHECK(report.cells[0].mean_accuracy == doctest::Approx(100.0));
    CHECK(report.cells[0].std_deviation == doctest::Approx(0.0));
    CHECK(report.chosen == 0);
}

TEST_CASE("fold split is shared across configurations (hash check)") {
    tuner::GridSpec grid;
    grid.learning_rates = {0.3, 0.9};
    grid.max_features = {gbt::MaxFeatures::All};
    grid.subsamples = {1.0, 0.5};
    grid.n_estimators = 5;
    grid.max_depth = 2;
    grid.k = 3;
    grid.seed = 17;

    const auto report = tuner::grid_search(separable(60), grid);
    REQUIRE(report.cells.size() == 4);
    const auto expected_hash = report.split.hash();
    for (const auto& c : report.cells) CHECK(c.fold_hash == expected_hash);

    // identical split for an identical seed on a rerun
    const auto again = tuner::grid_search(separable(60), grid);
    CHECK(again.split.hash() == expected_hash);
}

TEST_CASE("report accuracy is recomputable from stored per-fold predictions") {
    tuner::GridSpec grid;
    grid.learning_rates = {0.6};
    grid.max_features = {gbt::MaxFeatures::All};
    grid.subsamples = {1.0};
    grid.n_estimators = 8;
    grid.max_depth = 2;
    grid.k = 4;
    grid.seed = 5;

    Rng rng(64);
    data::LabeledDataset ds;
    for (int i = 0; i < 120; ++i) {
        std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        ds.append_row(i, x, x[0] + 0.3 * rng.normal() > 0 ? 1 : 0);
    }

    tuner::GridSearchOptions opt;
    opt.store_predictions = true;
    const auto report = tuner::grid_search(ds, grid, opt);
    REQUIRE(report.cells.size() == 1);
    const auto& cell = report.cells[0];
    REQUIRE(cell.fold_predictions.size() == 4);

    for (int f = 0; f < 4; ++f) {
        const auto rows = report.split.fold_rows(f);
        const auto& preds = cell.fold_predictions[std::size_t(f)];
        REQUIRE(preds.size() == rows.size());
        std::size_t correct = 0;
        for (std::size_t i = 0; i < rows.size(); ++i)
            correct += preds[i] == ds.labels[rows[i]];
        const double acc = 100.0 * double(correct) / double(rows.size());
        CHECK(acc == doctest::Approx(cell.fold_accuracy[std::size_t(f)]).epsilon(1e-12));
    }
}

TEST_CASE("single-class training fold is flagged, not silently skipped") {
    data::LabeledDataset ds;
    ds.append_row(0.0, std::vector<double>{0.0}, 0);
    ds.append_row(1.0, std::vector<double>{1.0}, 1);

    tuner::GridSpec grid;
    grid.learning_rates = {0.5};
    grid.max_features = {gbt::MaxFeatures::All};
    grid.subsamples = {1.0};
    grid.n_estimators = 3;
    grid.max_depth = 1;
    grid.k = 2;  // each training fold has a single row -> single class

    const auto report = tuner::grid_search(ds, grid);
    REQUIRE(report.cells.size() == 1);
    CHECK(report.cells[0].flagged);
    CHECK_FALSE(report.cells[0].flag_reason.empty());
    CHECK(report.chosen == -1);
}

TEST_CASE("select_best tie-breaking") {
    tuner::CvReport report;
    tuner::CvCell a, b;
    a.mean_accuracy = 98.0;
    a.std_deviation = 0.2;
    a.mean_train_seconds = 10.0;
    b.mean_accuracy = 98.0;
    b.std_deviation = 0.1;
    b.mean_train_seconds = 50.0;
    report.cells = {a, b};
    CHECK(tuner::select_best(report) == 1);  // lower std wins the tie

    report.cells[1].std_deviation = 0.2;
    report.cells[1].mean_train_seconds = 5.0;
    CHECK(tuner::select_best(report) == 1);  // then lower training time

    report.cells = {a};
    CHECK(tuner::select_best(report) == 0);  // single configuration: itself
}

TEST_CASE("select_best on the reference table picks (0.6, log2, 1.0)") {
    const auto report = reference_table_fixture();
    const int best = tuner::select_best(report);
    REQUIRE(best >= 0);
    const auto& hp = report.cells[std::size_t(best)].hp;
    CHECK(hp.learning_rate == 0.6);
    CHECK(hp.max_features == gbt::MaxFeatures::Log2);
    CHECK(hp.subsample == 1.0);
}

TEST_CASE("report renders 12 configurations and a CSV round trip") {
    auto report = reference_table_fixture();
    report.chosen = tuner::select_best(report);

    const auto table = tuner::report_table(report);
    CHECK(table.find("Mean Accuracy") != std::string::npos);
    CHECK(table.find("98.6") != std::string::npos);
    CHECK(table.find("chosen: learning_rate=0.6 max_features=log2 subsample=1") != std::string::npos);

    const auto csv = tuner::report_csv(report);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 13);  // header + 12 cells
}
