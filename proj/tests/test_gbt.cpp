#include <doctest.h>

#include <cmath>

#include "cmcd/gbt.hpp"

#include "oracles.hpp"

using namespace cmcd;

namespace {

data::LabeledDataset make_dataset(const std::vector<std::vector<double>>& x,
                                  const std::vector<int>& y) {
    data::LabeledDataset ds;
    for (std::size_t i = 0; i < x.size(); ++i) ds.append_row(double(i), x[i], y[i]);
    return ds;
}

// random binary dataset with a learnable pattern plus noise
data::LabeledDataset random_dataset(std::size_t n, std::size_t dims, Rng& rng) {
    data::LabeledDataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(dims);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        const int y = (x[0] + 0.3 * x[dims / 2] + 0.2 * rng.normal()) > 0.0 ? 1 : 0;
        ds.append_row(double(i), x, y);
    }
    return ds;
}

}  // namespace

TEST_CASE("two-point fixture: hand-derived Newton step") {
    const auto ds = make_dataset({{0.0}, {1.0}}, {0, 1});
    gbt::Hyperparams hp;
    hp.n_estimators = 1;
    hp.learning_rate = 1.0;
    hp.max_depth = 1;
    hp.subsample = 1.0;

    const auto model = gbt::train(ds, hp);
    CHECK(model.initial_margin == 0.0);
    REQUIRE(model.trees.size() == 1);
    const auto& nodes = model.trees[0].nodes;
    REQUIRE(nodes.size() == 3);
    CHECK(nodes[0].feature == 0);
    CHECK(nodes[0].threshold == doctest::Approx(0.5).epsilon(1e-15));
    // residuals at F0=0 are (-1, +1); leaf Newton step gives -1 and +1
    CHECK(nodes[std::size_t(nodes[0].left)].value == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(nodes[std::size_t(nodes[0].right)].value == doctest::Approx(1.0).epsilon(1e-12));

    // p(x=0) = 1/(1+e^2), p(x=1) = 1/(1+e^-2)
    const double x0[] = {0.0}, x1[] = {1.0};
    CHECK(model.proba(x0) == doctest::Approx(0.11920292202211755).epsilon(1e-10));
    CHECK(model.proba(x1) == doctest::Approx(0.8807970779778823).epsilon(1e-10));
}

TEST_CASE("identical features with mixed labels: prior-only model") {
    const auto ds = make_dataset({{3.0, 3.0}, {3.0, 3.0}, {3.0, 3.0}, {3.0, 3.0}},
                                 {1, 0, 1, 0});
    gbt::Hyperparams hp;
    hp.n_estimators = 5;
    hp.learning_rate = 1.0;
    hp.max_depth = 3;
    const auto model = gbt::train(ds, hp);
    CHECK(model.initial_margin == 0.0);  // balanced classes
    for (const auto& t : model.trees) {
        REQUIRE(t.nodes.size() == 1);  // no split improves squared error
        CHECK(t.nodes[0].value == doctest::Approx(0.0).epsilon(1e-12));
    }
    const double x[] = {3.0, 3.0};
    CHECK(model.proba(x) == doctest::Approx(0.5).epsilon(1e-12));  // class prior
}

TEST_CASE("imbalanced prior: margin matches the closed form") {
    const auto ds = make_dataset({{1.0}, {1.0}, {1.0}, {1.0}}, {1, 1, 1, 0});
    gbt::Hyperparams hp;
    hp.n_estimators = 1;
    const auto model = gbt::train(ds, hp);
    const double ybar = 0.5;  // mean of {+1,+1,+1,-1}
    CHECK(model.initial_margin == doctest::Approx(0.5 * std::log((1 + ybar) / (1 - ybar))).epsilon(1e-15));
    // constant feature: tree is a single leaf whose Newton step is ~0
    const double x[] = {1.0};
    CHECK(model.proba(x) == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("train input validation") {
    gbt::Hyperparams hp;
    CHECK_THROWS_AS(gbt::train(data::LabeledDataset{}, hp), std::invalid_argument);
    CHECK_THROWS_AS(gbt::train(make_dataset({{1.0}, {2.0}}, {1, 1}), hp), std::invalid_argument);

    auto bad = make_dataset({{1.0}, {2.0}}, {0, 1});
    bad.features[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(gbt::train(bad, hp), std::invalid_argument);

    gbt::Hyperparams bad_hp;
    bad_hp.learning_rate = 0.0;
    CHECK_THROWS_AS(bad_hp.validate(), std::invalid_argument);
    bad_hp = {};
    bad_hp.subsample = 1.5;
    CHECK_THROWS_AS(bad_hp.validate(), std::invalid_argument);
}

TEST_CASE("best_split examples") {
    const std::vector<std::vector<double>> columns = {{1.0, 2.0, 3.0, 4.0}};
    const std::vector<std::uint32_t> rows = {0, 1, 2, 3};
    const std::vector<double> residuals = {-1.0, -1.0, 1.0, 1.0};
    const std::vector<int> all_feats = {0};

    SUBCASE("full variance elimination at the midpoint") {
        const auto split = gbt::best_split(columns, rows, residuals, all_feats);
        REQUIRE(split.has_value());
        CHECK(split->feature == 0);
        CHECK(split->threshold == doctest::Approx(2.5).epsilon(1e-15));
        CHECK(split->gain == doctest::Approx(4.0).epsilon(1e-12));
    }

    SUBCASE("constant feature: no valid split") {
        const std::vector<std::vector<double>> flat = {{7.0, 7.0, 7.0, 7.0}};
        CHECK_FALSE(gbt::best_split(flat, rows, residuals, all_feats).has_value());
    }

    SUBCASE("equal gain on two features: lower index wins") {
        const std::vector<std::vector<double>> dup = {{1.0, 2.0, 3.0, 4.0}, {1.0, 2.0, 3.0, 4.0}};
        const std::vector<int> both = {0, 1};
        const auto split = gbt::best_split(dup, rows, residuals, both);
        REQUIRE(split.has_value());
        CHECK(split->feature == 0);
    }

    SUBCASE("min_samples_leaf constrains candidates") {
        const auto split = gbt::best_split(columns, rows, residuals, all_feats, 2);
        REQUIRE(split.has_value());
        CHECK(split->threshold == doctest::Approx(2.5));
        CHECK_FALSE(gbt::best_split(columns, rows, residuals, all_feats, 3).has_value());
    }
}

TEST_CASE("predict_margin / predict_proba") {
    gbt::GbtModel model;
    model.n_features = 2;
    CHECK(gbt::GbtModel::margin_to_proba(0.0) == 0.5);

    const double x[] = {0.3, -0.4};
    CHECK(model.proba(x) == 0.5);  // no trees, balanced prior F0 = 0

    const double bad[] = {1.0};
    CHECK_THROWS_AS(model.margin(bad), std::invalid_argument);

    // values stay strictly inside (0,1) even at extreme margins
    CHECK(gbt::GbtModel::margin_to_proba(500.0) < 1.0);
    CHECK(gbt::GbtModel::margin_to_proba(-500.0) > 0.0);
    // strictly monotone over the numerically resolvable range
    double prev = 0.0;
    for (double f = -15.0; f <= 15.0; f += 0.25) {
        const double p = gbt::GbtModel::margin_to_proba(f);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
        if (f > -15.0) CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("margins match the brute-force reference to 1e-10") {
    Rng rng(501);
    for (int instance = 0; instance < 12; ++instance) {
        const std::size_t n = 8 + rng.below(57);   // <= 64
        const std::size_t dims = 1 + rng.below(3); // <= 3
        std::vector<std::vector<double>> x(n, std::vector<double>(dims));
        std::vector<int> y(n);
        bool both = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : x[i]) v = rng.uniform(-2.0, 2.0);
            y[i] = int(rng.below(2));
            if (i && y[i] != y[0]) both = true;
        }
        if (!both) y[0] ^= 1;

        gbt::Hyperparams hp;
        hp.n_estimators = 1 + int(rng.below(8));
        hp.learning_rate = 0.1 + 0.9 * rng.uniform01();
        hp.max_depth = 1 + int(rng.below(2));
        hp.subsample = 1.0;
        hp.max_features = gbt::MaxFeatures::All;

        const auto model = gbt::train(make_dataset(x, y), hp);
        const auto ref = oracle::ref_train(x, y, hp.n_estimators, hp.learning_rate, hp.max_depth);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(model.margin(x[i]) - ref.margin(x[i])) <= 1e-10);
    }
}

TEST_CASE("pseudo-residual equals the negative loss gradient (finite differences)") {
    Rng rng(88);
    const double h = 1e-6;
    for (int trial = 0; trial < 200; ++trial) {
        const double yt = rng.below(2) ? 1.0 : -1.0;
        const double f = rng.uniform(-4.0, 4.0);
        const double r = gbt::detail::pseudo_residual(yt, f);
        auto loss = [&](double m) { return gbt::detail::log1pexp(-2.0 * yt * m); };
        const double fd = -(loss(f + h) - loss(f - h)) / (2.0 * h);
        CHECK(std::abs(r - fd) <= 1e-6);
    }
}

TEST_CASE("training deviance is non-increasing with subsample=1, lr<=1") {
    Rng rng(7);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
        Rng data_rng(seed * 31);
        const auto ds = random_dataset(120, 4, data_rng);
        gbt::Hyperparams hp;
        hp.n_estimators = 40;
        hp.learning_rate = seed % 2 ? 1.0 : 0.5;
        hp.max_depth = 2;
        hp.seed = seed;
        gbt::TrainLog log;
        gbt::train(ds, hp, &log);
        REQUIRE(log.train_deviance.size() == 41);
        for (std::size_t m = 1; m < log.train_deviance.size(); ++m)
            CHECK(log.train_deviance[m] <= log.train_deviance[m - 1] + 1e-12);
    }
    (void)rng;
}

TEST_CASE("staged_eval: strictly decreasing train deviance on separable data") {
    // perfectly separable toy data
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
        x.push_back({double(i)});
        y.push_back(i < 10 ? 0 : 1);
    }
    const auto ds = make_dataset(x, y);
    gbt::Hyperparams hp;
    hp.n_estimators = 10;
    hp.learning_rate = 0.5;
    hp.max_depth = 1;
    const auto model = gbt::train(ds, hp);

    const auto staged = gbt::staged_eval(model, ds);
    REQUIRE(staged.deviance.size() == 11);
    for (std::size_t m = 1; m < staged.deviance.size(); ++m)
        CHECK(staged.deviance[m] < staged.deviance[m - 1]);
    CHECK(staged.accuracy.back() == 1.0);

    // zero-tree model: closed-form deviance log(1 + exp(-2 y F0)) averaged
    gbt::GbtModel prior;
    prior.n_features = 1;
    prior.initial_margin = model.initial_margin;
    const auto base = gbt::staged_eval(prior, ds);
    REQUIRE(base.deviance.size() == 1);
    double expected = 0.0;
    for (int label : y) {
        const double yt = label ? 1.0 : -1.0;
        expected += std::log(1.0 + std::exp(-2.0 * yt * model.initial_margin));
    }
    expected /= double(y.size());
    CHECK(base.deviance[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("determinism and seed sensitivity") {
    Rng data_rng(404);
    const auto ds = random_dataset(200, 9, data_rng);

    gbt::Hyperparams hp;
    hp.n_estimators = 15;
    hp.learning_rate = 0.6;
    hp.max_depth = 3;
    hp.subsample = 0.5;
    hp.max_features = gbt::MaxFeatures::Log2;
    hp.seed = 9;

    SUBCASE("same data + hyperparams: byte-identical serialized model") {
        const auto a = gbt::serialize_model(gbt::train(ds, hp));
        const auto b = gbt::serialize_model(gbt::train(ds, hp));
        CHECK(a == b);
    }

    SUBCASE("all features + full sample: result independent of the seed") {
        auto full = hp;
        full.subsample = 1.0;
        full.max_features = gbt::MaxFeatures::All;
        auto other = full;
        other.seed = full.seed + 1234;
        CHECK(gbt::serialize_model(gbt::train(ds, full)) ==
              gbt::serialize_model(gbt::train(ds, other)));
    }

    SUBCASE("log2 of 9 features draws 4 per split") {
        CHECK(gbt::max_features_count(gbt::MaxFeatures::Log2, 9) == 4);
        CHECK(gbt::max_features_count(gbt::MaxFeatures::Log2, 8) == 3);
        CHECK(gbt::max_features_count(gbt::MaxFeatures::Log2, 2) == 1);
        CHECK(gbt::max_features_count(gbt::MaxFeatures::All, 9) == 9);
    }
}

TEST_CASE("model serialization round trip") {
    Rng data_rng(2718);
    const auto ds = random_dataset(150, 5, data_rng);
    gbt::Hyperparams hp;
    hp.n_estimators = 12;
    hp.max_depth = 3;
    hp.learning_rate = 0.4;
    const auto model = gbt::train(ds, hp);

    const auto text = gbt::serialize_model(model);
    const auto back = gbt::parse_model(text);
    CHECK(gbt::serialize_model(back) == text);
    for (std::size_t r = 0; r < 20; ++r)
        CHECK(back.margin(ds.row(r)) == model.margin(ds.row(r)));

    CHECK_THROWS_AS(gbt::parse_model("nonsense"), std::runtime_error);

    // depth limit honored
    for (const auto& t : model.trees) CHECK(t.depth() <= hp.max_depth);
}
