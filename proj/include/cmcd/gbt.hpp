#pragma once

// Gradient-boosted regression trees for binary classification with logistic
// loss (two-class L2 TreeBoost): labels mapped to {-1,+1}, trees fit to the
// pseudo-residuals r_i = 2*y_i / (1 + exp(2*y_i*F(x_i))), leaf values set by
// the per-leaf Newton step sum(r) / sum(|r|(2-|r|)), shrinkage applied on
// every update. Supports stochastic row subsampling per iteration and
// per-split feature subsampling (all or ceil(log2 n)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmcd/dataset.hpp"
#include "cmcd/rng.hpp"
#include "cmcd/util.hpp"

namespace cmcd::gbt {

enum class MaxFeatures { All, Log2 };

inline std::string max_features_name(MaxFeatures mf) {
    return mf == MaxFeatures::All ? "all" : "log2";
}

inline MaxFeatures parse_max_features(std::string_view s) {
    if (s == "all") return MaxFeatures::All;
    if (s == "log2") return MaxFeatures::Log2;
    throw std::invalid_argument("max_features must be 'all' or 'log2'");
}

// Features considered per split.
inline int max_features_count(MaxFeatures mf, int n_features) {
    if (mf == MaxFeatures::All || n_features <= 1) return n_features;
    return std::min(n_features, int(std::ceil(std::log2(double(n_features)))));
}

struct Hyperparams {
    int n_estimators = 500;
    double learning_rate = 0.6;
    int max_depth = 3;
    double subsample = 1.0;
    MaxFeatures max_features = MaxFeatures::All;
    std::uint64_t seed = 0;
    int min_samples_leaf = 1;

    void validate() const {
        if (n_estimators < 0) throw std::invalid_argument("n_estimators must be >= 0");
        if (!(learning_rate > 0.0 && learning_rate <= 1.0))
            throw std::invalid_argument("learning_rate must be in (0, 1]");
        if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
        if (!(subsample > 0.0 && subsample <= 1.0))
            throw std::invalid_argument("subsample must be in (0, 1]");
        if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
    }
};

struct TreeNode {
    int feature = -1;        // -1 for leaves
    double threshold = 0.0;
    double value = 0.0;      // leaf margin contribution (unscaled)
    std::int32_t left = -1;
    std::int32_t right = -1;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // preorder, root at index 0

    double eval(std::span<const double> x) const {
        std::int32_t i = 0;
        while (!nodes[std::size_t(i)].is_leaf()) {
            const TreeNode& nd = nodes[std::size_t(i)];
            i = x[std::size_t(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[std::size_t(i)].value;
    }

    int depth() const {
        return nodes.empty() ? 0 : depth_from(0);
    }

private:
    int depth_from(std::int32_t i) const {
        const TreeNode& nd = nodes[std::size_t(i)];
        if (nd.is_leaf()) return 0;
        return 1 + std::max(depth_from(nd.left), depth_from(nd.right));
    }
};

struct GbtModel {
    double initial_margin = 0.0;
    double learning_rate = 1.0;
    int n_features = 0;
    std::vector<RegressionTree> trees;

    double margin(std::span<const double> x) const {
        if (int(x.size()) != n_features) throw std::invalid_argument("feature dimension mismatch");
        double f = initial_margin;
        for (const auto& t : trees) f += learning_rate * t.eval(x);
        return f;
    }

    // p(collision) = 1 / (1 + exp(-2 F(x)))
    double proba(std::span<const double> x) const { return margin_to_proba(margin(x)); }

    // Probabilities stay strictly inside (0,1): decision-threshold boundary
    // cases (threshold 0 or 1) depend on it even where exp() saturates.
    static double margin_to_proba(double f) {
        const double z = -2.0 * f;
        const double p = z > 700.0 ? 0.0 : 1.0 / (1.0 + std::exp(z));
        return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
    }
};

// Per-sample detector output.
struct DetectionOutput {
    double timestamp = 0.0;
    double probability = 0.0;
    int predicted_label = 0;  // 1 iff probability >= decision threshold
};

// ---- split search ----

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;  // squared-error reduction
};

namespace detail {

// Scan one feature for the best threshold. `sorted_rows` must be ordered by
// ascending feature value (ties by row id). Candidates sit halfway between
// consecutive distinct values; thresholds are snapped so that the predicate
// `x <= thr` reproduces the scanned prefix exactly.
inline std::optional<std::pair<double, double>> scan_feature(
    const std::vector<double>& column, std::span<const std::uint32_t> sorted_rows,
    std::span<const double> residual, int min_samples_leaf, double total_sum) {
    const std::size_t n = sorted_rows.size();
    double left_sum = 0.0;
    double best_gain = 0.0;
    double best_thr = 0.0;
    bool found = false;
    const double parent = total_sum * total_sum / double(n);

    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::uint32_t row = sorted_rows[i];
        left_sum += residual[row];
        const double v = column[row];
        const double vnext = column[sorted_rows[i + 1]];
        if (v == vnext) continue;
        const std::size_t left_cnt = i + 1;
        const std::size_t right_cnt = n - left_cnt;
        if (left_cnt < std::size_t(min_samples_leaf) || right_cnt < std::size_t(min_samples_leaf))
            continue;
        double thr = v + (vnext - v) * 0.5;
        if (thr >= vnext) thr = v;
        const double right_sum = total_sum - left_sum;
        const double gain =
            left_sum * left_sum / double(left_cnt) + right_sum * right_sum / double(right_cnt) - parent;
        if (gain > best_gain) {
            best_gain = gain;
            best_thr = thr;
            found = true;
        }
    }
    if (!found || !(best_gain > 0.0)) return std::nullopt;
    return std::make_pair(best_thr, best_gain);
}

}  // namespace detail

// Exhaustive best split over the given feature subset (ascending feature
// order; ties keep the lowest feature index, then the lowest threshold).
// Returns nullopt when no split reduces the squared error.
//
// Equal-gain candidates are common (the residuals of the first boosting
// iteration take exactly two values), so reproducibility requires pinning the
// arithmetic, not just the tie rule: the node total is accumulated in
// ascending-row-id order, each candidate's left sum is the running prefix in
// (value, id)-sorted order, the right sum is total - left, and the gain is
// left^2/nl + right^2/nr - total^2/n. Reimplementations that follow the same
// convention reproduce identical trees bit for bit.
inline std::optional<SplitCandidate> best_split(const std::vector<std::vector<double>>& columns,
                                                std::span<const std::uint32_t> rows,
                                                std::span<const double> residual,
                                                std::span<const int> feature_subset,
                                                int min_samples_leaf = 1) {
    if (rows.size() < 2 * std::size_t(min_samples_leaf)) return std::nullopt;
    std::vector<std::uint32_t> by_id(rows.begin(), rows.end());
    std::sort(by_id.begin(), by_id.end());
    double total = 0.0;
    for (auto r : by_id) total += residual[r];

    std::optional<SplitCandidate> best;
    std::vector<std::uint32_t> sorted(rows.begin(), rows.end());
    for (int f : feature_subset) {
        const auto& col = columns[std::size_t(f)];
        std::sort(sorted.begin(), sorted.end(), [&](std::uint32_t a, std::uint32_t b) {
            return col[a] != col[b] ? col[a] < col[b] : a < b;
        });
        const auto cand = detail::scan_feature(col, sorted, residual, min_samples_leaf, total);
        if (cand && (!best || cand->second > best->gain))
            best = SplitCandidate{f, cand->first, cand->second};
    }
    return best;
}

// ---- training ----

struct TrainLog {
    std::vector<double> train_deviance;  // index m = deviance after m trees (0 = prior only)
};

namespace detail {

inline double pseudo_residual(double ytilde, double f) {
    const double z = std::min(2.0 * ytilde * f, 700.0);
    return 2.0 * ytilde / (1.0 + std::exp(z));
}

inline double log1pexp(double z) {
    // log(1 + exp(z)) without overflow
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double leaf_value(std::span<const std::uint32_t> rows, std::span<const double> residual) {
    double num = 0.0, den = 0.0;
    for (auto r : rows) {
        const double v = residual[r];
        num += v;
        den += std::abs(v) * (2.0 - std::abs(v));
    }
    return den > 0.0 ? num / den : 0.0;
}

struct TreeBuilder {
    const std::vector<std::vector<double>>& columns;
    std::span<const double> residual;
    const Hyperparams& hp;
    int n_features;
    Rng& rng;
    RegressionTree tree;

    std::vector<int> feature_subset() {
        const int m = max_features_count(hp.max_features, n_features);
        std::vector<int> feats(static_cast<std::size_t>(n_features));
        for (int i = 0; i < n_features; ++i) feats[std::size_t(i)] = i;
        if (m >= n_features) return feats;
        rng.partial_shuffle(feats, std::size_t(m));
        feats.resize(std::size_t(m));
        std::sort(feats.begin(), feats.end());
        return feats;
    }

    // sorted[f] holds this node's rows ordered by feature f; by_id holds the
    // same rows in ascending-id order (the canonical order for gain and leaf
    // sums). Both are consumed.
    std::int32_t build(std::vector<std::vector<std::uint32_t>> sorted,
                       std::vector<std::uint32_t> by_id, int depth) {
        const std::int32_t idx = std::int32_t(tree.nodes.size());
        tree.nodes.emplace_back();
        const std::size_t count = by_id.size();

        std::optional<SplitCandidate> split;
        if (depth < hp.max_depth && count >= 2 * std::size_t(hp.min_samples_leaf)) {
            const auto feats = feature_subset();
            double total = 0.0;
            for (auto r : by_id) total += residual[r];
            for (int f : feats) {
                const auto cand = scan_feature(columns[std::size_t(f)], sorted[std::size_t(f)],
                                               residual, hp.min_samples_leaf, total);
                if (cand && (!split || cand->second > split->gain))
                    split = SplitCandidate{f, cand->first, cand->second};
            }
        }

        if (!split) {
            tree.nodes[std::size_t(idx)].value = leaf_value(by_id, residual);
            return idx;
        }

        const auto& split_col = columns[std::size_t(split->feature)];
        const double thr = split->threshold;
        std::vector<std::vector<std::uint32_t>> left(sorted.size()), right(sorted.size());
        for (std::size_t f = 0; f < sorted.size(); ++f) {
            left[f].reserve(count / 2);
            right[f].reserve(count / 2);
            for (auto r : sorted[f]) (split_col[r] <= thr ? left[f] : right[f]).push_back(r);
            sorted[f].clear();
            sorted[f].shrink_to_fit();
        }
        sorted.clear();
        std::vector<std::uint32_t> left_ids, right_ids;
        left_ids.reserve(count / 2);
        right_ids.reserve(count / 2);
        for (auto r : by_id) (split_col[r] <= thr ? left_ids : right_ids).push_back(r);
        by_id.clear();
        by_id.shrink_to_fit();

        const std::int32_t l = build(std::move(left), std::move(left_ids), depth + 1);
        const std::int32_t r = build(std::move(right), std::move(right_ids), depth + 1);
        TreeNode& nd = tree.nodes[std::size_t(idx)];
        nd.feature = split->feature;
        nd.threshold = thr;
        nd.left = l;
        nd.right = r;
        return idx;
    }
};

}  // namespace detail

inline double deviance(std::span<const double> margins, std::span<const double> ytilde) {
    double sum = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i)
        sum += detail::log1pexp(-2.0 * ytilde[i] * margins[i]);
    return sum / double(margins.size());
}

inline GbtModel train(const data::LabeledDataset& ds, const Hyperparams& hp,
                      TrainLog* log = nullptr) {
    hp.validate();
    const std::size_t n_rows = ds.rows();
    const int n_features = int(ds.n_features);
    if (n_rows == 0) throw std::invalid_argument("train: empty dataset");
    for (double v : ds.features)
        if (!std::isfinite(v)) throw std::invalid_argument("train: non-finite feature value");

    std::size_t pos = ds.positives();
    if (pos == 0 || pos == n_rows) throw std::invalid_argument("train: both classes required");

    // column-major copy + per-feature presort
    std::vector<std::vector<double>> columns(static_cast<std::size_t>(n_features));
    for (int f = 0; f < n_features; ++f) {
        auto& col = columns[std::size_t(f)];
        col.resize(n_rows);
        for (std::size_t r = 0; r < n_rows; ++r) col[r] = ds.features[r * ds.n_features + f];
    }
    std::vector<std::vector<std::uint32_t>> presorted(static_cast<std::size_t>(n_features));
    for (int f = 0; f < n_features; ++f) {
        auto& order = presorted[std::size_t(f)];
        order.resize(n_rows);
        for (std::size_t r = 0; r < n_rows; ++r) order[r] = std::uint32_t(r);
        const auto& col = columns[std::size_t(f)];
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            return col[a] != col[b] ? col[a] < col[b] : a < b;
        });
    }

    std::vector<double> ytilde(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) ytilde[r] = ds.labels[r] ? 1.0 : -1.0;
    const double ybar = (2.0 * double(pos) - double(n_rows)) / double(n_rows);

    GbtModel model;
    model.n_features = n_features;
    model.learning_rate = hp.learning_rate;
    model.initial_margin = 0.5 * std::log((1.0 + ybar) / (1.0 - ybar));
    model.trees.reserve(std::size_t(hp.n_estimators));

    std::vector<double> margins(n_rows, model.initial_margin);
    std::vector<double> residual(n_rows, 0.0);
    Rng rng(hp.seed);
    if (log) log->train_deviance.assign(1, deviance(margins, ytilde));

    std::vector<std::uint32_t> all_rows(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) all_rows[r] = std::uint32_t(r);

    for (int m = 0; m < hp.n_estimators; ++m) {
        // draw the iteration's subsample (without replacement)
        std::vector<std::uint8_t> in_sample;
        bool subsampled = hp.subsample < 1.0;
        if (subsampled) {
            const std::size_t n_sub = std::max<std::size_t>(1, std::size_t(hp.subsample * double(n_rows)));
            std::vector<std::uint32_t> pick = all_rows;
            rng.partial_shuffle(pick, n_sub);
            in_sample.assign(n_rows, 0);
            for (std::size_t i = 0; i < n_sub; ++i) in_sample[pick[i]] = 1;
        }

        for (std::size_t r = 0; r < n_rows; ++r)
            residual[r] = detail::pseudo_residual(ytilde[r], margins[r]);

        std::vector<std::vector<std::uint32_t>> root(static_cast<std::size_t>(n_features));
        for (int f = 0; f < n_features; ++f) {
            auto& rows = root[std::size_t(f)];
            const auto& order = presorted[std::size_t(f)];
            if (!subsampled) {
                rows = order;
            } else {
                rows.reserve(n_rows);
                for (auto r : order)
                    if (in_sample[r]) rows.push_back(r);
            }
        }
        std::vector<std::uint32_t> root_ids;
        if (!subsampled) {
            root_ids = all_rows;
        } else {
            root_ids.reserve(n_rows);
            for (std::uint32_t r = 0; r < n_rows; ++r)
                if (in_sample[r]) root_ids.push_back(r);
        }

        detail::TreeBuilder builder{columns, residual, hp, n_features, rng, {}};
        builder.build(std::move(root), std::move(root_ids), 0);
        RegressionTree tree = std::move(builder.tree);

        for (std::size_t r = 0; r < n_rows; ++r)
            margins[r] += hp.learning_rate * tree.eval(ds.row(r));
        model.trees.push_back(std::move(tree));

        if (log) log->train_deviance.push_back(deviance(margins, ytilde));
    }
    return model;
}

// ---- staged evaluation (loss-vs-iteration curves) ----

struct StagedEval {
    std::vector<double> deviance;  // index m = after m trees
    std::vector<double> accuracy;  // fraction correct at threshold 0.5
};

inline StagedEval staged_eval(const GbtModel& model, const data::LabeledDataset& ds) {
    if (int(ds.n_features) != model.n_features)
        throw std::invalid_argument("staged_eval: feature dimension mismatch");
    const std::size_t n = ds.rows();
    std::vector<double> ytilde(n);
    for (std::size_t r = 0; r < n; ++r) ytilde[r] = ds.labels[r] ? 1.0 : -1.0;

    StagedEval out;
    std::vector<double> margins(n, model.initial_margin);
    auto record = [&] {
        out.deviance.push_back(deviance(margins, ytilde));
        std::size_t correct = 0;
        for (std::size_t r = 0; r < n; ++r) {
            const int pred = GbtModel::margin_to_proba(margins[r]) >= 0.5 ? 1 : 0;
            correct += pred == int(ds.labels[r]);
        }
        out.accuracy.push_back(double(correct) / double(n));
    };
    record();
    for (const auto& tree : model.trees) {
        for (std::size_t r = 0; r < n; ++r) margins[r] += model.learning_rate * tree.eval(ds.row(r));
        record();
    }
    return out;
}

inline double accuracy(const GbtModel& model, const data::LabeledDataset& ds,
                       double threshold = 0.5) {
    std::size_t correct = 0;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        const int pred = model.proba(ds.row(r)) >= threshold ? 1 : 0;
        correct += pred == int(ds.labels[r]);
    }
    return ds.rows() ? double(correct) / double(ds.rows()) : 0.0;
}

// ---- model serialization (versioned, preorder text) ----

inline std::string serialize_model(const GbtModel& m) {
    std::string out = "cmcd-gbt-model 1\n";
    out += "n_features " + std::to_string(m.n_features) + "\n";
    out += "learning_rate " + fmt_double(m.learning_rate) + "\n";
    out += "initial_margin " + fmt_double(m.initial_margin) + "\n";
    out += "trees " + std::to_string(m.trees.size()) + "\n";
    for (const auto& t : m.trees) {
        out += "tree " + std::to_string(t.nodes.size()) + "\n";
        for (const auto& nd : t.nodes) {
            if (nd.is_leaf()) out += "leaf " + fmt_double(nd.value) + "\n";
            else out += "split " + std::to_string(nd.feature) + " " + fmt_double(nd.threshold) + "\n";
        }
    }
    return out;
}

inline GbtModel parse_model(const std::string& text) {
    const auto lines = split(text, '\n');
    std::size_t i = 0;
    auto next = [&]() -> std::vector<std::string_view> {
        while (i < lines.size() && trim(lines[i]).empty()) ++i;
        if (i >= lines.size()) throw std::runtime_error("model file: unexpected end");
        return split_ws(trim(lines[i++]));
    };

    auto header = next();
    if (header.size() != 2 || header[0] != "cmcd-gbt-model" || header[1] != "1")
        throw std::runtime_error("model file: bad header");

    GbtModel m;
    std::size_t n_trees = 0;
    for (int field = 0; field < 4; ++field) {
        const auto tok = next();
        if (tok.size() != 2) throw std::runtime_error("model file: bad field line");
        if (tok[0] == "n_features") m.n_features = int(parse_int(tok[1]));
        else if (tok[0] == "learning_rate") m.learning_rate = parse_double(tok[1]);
        else if (tok[0] == "initial_margin") m.initial_margin = parse_double(tok[1]);
        else if (tok[0] == "trees") n_trees = std::size_t(parse_int(tok[1]));
        else throw std::runtime_error("model file: unknown field");
    }

    for (std::size_t t = 0; t < n_trees; ++t) {
        const auto tok = next();
        if (tok.size() != 2 || tok[0] != "tree") throw std::runtime_error("model file: expected tree");
        const std::size_t n_nodes = std::size_t(parse_int(tok[1]));
        RegressionTree tree;
        tree.nodes.reserve(n_nodes);

        // preorder reconstruction
        auto parse_node = [&](auto&& self) -> std::int32_t {
            const auto nd_tok = next();
            const std::int32_t idx = std::int32_t(tree.nodes.size());
            tree.nodes.emplace_back();
            if (nd_tok[0] == "leaf") {
                if (nd_tok.size() != 2) throw std::runtime_error("model file: bad leaf");
                tree.nodes[std::size_t(idx)].value = parse_double(nd_tok[1]);
            } else if (nd_tok[0] == "split") {
                if (nd_tok.size() != 3) throw std::runtime_error("model file: bad split");
                const int feature = int(parse_int(nd_tok[1]));
                const double thr = parse_double(nd_tok[2]);
                const std::int32_t l = self(self);
                const std::int32_t r = self(self);
                TreeNode& nd = tree.nodes[std::size_t(idx)];
                nd.feature = feature;
                nd.threshold = thr;
                nd.left = l;
                nd.right = r;
            } else {
                throw std::runtime_error("model file: unknown node kind");
            }
            return idx;
        };
        parse_node(parse_node);
        if (tree.nodes.size() != n_nodes)
            throw std::runtime_error("model file: tree node count mismatch");
        m.trees.push_back(std::move(tree));
    }
    return m;
}

}  // namespace cmcd::gbt
