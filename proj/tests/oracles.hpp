#pragma once

// Test-only reference implementations. Each oracle is deliberately naive and
// structurally independent of the library code path it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "cmcd/dataset.hpp"
#include "cmcd/image.hpp"
#include "cmcd/rng.hpp"
#include "cmcd/sim.hpp"
#include "cmcd/types.hpp"

namespace oracle {

// ---- flood-fill connected components (stack-based, first-encounter order) ----

inline std::vector<std::int32_t> flood_fill_labels(const cmcd::BinaryImage& img, int connectivity,
                                                   int* component_count = nullptr) {
    const int w = img.width, h = img.height;
    std::vector<std::int32_t> labels(std::size_t(w) * std::size_t(h), 0);
    std::int32_t next = 0;
    std::vector<std::pair<int, int>> stack;

    const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
    const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int nn = connectivity == 8 ? 8 : 4;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            if (!img.bits[i] || labels[i]) continue;
            const std::int32_t id = ++next;
            labels[i] = id;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                for (int k = 0; k < nn; ++k) {
                    const int nx = cx + dx8[k], ny = cy + dy8[k];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t ni = std::size_t(ny) * w + nx;
                    if (img.bits[ni] && !labels[ni]) {
                        labels[ni] = id;
                        stack.push_back({nx, ny});
                    }
                }
            }
        }
    }
    if (component_count) *component_count = next;
    return labels;
}

inline cmcd::BinaryImage random_image(int w, int h, double density, cmcd::Rng& rng) {
    cmcd::BinaryImage img(w, h);
    for (auto& b : img.bits) b = rng.uniform01() < density ? 1 : 0;
    return img;
}

// ---- brute-force gradient boosting reference ----
// Recursive row-subset trees, O(N^2) split enumeration, direct formula
// evaluation of the loss initialization / residuals / leaf Newton step.

struct RefNode {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    int left = -1, right = -1;
};

struct RefTree {
    std::vector<RefNode> nodes;

    double eval(std::span<const double> x) const {
        int i = 0;
        while (nodes[std::size_t(i)].feature >= 0) {
            const auto& nd = nodes[std::size_t(i)];
            i = x[std::size_t(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[std::size_t(i)].value;
    }
};

inline double ref_gamma(const std::vector<std::size_t>& rows, const std::vector<double>& r) {
    double num = 0.0, den = 0.0;
    for (auto i : rows) {
        num += r[i];
        den += std::abs(r[i]) * (2.0 - std::abs(r[i]));
    }
    return den > 0.0 ? num / den : 0.0;
}

// Split-search convention shared with the library (and required of any
// reimplementation, so equal-gain ties resolve identically): candidates at
// midpoints of consecutive distinct values in (value, id)-sorted order, left
// sum = that order's prefix, right sum = total - left with the total summed
// in ascending-id order, gain = l^2/nl + r^2/nr - total^2/n, strictly-greater
// comparisons scanning features then thresholds in ascending order. This
// reference still recomputes every candidate from scratch (O(N) each).
inline int ref_build(const std::vector<std::vector<double>>& x, const std::vector<double>& r,
                     std::vector<std::size_t> rows, int depth, int max_depth, int min_leaf,
                     std::vector<RefNode>& nodes) {
    const int idx = int(nodes.size());
    nodes.emplace_back();

    auto make_leaf = [&] { nodes[std::size_t(idx)].value = ref_gamma(rows, r); };
    if (depth >= max_depth || rows.size() < 2 * std::size_t(min_leaf)) {
        make_leaf();
        return idx;
    }

    const std::size_t nf = x.front().size();
    const std::size_t n = rows.size();
    double best_gain = 0.0, best_thr = 0.0;
    int best_f = -1;
    double total = 0.0;
    for (auto i : rows) total += r[i];  // rows stay in ascending-id order

    for (std::size_t f = 0; f < nf; ++f) {
        std::vector<std::size_t> order = rows;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return x[a][f] != x[b][f] ? x[a][f] < x[b][f] : a < b;
        });
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double v = x[order[i]][f];
            const double vnext = x[order[i + 1]][f];
            if (v == vnext) continue;
            double thr = v + (vnext - v) * 0.5;
            if (thr >= vnext) thr = v;
            const std::size_t ln = i + 1, rn = n - ln;
            if (ln < std::size_t(min_leaf) || rn < std::size_t(min_leaf)) continue;
            double ls = 0.0;  // naive: prefix recomputed from scratch per candidate
            for (std::size_t j = 0; j <= i; ++j) ls += r[order[j]];
            const double rs = total - ls;
            const double gain =
                ls * ls / double(ln) + rs * rs / double(rn) - total * total / double(n);
            if (gain > best_gain) {
                best_gain = gain;
                best_thr = thr;
                best_f = int(f);
            }
        }
    }
    if (best_f < 0 || !(best_gain > 0.0)) {
        make_leaf();
        return idx;
    }

    std::vector<std::size_t> lrows, rrows;
    for (auto i : rows)
        (x[i][std::size_t(best_f)] <= best_thr ? lrows : rrows).push_back(i);
    const int l = ref_build(x, r, std::move(lrows), depth + 1, max_depth, min_leaf, nodes);
    const int rr = ref_build(x, r, std::move(rrows), depth + 1, max_depth, min_leaf, nodes);
    nodes[std::size_t(idx)].feature = best_f;
    nodes[std::size_t(idx)].threshold = best_thr;
    nodes[std::size_t(idx)].left = l;
    nodes[std::size_t(idx)].right = rr;
    return idx;
}

struct RefGbt {
    double f0 = 0.0;
    double lr = 1.0;
    std::vector<RefTree> trees;

    double margin(std::span<const double> xi) const {
        double f = f0;
        for (const auto& t : trees) f += lr * t.eval(xi);
        return f;
    }
};

// subsample = 1, max_features = all only.
inline RefGbt ref_train(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                        int n_estimators, double lr, int max_depth, int min_leaf = 1) {
    const std::size_t n = x.size();
    std::vector<double> yt(n), f(n), r(n);
    double ybar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        yt[i] = y[i] ? 1.0 : -1.0;
        ybar += yt[i];
    }
    ybar /= double(n);

    RefGbt model;
    model.lr = lr;
    model.f0 = 0.5 * std::log((1.0 + ybar) / (1.0 - ybar));
    std::fill(f.begin(), f.end(), model.f0);

    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;

    for (int m = 0; m < n_estimators; ++m) {
        for (std::size_t i = 0; i < n; ++i)
            r[i] = 2.0 * yt[i] / (1.0 + std::exp(std::min(2.0 * yt[i] * f[i], 700.0)));
        RefTree tree;
        ref_build(x, r, all, 0, max_depth, min_leaf, tree.nodes);
        for (std::size_t i = 0; i < n; ++i) f[i] += lr * tree.eval(x[i]);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

// ---- independent chain energy + refined grid search ----
// Penetration is recomputed from scratch: inside test via the implicit
// equation, depth via dense boundary sampling (no closed-point iteration).

inline double sampled_penetration(const cmcd::sim::Obstacle& o, cmcd::Vec2 p, int boundary_samples) {
    using cmcd::Vec2;
    const Vec2 rel = p - o.center;
    if (o.shape == cmcd::sim::Obstacle::Shape::Ellipse) {
        const double u = rel.x / o.semi_axes.x, v = rel.y / o.semi_axes.y;
        if (u * u + v * v > 1.0) return 0.0;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < boundary_samples; ++i) {
            const double a = 2.0 * M_PI * i / boundary_samples;
            const Vec2 b{o.semi_axes.x * std::cos(a), o.semi_axes.y * std::sin(a)};
            best = std::min(best, (rel - b).norm());
        }
        return best;
    }
    const double dx = std::abs(rel.x) - o.semi_axes.x;
    const double dy = std::abs(rel.y) - o.semi_axes.y;
    if (dx > 0.0 || dy > 0.0) return 0.0;
    return -std::max(dx, dy);
}

// Same energy definition as the simulator (same sample points), penetration
// computed by the oracle above.
inline double chain_energy(const cmcd::sim::CmParams& cm,
                           std::span<const cmcd::sim::Obstacle> obstacles, double actuation,
                           std::span<const double> theta, int boundary_samples = 512) {
    using cmcd::Vec2;
    const double l = cm.link_length();
    double e = 0.0, sum = 0.0;
    for (double t : theta) {
        e += cm.spring_kappa * t * t;
        sum += t;
    }
    const double res = cm.cable_offset_mm * sum - actuation;
    e += cm.cable_penalty * res * res;

    Vec2 p = cm.base_position;
    double heading = cm.base_heading;
    for (int li = 0; li < cm.joints; ++li) {
        heading += theta[std::size_t(li)];
        const Vec2 dir{std::cos(heading), std::sin(heading)};
        for (int s = 1; s <= cm.contact_samples_per_link; ++s) {
            const Vec2 q = p + dir * (l * s / cm.contact_samples_per_link);
            for (const auto& o : obstacles) {
                const double pen = sampled_penetration(o, q, boundary_samples);
                e += o.stiffness * pen * pen;
            }
        }
        p = p + dir * l;
    }
    return e;
}

// Iteratively refined dense grid search over a 3-joint chain.
inline std::vector<double> grid_search_equilibrium(const cmcd::sim::CmParams& cm,
                                                   std::span<const cmcd::sim::Obstacle> obstacles,
                                                   double actuation) {
    const double half_pi = 1.5707963267948966;
    double lo[3] = {-half_pi, -half_pi, -half_pi};
    double hi[3] = {half_pi, half_pi, half_pi};
    double best[3] = {0, 0, 0};
    const int steps = 21;

    for (int refine = 0; refine < 9; ++refine) {
        double best_e = std::numeric_limits<double>::infinity();
        double theta[3];
        for (int i0 = 0; i0 < steps; ++i0) {
            theta[0] = lo[0] + (hi[0] - lo[0]) * i0 / (steps - 1);
            for (int i1 = 0; i1 < steps; ++i1) {
                theta[1] = lo[1] + (hi[1] - lo[1]) * i1 / (steps - 1);
                for (int i2 = 0; i2 < steps; ++i2) {
                    theta[2] = lo[2] + (hi[2] - lo[2]) * i2 / (steps - 1);
                    const double e = chain_energy(cm, obstacles, actuation, theta, 256);
                    if (e < best_e) {
                        best_e = e;
                        best[0] = theta[0];
                        best[1] = theta[1];
                        best[2] = theta[2];
                    }
                }
            }
        }
        for (int d = 0; d < 3; ++d) {
            const double span = (hi[d] - lo[d]) / (steps - 1) * 2.0;  // keep 2 cells around best
            lo[d] = best[d] - span;
            hi[d] = best[d] + span;
        }
    }
    return {best[0], best[1], best[2]};
}

// ---- O(N*M) zero-order-hold search ----

inline std::optional<int> zoh_label(double t, std::span<const std::pair<double, int>> labels) {
    std::optional<int> out;
    double best_t = -std::numeric_limits<double>::infinity();
    for (const auto& [lt, lv] : labels) {
        if (lt <= t && lt >= best_t) {
            best_t = lt;
            out = lv;
        }
    }
    return out;
}

}  // namespace oracle
