#pragma once

// Frame auto-labeling: threshold, square-kernel morphology, two-pass
// connected-components labeling, and the component-count collision rule.

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmcd/image.hpp"
#include "cmcd/util.hpp"

namespace cmcd::vision {

enum class Connectivity { Four = 4, Eight = 8 };

struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> labels;  // 0 = background, components numbered 1..count
    int component_count = 0;

    std::int32_t at(int x, int y) const { return labels[std::size_t(y) * width + x]; }
};

inline BinaryImage threshold(const GrayImage& gray, std::uint8_t t) {
    BinaryImage out(gray.width, gray.height);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) out.bits[i] = gray.pixels[i] >= t ? 1 : 0;
    return out;
}

inline void check_kernel(int k) {
    if (k < 1 || k % 2 == 0) throw std::invalid_argument("morphology kernel must be odd and >= 1");
}

// Erosion by a k x k square, border treated as background.
// Separable: run-length pass over rows, then over columns.
inline BinaryImage erode(const BinaryImage& img, int k) {
    check_kernel(k);
    if (k == 1) return img;
    const int w = img.width, h = img.height, r = k / 2;

    BinaryImage rows(w, h, 0);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* in = &img.bits[std::size_t(y) * w];
        std::uint8_t* out = &rows.bits[std::size_t(y) * w];
        int run = 0;
        for (int x = 0; x < w; ++x) {
            run = in[x] ? run + 1 : 0;
            if (x >= k - 1 && run >= k) out[x - r] = 1;
        }
    }

    BinaryImage out(w, h, 0);
    std::vector<int> run(std::size_t(w), 0);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* in = &rows.bits[std::size_t(y) * w];
        for (int x = 0; x < w; ++x) {
            run[x] = in[x] ? run[x] + 1 : 0;
            if (y >= k - 1 && run[x] >= k) out.at(x, y - r) = 1;
        }
    }
    return out;
}

// Dilation by a k x k square; out-of-bounds neighbors contribute background.
inline BinaryImage dilate(const BinaryImage& img, int k) {
    check_kernel(k);
    if (k == 1) return img;
    const int w = img.width, h = img.height, r = k / 2;

    BinaryImage rows(w, h, 0);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* in = &img.bits[std::size_t(y) * w];
        std::uint8_t* out = &rows.bits[std::size_t(y) * w];
        int last = -w;  // index of the most recent foreground pixel
        for (int x = 0; x < w; ++x) {
            if (in[x]) last = x;
            if (x - last <= r) out[x] = 1;
        }
        last = 2 * w;
        for (int x = w - 1; x >= 0; --x) {
            if (in[x]) last = x;
            if (last - x <= r) out[x] = 1;
        }
    }

    BinaryImage out(w, h, 0);
    std::vector<int> last(std::size_t(w), -h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* in = &rows.bits[std::size_t(y) * w];
        std::uint8_t* o = &out.bits[std::size_t(y) * w];
        for (int x = 0; x < w; ++x) {
            if (in[x]) last[x] = y;
            if (y - last[x] <= r) o[x] = 1;
        }
    }
    std::fill(last.begin(), last.end(), 2 * h);
    for (int y = h - 1; y >= 0; --y) {
        const std::uint8_t* in = &rows.bits[std::size_t(y) * w];
        std::uint8_t* o = &out.bits[std::size_t(y) * w];
        for (int x = 0; x < w; ++x) {
            if (in[x]) last[x] = y;
            if (last[x] - y <= r) o[x] = 1;
        }
    }
    return out;
}

// Morphological opening: erosion followed by dilation. Removes foreground
// structures thinner than k while keeping larger shapes intact.
inline BinaryImage open(const BinaryImage& img, int k) { return dilate(erode(img, k), k); }

namespace detail {

struct UnionFind {
    std::vector<std::int32_t> parent;

    std::int32_t make() {
        parent.push_back(std::int32_t(parent.size()));
        return std::int32_t(parent.size() - 1);
    }
    std::int32_t find(std::int32_t a) {
        std::int32_t root = a;
        while (parent[root] != root) root = parent[root];
        while (parent[a] != root) {
            std::int32_t next = parent[a];
            parent[a] = root;
            a = next;
        }
        return root;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[b < a ? a : b] = b < a ? b : a;  // smaller id wins
    }
};

}  // namespace detail

// Two-pass union-find labeling. Components are renumbered 1..count in the
// raster order of their first pixel, so the output is fully deterministic.
inline LabelMap label_components(const BinaryImage& img, Connectivity conn) {
    const int w = img.width, h = img.height;
    LabelMap map;
    map.width = w;
    map.height = h;
    map.labels.assign(std::size_t(w) * std::size_t(h), 0);
    if (w == 0 || h == 0) return map;

    detail::UnionFind uf;
    uf.make();  // index 0 reserved for background
    std::vector<std::int32_t>& lab = map.labels;
    const bool eight = conn == Connectivity::Eight;

    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = &img.bits[std::size_t(y) * w];
        std::int32_t* lrow = &lab[std::size_t(y) * w];
        const std::int32_t* lup = y > 0 ? &lab[std::size_t(y - 1) * w] : nullptr;
        for (int x = 0; x < w; ++x) {
            if (!row[x]) continue;
            std::int32_t neighbor = 0;
            if (x > 0 && lrow[x - 1]) neighbor = lrow[x - 1];
            if (lup) {
                auto consider = [&](std::int32_t cand) {
                    if (!cand) return;
                    if (!neighbor) neighbor = cand;
                    else if (cand != neighbor) uf.unite(neighbor, cand);
                };
                consider(lup[x]);
                if (eight) {
                    if (x > 0) consider(lup[x - 1]);
                    if (x + 1 < w) consider(lup[x + 1]);
                }
            }
            lrow[x] = neighbor ? neighbor : uf.make();
        }
    }

    // Second pass: resolve to roots, renumber by first encounter.
    std::vector<std::int32_t> final_label(uf.parent.size(), 0);
    std::int32_t next = 0;
    for (auto& l : lab) {
        if (!l) continue;
        const std::int32_t root = uf.find(l);
        if (final_label[root] == 0) final_label[root] = ++next;
        l = final_label[root];
    }
    map.component_count = next;
    return map;
}

// Component-count decision rule: the scene is expected to contain
// expected_separate disjoint regions (CM + obstacles); fewer means something
// merged, i.e. a collision. More than expected means the frame is noisy and
// is rejected (nullopt) so the caller can re-open or drop it.
inline std::optional<int> collision_label(const LabelMap& map, int expected_separate) {
    if (map.component_count > expected_separate) return std::nullopt;
    return map.component_count < expected_separate ? 1 : 0;
}

// ---- label CSV (`timestamp,components,label`) ----

struct FrameLabel {
    double timestamp = 0.0;
    int components = 0;
    int label = 0;
};

inline std::string label_csv(const std::vector<FrameLabel>& rows) {
    std::string out = "timestamp,components,label\n";
    for (const auto& r : rows) {
        out += fmt_double(r.timestamp);
        out += ',';
        out += std::to_string(r.components);
        out += ',';
        out += std::to_string(r.label);
        out += '\n';
    }
    return out;
}

inline std::vector<FrameLabel> parse_label_csv(const std::string& text) {
    std::vector<FrameLabel> rows;
    std::size_t line_no = 0;
    for (std::string_view line : split(text, '\n')) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line_no == 1) continue;  // header
        const auto cols = split(line, ',');
        if (cols.size() != 3)
            throw std::runtime_error("labels CSV line " + std::to_string(line_no) + ": expected 3 columns");
        rows.push_back({parse_double(cols[0]), int(parse_int(cols[1])), int(parse_int(cols[2]))});
    }
    return rows;
}

}  // namespace cmcd::vision
