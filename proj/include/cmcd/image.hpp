#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmcd {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(std::size_t(w) * std::size_t(h), fill) {}

    std::uint8_t& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
};

struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // row-major, 0 = background, 1 = foreground

    BinaryImage() = default;
    BinaryImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), bits(std::size_t(w) * std::size_t(h), fill) {}

    std::uint8_t& at(int x, int y) { return bits[std::size_t(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return bits[std::size_t(y) * width + x]; }

    std::size_t count_foreground() const {
        std::size_t c = 0;
        for (auto b : bits) c += b;
        return c;
    }

    bool operator==(const BinaryImage& o) const {
        return width == o.width && height == o.height && bits == o.bits;
    }

    GrayImage to_gray() const {
        GrayImage g(width, height);
        for (std::size_t i = 0; i < bits.size(); ++i) g.pixels[i] = bits[i] ? 255 : 0;
        return g;
    }
};

// ---- PGM (P5, binary, maxval 255) ----

inline void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              std::streamsize(img.pixels.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string pgm_bytes(const GrayImage& img) {
    std::string s = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    s.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    return s;
}

inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);

    auto next_token = [&in, &path]() -> std::string {
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {  // comment to end of line
                while ((c = in.get()) != EOF && c != '\n') {}
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(char(c));
        }
        if (tok.empty()) throw std::runtime_error("truncated PGM header: " + path);
        return tok;
    };

    if (next_token() != "P5") throw std::runtime_error("not a P5 PGM: " + path);
    const int w = int(std::stol(next_token()));
    const int h = int(std::stol(next_token()));
    const int maxval = int(std::stol(next_token()));
    if (w <= 0 || h <= 0 || maxval != 255)
        throw std::runtime_error("unsupported PGM geometry in " + path);

    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (in.gcount() != std::streamsize(img.pixels.size()))
        throw std::runtime_error("truncated PGM data: " + path);
    return img;
}

}  // namespace cmcd
