#pragma once

// Raster grids, binary masks, mask sets and the pixel-level metrics the rest
// of the library is built on. All types are plain values; every function here
// is pure and safe to call from multiple threads on shared inputs.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mshape {

struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; `offset` is the byte position the parser gave up at.
struct parse_error : error {
    parse_error(const std::string& what, std::size_t offset_)
        : error(what + " (at byte " + std::to_string(offset_) + ")"), offset(offset_) {}
    std::size_t offset;
};

struct io_error : error {
    using error::error;
};

struct grid_mismatch_error : error {
    using error::error;
};

// Raised when a statistic needs a nonempty region/complement and got none.
struct degenerate_region_error : error {
    using error::error;
};

struct RasterGrid {
    int width = 0;
    int height = 0;

    RasterGrid() = default;
    RasterGrid(int w, int h) : width(w), height(h) {
        if (w < 1 || h < 1)
            throw error("grid dimensions must be at least 1x1, got " +
                        std::to_string(w) + "x" + std::to_string(h));
    }

    std::size_t size() const { return static_cast<std::size_t>(width) * height; }
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    bool contains(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    friend bool operator==(const RasterGrid& a, const RasterGrid& b) = default;
};

inline void require_same_grid(const RasterGrid& a, const RasterGrid& b, const char* where) {
    if (!(a == b))
        throw grid_mismatch_error(std::string(where) + ": grids differ (" +
                                  std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                                  std::to_string(b.width) + "x" + std::to_string(b.height) + ")");
}

// Characteristic function of one segmentation on a grid; values are 0 or 1.
struct BinaryMask {
    RasterGrid grid;
    std::vector<std::uint8_t> values;

    BinaryMask() = default;
    explicit BinaryMask(const RasterGrid& g, std::uint8_t fill = 0)
        : grid(g), values(g.size(), fill ? 1 : 0) {}

    std::uint8_t at(int x, int y) const { return values[grid.index(x, y)]; }
    void set(int x, int y, bool v) { values[grid.index(x, y)] = v ? 1 : 0; }

    friend bool operator==(const BinaryMask& a, const BinaryMask& b) = default;
};

// Per-pixel real field (average images, STAPLE posteriors, ...).
struct ScalarField {
    RasterGrid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const RasterGrid& g, double fill = 0.0)
        : grid(g), values(g.size(), fill) {}

    double at(int x, int y) const { return values[grid.index(x, y)]; }
};

// An ordered family of masks of the same object on one grid.
struct ShapeSet {
    RasterGrid grid;
    std::vector<BinaryMask> masks;
    std::vector<std::string> names;

    std::size_t count() const { return masks.size(); }

    static ShapeSet from_masks(std::vector<BinaryMask> masks, std::vector<std::string> names = {}) {
        if (masks.empty())
            throw error("shape set needs at least one mask");
        ShapeSet s;
        s.grid = masks.front().grid;
        for (std::size_t i = 1; i < masks.size(); ++i)
            require_same_grid(s.grid, masks[i].grid, "shape set");
        if (names.empty())
            for (std::size_t i = 0; i < masks.size(); ++i)
                names.push_back("mask_" + std::to_string(i + 1));
        if (names.size() != masks.size())
            throw error("shape set: name count does not match mask count");
        s.masks = std::move(masks);
        s.names = std::move(names);
        return s;
    }
};

inline std::size_t region_area(const BinaryMask& m) {
    std::size_t n = 0;
    for (std::uint8_t v : m.values) n += v;
    return n;
}

inline BinaryMask complement(const BinaryMask& m) {
    BinaryMask out(m.grid);
    for (std::size_t i = 0; i < m.values.size(); ++i) out.values[i] = m.values[i] ? 0 : 1;
    return out;
}

inline std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
    require_same_grid(a.grid, b.grid, "intersection_area");
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) n += a.values[i] & b.values[i];
    return n;
}

inline std::size_t symmetric_difference_area(const BinaryMask& a, const BinaryMask& b) {
    require_same_grid(a.grid, b.grid, "symmetric_difference_area");
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) n += a.values[i] ^ b.values[i];
    return n;
}

// Dice overlap 2|a∩b| / (|a|+|b|). Two empty masks are identical, hence 1.
inline double dice(const BinaryMask& a, const BinaryMask& b) {
    require_same_grid(a.grid, b.grid, "dice");
    std::size_t inter = 0, sum = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        inter += a.values[i] & b.values[i];
        sum += a.values[i] + b.values[i];
    }
    if (sum == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(sum);
}

// Pixelwise mean of the characteristic functions, in [0,1].
inline ScalarField average_image(const ShapeSet& s) {
    ScalarField out(s.grid);
    const double inv_n = 1.0 / static_cast<double>(s.count());
    for (const BinaryMask& m : s.masks)
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += m.values[i];
    for (double& v : out.values) v *= inv_n;
    return out;
}

}  // namespace mshape
