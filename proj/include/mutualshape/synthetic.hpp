#pragma once

// Synthetic fixture: a centered lozenge (axis-aligned diamond) as ground
// truth, four quadrant-clipped partial masks, and an optional disjoint
// outlier blob. Two of the quarters share a deliberate 2px-wide overlap so
// that the average image peaks at 3/5 = 0.6 and majority voting yields a thin
// band there. Geometry scales linearly with the grid size (reference 128).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"

namespace mshape {

struct LozengeSet {
    BinaryMask truth;
    ShapeSet set;  // [truth, quarter_ne, quarter_nw, quarter_sw, quarter_se, (outlier)]
};

inline LozengeSet make_lozenge_set(int grid_size, bool with_outlier) {
    if (grid_size < 64) throw error("make_lozenge_set: grid size must be at least 64");
    const double s = grid_size / 128.0;
    const RasterGrid grid(grid_size, grid_size);
    // Half-integer center: the clip axes fall between pixel columns, so the
    // four quadrant clips have exactly equal areas by symmetry.
    const double cx = (grid_size - 1) / 2.0, cy = (grid_size - 1) / 2.0;
    const double half_axis = 32.0 * s;

    BinaryMask truth(grid);
    for (int y = 0; y < grid_size; ++y)
        for (int x = 0; x < grid_size; ++x)
            if (std::fabs(x - cx) / half_axis + std::fabs(y - cy) / half_axis <= 1.0)
                truth.set(x, y, true);

    // Half-open quadrant clips partition the diamond exactly.
    auto quarter = [&](bool east, bool south) {
        BinaryMask m(grid);
        for (int y = 0; y < grid_size; ++y)
            for (int x = 0; x < grid_size; ++x) {
                if (!truth.at(x, y)) continue;
                const bool e = x >= cx, so = y >= cy;
                if (e == east && so == south) m.set(x, y, true);
            }
        return m;
    };
    BinaryMask q_ne = quarter(true, false);
    BinaryMask q_nw = quarter(false, false);
    BinaryMask q_sw = quarter(false, true);
    BinaryMask q_se = quarter(true, true);

    // Extend quarter_ne two rows across the clip line over a short span; the
    // strip stays inside the diamond, so the union of the quarters is still
    // the truth while quarter areas stay within 3% of |truth|/4.
    {
        const int off = static_cast<int>(std::lround(8.0 * s));
        const int len = static_cast<int>(std::lround(7.0 * s));
        const int y0 = static_cast<int>(std::ceil(cy));
        const int x0 = static_cast<int>(std::ceil(cx)) + off;
        for (int y = y0; y < y0 + 2 && y < grid_size; ++y)
            for (int x = x0; x < x0 + len; ++x)
                if (grid.contains(x, y) && truth.at(x, y)) q_ne.set(x, y, true);
    }

    std::vector<BinaryMask> masks{truth, q_ne, q_nw, q_sw, q_se};
    std::vector<std::string> names{"truth", "quarter_ne", "quarter_nw", "quarter_sw",
                                   "quarter_se"};

    if (with_outlier) {
        const double ox = 98.0 * s, oy = 98.0 * s, orad = 16.0 * s;
        BinaryMask outlier(grid);
        for (int y = 0; y < grid_size; ++y)
            for (int x = 0; x < grid_size; ++x) {
                const double dx = x - ox, dy = y - oy;
                if (dx * dx + dy * dy <= orad * orad) outlier.set(x, y, true);
            }
        if (intersection_area(outlier, truth) != 0)
            throw error("make_lozenge_set: outlier touches the lozenge");
        // Require a couple of pixels of clearance so a contour can pass between.
        double min_gap = 1e30;
        for (int y = 0; y < grid_size; ++y)
            for (int x = 0; x < grid_size; ++x) {
                if (!truth.at(x, y)) continue;
                const double dx = x - ox, dy = y - oy;
                min_gap = std::min(min_gap, std::sqrt(dx * dx + dy * dy) - orad);
            }
        if (min_gap < 2.0)
            throw error("make_lozenge_set: grid too small to separate the outlier from the lozenge");
        masks.push_back(outlier);
        names.push_back("outlier");
    }

    LozengeSet out;
    out.truth = truth;
    out.set = ShapeSet::from_masks(std::move(masks), std::move(names));
    return out;
}

}  // namespace mshape
