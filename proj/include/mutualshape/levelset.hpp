#pragma once

// Signed-distance level-set representation of the evolving contour. The
// region is {u < 0}; u > 0 outside; the contour is the zero crossing. With
// that convention ∇u points outward, the inward unit normal is -∇u/|∇u|, and
// a contour update dΓ/dτ = v·N becomes du/dτ = v·|∇u|: positive speeds
// shrink the region.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "core.hpp"

namespace mshape {

struct LevelSetField {
    RasterGrid grid;
    std::vector<double> u;

    LevelSetField() = default;
    explicit LevelSetField(const RasterGrid& g, double fill = 0.0) : grid(g), u(g.size(), fill) {}

    double at(int x, int y) const { return u[grid.index(x, y)]; }

    // Border handling for stencils: clamp the coordinate (replication).
    double at_clamped(int x, int y) const {
        x = x < 0 ? 0 : (x >= grid.width ? grid.width - 1 : x);
        y = y < 0 ? 0 : (y >= grid.height ? grid.height - 1 : y);
        return u[grid.index(x, y)];
    }
};

inline BinaryMask extract_mask(const LevelSetField& f) {
    BinaryMask m(f.grid);
    for (std::size_t i = 0; i < f.u.size(); ++i) m.values[i] = f.u[i] < 0.0 ? 1 : 0;
    return m;
}

// True when the zero level set is empty (all u on one side).
inline bool is_uniform_sign(const LevelSetField& f) {
    bool neg = false, nonneg = false;
    for (double v : f.u) {
        (v < 0.0 ? neg : nonneg) = true;
        if (neg && nonneg) return false;
    }
    return true;
}

namespace detail {

constexpr double kFarFactor = 10.0;

inline double far_value(const RasterGrid& g) { return g.width + g.height + kFarFactor; }

// Eikonal |∇d| = 1 solved by fast sweeping (4 sweep orders, repeated) with
// `dist` preinitialized to seed values near the interface and +far elsewhere.
// `frozen` marks seeds that must not be updated.
inline void fast_sweep(const RasterGrid& g, std::vector<double>& dist,
                       const std::vector<std::uint8_t>& frozen, int rounds = 2) {
    const int W = g.width, H = g.height;
    const double far = far_value(g);
    auto solve = [&](int x, int y) {
        if (frozen[g.index(x, y)]) return;
        double a = far, b = far;
        if (x > 0) a = std::min(a, dist[g.index(x - 1, y)]);
        if (x < W - 1) a = std::min(a, dist[g.index(x + 1, y)]);
        if (y > 0) b = std::min(b, dist[g.index(x, y - 1)]);
        if (y < H - 1) b = std::min(b, dist[g.index(x, y + 1)]);
        double cand;
        if (std::fabs(a - b) >= 1.0)
            cand = std::min(a, b) + 1.0;
        else
            cand = 0.5 * (a + b + std::sqrt(2.0 - (a - b) * (a - b)));
        double& d = dist[g.index(x, y)];
        if (cand < d) d = cand;
    };
    for (int r = 0; r < rounds; ++r) {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) solve(x, y);
        for (int y = 0; y < H; ++y)
            for (int x = W - 1; x >= 0; --x) solve(x, y);
        for (int y = H - 1; y >= 0; --y)
            for (int x = 0; x < W; ++x) solve(x, y);
        for (int y = H - 1; y >= 0; --y)
            for (int x = W - 1; x >= 0; --x) solve(x, y);
    }
}

}  // namespace detail

// Signed distance to the mask's label boundary, negative inside. Interface
// pixels sit half a pixel from the boundary between opposite labels, so the
// extracted mask reproduces the input exactly. A uniform mask yields a
// uniform-sign far field (degenerate; see is_uniform_sign).
inline LevelSetField init_from_mask(const BinaryMask& m) {
    const RasterGrid& g = m.grid;
    const int W = g.width, H = g.height;
    const double far = detail::far_value(g);
    LevelSetField f(g);
    std::vector<double> dist(g.size(), far);
    std::vector<std::uint8_t> frozen(g.size(), 0);
    bool any_interface = false;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            std::uint8_t v = m.at(x, y);
            bool iface = (x > 0 && m.at(x - 1, y) != v) || (x < W - 1 && m.at(x + 1, y) != v) ||
                         (y > 0 && m.at(x, y - 1) != v) || (y < H - 1 && m.at(x, y + 1) != v);
            if (iface) {
                dist[g.index(x, y)] = 0.5;
                frozen[g.index(x, y)] = 1;
                any_interface = true;
            }
        }
    if (!any_interface) {
        for (std::size_t i = 0; i < f.u.size(); ++i) f.u[i] = m.values[i] ? -far : far;
        return f;
    }
    detail::fast_sweep(g, dist, frozen);
    for (std::size_t i = 0; i < f.u.size(); ++i) f.u[i] = m.values[i] ? -dist[i] : dist[i];
    return f;
}

// Exact signed distance to a circle; pixel centers at integer coordinates.
inline LevelSetField init_circle(const RasterGrid& g, double cx, double cy, double radius) {
    if (radius <= 0.0) throw error("init_circle: radius must be positive");
    LevelSetField f(g);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            double dx = x - cx, dy = y - cy;
            f.u[g.index(x, y)] = std::sqrt(dx * dx + dy * dy) - radius;
        }
    return f;
}

// Lattice of small circles ("bubbles"); the field is the pointwise minimum of
// the per-circle signed distances.
inline LevelSetField init_bubbles(const RasterGrid& g, double spacing, double radius) {
    if (radius <= 0.0 || spacing <= 0.0)
        throw error("init_bubbles: spacing and radius must be positive");
    if (radius >= std::min(g.width, g.height))
        throw error("init_bubbles: radius " + std::to_string(radius) +
                    " does not fit a " + std::to_string(g.width) + "x" +
                    std::to_string(g.height) + " grid");
    LevelSetField f(g, detail::far_value(g));
    for (double cy = spacing * 0.5; cy < g.height; cy += spacing)
        for (double cx = spacing * 0.5; cx < g.width; cx += spacing)
            for (int y = 0; y < g.height; ++y)
                for (int x = 0; x < g.width; ++x) {
                    double dx = x - cx, dy = y - cy;
                    double d = std::sqrt(dx * dx + dy * dy) - radius;
                    double& v = f.u[g.index(x, y)];
                    if (d < v) v = d;
                }
    return f;
}

// Rebuild u as a signed distance function without moving its zero level set:
// pixels adjacent to a sign change are seeded with the linearly interpolated
// crossing distance, the rest is filled by fast sweeping. Signs are kept
// verbatim, so the extracted mask is unchanged. A field with no sign change
// is returned as is.
inline LevelSetField redistance(const LevelSetField& f) {
    const RasterGrid& g = f.grid;
    const int W = g.width, H = g.height;
    if (is_uniform_sign(f)) return f;

    const double far = detail::far_value(g);
    std::vector<double> dist(g.size(), far);
    std::vector<std::uint8_t> frozen(g.size(), 0);
    auto neg = [&](std::size_t i) { return f.u[i] < 0.0; };
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const std::size_t i = g.index(x, y);
            double best = far;
            auto probe = [&](int nx, int ny) {
                const std::size_t j = g.index(nx, ny);
                if (neg(i) == neg(j)) return;
                double denom = std::fabs(f.u[i]) + std::fabs(f.u[j]);
                double frac = denom > 0.0 ? std::fabs(f.u[i]) / denom : 0.5;
                best = std::min(best, std::max(frac, 1e-3));
            };
            if (x > 0) probe(x - 1, y);
            if (x < W - 1) probe(x + 1, y);
            if (y > 0) probe(x, y - 1);
            if (y < H - 1) probe(x, y + 1);
            if (best < far) {
                dist[i] = best;
                frozen[i] = 1;
            }
        }
    detail::fast_sweep(g, dist, frozen);
    LevelSetField out(g);
    for (std::size_t i = 0; i < out.u.size(); ++i) out.u[i] = neg(i) ? -dist[i] : dist[i];
    return out;
}

// Mean curvature div(∇u/|∇u|) from central differences, clamped to ±1/h with
// h = 1 px. Positive on the boundary of a convex {u<0} region. Degenerate
// gradients (flat regions, ridge lines) report 0.
inline double curvature_at(const LevelSetField& f, int x, int y, double eps_grad = 1e-8) {
    const double ux = 0.5 * (f.at_clamped(x + 1, y) - f.at_clamped(x - 1, y));
    const double uy = 0.5 * (f.at_clamped(x, y + 1) - f.at_clamped(x, y - 1));
    const double g2 = ux * ux + uy * uy;
    if (g2 <= eps_grad * eps_grad) return 0.0;
    const double uxx = f.at_clamped(x + 1, y) - 2.0 * f.at_clamped(x, y) + f.at_clamped(x - 1, y);
    const double uyy = f.at_clamped(x, y + 1) - 2.0 * f.at_clamped(x, y) + f.at_clamped(x, y - 1);
    const double uxy = 0.25 * (f.at_clamped(x + 1, y + 1) + f.at_clamped(x - 1, y - 1) -
                               f.at_clamped(x + 1, y - 1) - f.at_clamped(x - 1, y + 1));
    double kappa = (uxx * uy * uy - 2.0 * ux * uy * uxy + uyy * ux * ux) / std::pow(g2, 1.5);
    if (kappa > 1.0) kappa = 1.0;
    if (kappa < -1.0) kappa = -1.0;
    return kappa;
}

// Godunov upwind gradient magnitude for du/dτ = F|∇u|, selected by the sign
// of F. One-sided differences vanish at the border (replication).
inline double upwind_gradnorm_at(const LevelSetField& f, int x, int y, int speed_sign) {
    const double c = f.at_clamped(x, y);
    const double dmx = c - f.at_clamped(x - 1, y);
    const double dpx = f.at_clamped(x + 1, y) - c;
    const double dmy = c - f.at_clamped(x, y - 1);
    const double dpy = f.at_clamped(x, y + 1) - c;
    double gx2, gy2;
    if (speed_sign >= 0) {
        gx2 = std::min(dmx, 0.0) * std::min(dmx, 0.0) + std::max(dpx, 0.0) * std::max(dpx, 0.0);
        gy2 = std::min(dmy, 0.0) * std::min(dmy, 0.0) + std::max(dpy, 0.0) * std::max(dpy, 0.0);
    } else {
        gx2 = std::max(dmx, 0.0) * std::max(dmx, 0.0) + std::min(dpx, 0.0) * std::min(dpx, 0.0);
        gy2 = std::max(dmy, 0.0) * std::max(dmy, 0.0) + std::min(dpy, 0.0) * std::min(dpy, 0.0);
    }
    return std::sqrt(gx2 + gy2);
}

// Discrete eikonal residual of d = |u|: the Godunov gradient magnitude built
// from each axis' smaller neighbor, sqrt(Σ max(d - min(d_nbr), 0)²). This is
// the measure under which a signed distance function satisfies |∇u| = 1 away
// from the contour; plain central differences are meaningless on the ridge
// set (e.g. a disk's center), where any true distance field has a kink.
inline double eikonal_residual_at(const LevelSetField& f, int x, int y) {
    const RasterGrid& g = f.grid;
    const double d = std::fabs(f.u[g.index(x, y)]);
    double a = std::numeric_limits<double>::infinity();
    double b = std::numeric_limits<double>::infinity();
    if (x > 0) a = std::min(a, std::fabs(f.u[g.index(x - 1, y)]));
    if (x < g.width - 1) a = std::min(a, std::fabs(f.u[g.index(x + 1, y)]));
    if (y > 0) b = std::min(b, std::fabs(f.u[g.index(x, y - 1)]));
    if (y < g.height - 1) b = std::min(b, std::fabs(f.u[g.index(x, y + 1)]));
    const double gx = std::isfinite(a) ? std::max(d - a, 0.0) : 0.0;
    const double gy = std::isfinite(b) ? std::max(d - b, 0.0) : 0.0;
    return std::sqrt(gx * gx + gy * gy);
}

// Central-difference |∇u| (one-sided at the border); used by the smoothed
// contour-length integral and the redistancing quality checks.
inline double grad_norm_at(const LevelSetField& f, int x, int y) {
    const int W = f.grid.width, H = f.grid.height;
    double gx, gy;
    if (x == 0)
        gx = f.at(1, y) - f.at(0, y);
    else if (x == W - 1)
        gx = f.at(W - 1, y) - f.at(W - 2, y);
    else
        gx = 0.5 * (f.at(x + 1, y) - f.at(x - 1, y));
    if (y == 0)
        gy = f.at(x, 1) - f.at(x, 0);
    else if (y == H - 1)
        gy = f.at(x, H - 1) - f.at(x, H - 2);
    else
        gy = 0.5 * (f.at(x, y + 1) - f.at(x, y - 1));
    return std::sqrt(gx * gx + gy * gy);
}

// Pixels within `beta` of the zero level set, plus every pixel with a
// 4-neighbor of opposite sign. Velocities are evaluated here; the shape
// derivative lives on the contour and everything else gets F = 0.
inline std::vector<std::size_t> contour_band(const LevelSetField& f, double beta = 2.0) {
    const RasterGrid& g = f.grid;
    const int W = g.width, H = g.height;
    std::vector<std::size_t> band;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const std::size_t i = g.index(x, y);
            bool in = std::fabs(f.u[i]) <= beta;
            if (!in) {
                const bool n = f.u[i] < 0.0;
                in = (x > 0 && (f.u[g.index(x - 1, y)] < 0.0) != n) ||
                     (x < W - 1 && (f.u[g.index(x + 1, y)] < 0.0) != n) ||
                     (y > 0 && (f.u[g.index(x, y - 1)] < 0.0) != n) ||
                     (y < H - 1 && (f.u[g.index(x, y + 1)] < 0.0) != n);
            }
            if (in) band.push_back(i);
        }
    return band;
}

// Inside pixels adjacent to the zero crossing; used for contour overlays.
inline std::vector<std::size_t> contour_pixels(const LevelSetField& f) {
    const RasterGrid& g = f.grid;
    const int W = g.width, H = g.height;
    std::vector<std::size_t> out;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const std::size_t i = g.index(x, y);
            if (f.u[i] >= 0.0) continue;
            if ((x > 0 && f.u[g.index(x - 1, y)] >= 0.0) ||
                (x < W - 1 && f.u[g.index(x + 1, y)] >= 0.0) ||
                (y > 0 && f.u[g.index(x, y - 1)] >= 0.0) ||
                (y < H - 1 && f.u[g.index(x, y + 1)] >= 0.0))
                out.push_back(i);
        }
    return out;
}

}  // namespace mshape
