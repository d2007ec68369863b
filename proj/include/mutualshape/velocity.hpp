#pragma once

// Pointwise normal velocities derived from the shape derivatives of the
// fusion criteria, and their weighted composition F. Positive velocity moves
// the contour along the inward normal (region shrinks).
//
// Statistics are frozen per iteration: a VelocityContext is built once from
// the current region and then queried per pixel. The per-mask coefficients
// only depend on d_i(x) ∈ {0,1}, so they are precomputed for both labels.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "criterion.hpp"
#include "levelset.hpp"

namespace mshape {

enum class EvolveMode { mutual, sd };

namespace detail {

inline std::uint64_t mask_digest(const BinaryMask& m) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (std::uint8_t v : m.values) {
        h ^= v;
        h *= 1099511628211ull;
    }
    h ^= m.values.size();
    return h;
}

}  // namespace detail

struct VelocityContext {
    const ShapeSet* shapes = nullptr;
    QualityParams qp;
    JointProbs jp;
    double work_area = 0.0;   // |Ω| of the working area
    double lambda = 0.0;      // regularization weight as configured
    double reg_weight = 0.0;  // λ/|Ω|, the curvature weight actually applied
    KernelSpec kernel_spec;

    // Per-mask velocity coefficients for d_i(x) = 1 / 0 (before the 1/|Ω|).
    std::vector<double> mi_d1, mi_d0;
    std::vector<double> jh_d1, jh_d0;

    std::uint64_t mu_digest = 0;

    std::size_t count() const { return shapes->count(); }
    bool d(std::size_t i, std::size_t pixel) const { return shapes->masks[i].values[pixel] != 0; }

    // The statistics must come from the region the velocity is evaluated on.
    void verify_fresh(const BinaryMask& mu) const {
        if (detail::mask_digest(mu) != mu_digest)
            throw std::logic_error("velocity context is stale: statistics were computed "
                                   "from a different region state");
    }
};

// The curvature term is weighted by λ/|Ω| so that it lives on the same scale
// as the statistical velocities, which carry an explicit 1/|Ω|.
inline VelocityContext make_velocity_context(const ShapeSet& s, const BinaryMask& mu,
                                             const QualityParams& qp, const JointProbs& jp,
                                             double work_area, double lambda,
                                             const KernelSpec& k = {}) {
    if (qp.p.size() != s.count() || jp.tables.size() != s.count())
        throw error("velocity context: statistics do not match the shape set");
    VelocityContext ctx;
    ctx.shapes = &s;
    ctx.qp = qp;
    ctx.jp = jp;
    ctx.work_area = work_area;
    ctx.lambda = lambda;
    ctx.reg_weight = lambda / work_area;
    ctx.kernel_spec = k;
    ctx.mu_digest = detail::mask_digest(mu);

    const double k1 = kernel(1.0, k);  // K(±1); K(0) = 1
    const std::size_t n = s.count();
    ctx.mi_d1.resize(n);
    ctx.mi_d0.resize(n);
    ctx.jh_d1.resize(n);
    ctx.jh_d0.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = qp.p[i], q = qp.q[i];
        const double lp = detail::logit(p), lq = detail::logit(q);
        const double base = -detail::phi(p) + detail::phi(q);
        ctx.mi_d1[i] = (p - 1.0) * lp - (q - k1) * lq + base;
        ctx.mi_d0[i] = (p - k1) * lp - (q - 1.0) * lq + base;
        const JointTable& t = jp.tables[i];
        const double lr1 = std::log(t.p11 / t.p10);
        const double lr0 = std::log(t.p01 / t.p00);
        ctx.jh_d1[i] = -(lr1 + k1 * lr0);
        ctx.jh_d0[i] = -(k1 * lr1 + lr0);
    }
    return ctx;
}

// Symmetric-difference velocity Σ_i (1 - 2 d_i(x)) = n - 2k.
inline double v_sd(const VelocityContext& ctx, std::size_t pixel) {
    std::int64_t k = 0;
    for (std::size_t i = 0; i < ctx.count(); ++i) k += ctx.d(i, pixel) ? 1 : 0;
    return static_cast<double>(static_cast<std::int64_t>(ctx.count()) - 2 * k);
}

// Velocity of the conditional-entropy (mutual-information surrogate) term:
// (1/|Ω|) Σ_i [ (p_i - K(d_i-1)) logit(p_i) - (q_i - K(d_i)) logit(q_i)
//               - φ(p_i) + φ(q_i) ].
inline double v_mi(const VelocityContext& ctx, std::size_t pixel) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ctx.count(); ++i)
        sum += ctx.d(i, pixel) ? ctx.mi_d1[i] : ctx.mi_d0[i];
    return sum / ctx.work_area;
}

// Velocity of the joint-entropy term:
// (-1/|Ω|) Σ_i [ K(d_i-1) log(p_i(1,1)/p_i(1,0)) + K(d_i) log(p_i(0,1)/p_i(0,0)) ].
inline double v_jh(const VelocityContext& ctx, std::size_t pixel) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ctx.count(); ++i)
        sum += ctx.d(i, pixel) ? ctx.jh_d1[i] : ctx.jh_d0[i];
    return sum / ctx.work_area;
}

// Curve-shortening velocity: the clamped contour curvature.
inline double v_reg(const LevelSetField& f, int x, int y) { return curvature_at(f, x, y); }

// Combined normal speed for one pixel.
inline double composite_F(const VelocityContext& ctx, const LevelSetField& f, int x, int y,
                          EvolveMode mode) {
    const std::size_t pixel = f.grid.index(x, y);
    const double reg = ctx.reg_weight != 0.0 ? ctx.reg_weight * v_reg(f, x, y) : 0.0;
    if (mode == EvolveMode::sd) return v_sd(ctx, pixel) + reg;
    return v_jh(ctx, pixel) + v_mi(ctx, pixel) + reg;
}

}  // namespace mshape
