#pragma once

// The outer optimization loop: explicit time stepping of du/dτ = F|∇u| with
// per-iteration CFL, joint re-estimation of the sensitivity/specificity
// statistics from the current region, scheduled redistancing, convergence
// detection on mask stasis, and a per-iteration trace. Fully deterministic:
// no randomness, sequential reductions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "criterion.hpp"
#include "levelset.hpp"
#include "velocity.hpp"

namespace mshape {

enum class InitKind { circle, bubbles, mask };

struct InitSpec {
    InitKind kind = InitKind::circle;
    // Circle: defaults (negative values) pick the grid center and a radius of
    // 0.36·min(width,height) — snug around a centered object. The criterion
    // is bistable: once |μ| passes roughly (|Ω|+|object|)/2 the "consensus is
    // the whole domain" basin takes over, so oversized initial circles are a
    // user error, not something the flow recovers from.
    double circle_cx = -1.0, circle_cy = -1.0, circle_radius = -1.0;
    double bubble_spacing = 16.0, bubble_radius = 5.0;
    std::optional<BinaryMask> mask;
};

struct EvolutionConfig {
    double lambda = 10.0;
    double sigma = 0.1;
    double cfl = 0.45;
    std::uint64_t max_iters = 1000;
    std::uint64_t reinit_every = 20;
    std::uint64_t conv_window = 25;
    std::uint64_t conv_tol = 0;  // pixels of mask change tolerated per iteration
    double clamp_eps = 1e-6;
    double band_beta = 2.0;
    EvolveMode mode = EvolveMode::mutual;
    InitSpec init;
    std::optional<BinaryMask> working_mask;
};

struct TraceRecord {
    std::uint64_t iter = 0;
    EnergyBreakdown energy;
    std::vector<double> p;
    std::vector<double> q;
    std::uint64_t area = 0;
    std::uint64_t mask_change = 0;
};

struct EvolutionTrace {
    std::vector<TraceRecord> records;
    std::size_t input_count = 0;
};

struct degenerate_evolution_error : error {
    degenerate_evolution_error(const std::string& what, EvolutionTrace t)
        : error(what), trace(std::move(t)) {}
    EvolutionTrace trace;
};

struct numerical_error : error {
    using error::error;
};

struct EvolutionResult {
    BinaryMask consensus;
    QualityParams quality;
    EvolutionTrace trace;
    std::uint64_t iterations = 0;
    bool converged = false;
};

// Optional observers; any may be empty.
struct EvolutionHooks {
    // After each completed iteration (post update), with the current field.
    std::function<void(std::uint64_t iter, const LevelSetField&)> on_iteration;
    // After each scheduled redistancing, with the field before and after.
    std::function<void(std::uint64_t iter, const LevelSetField& before, const LevelSetField& after)>
        post_redistance;
    // After the normal speeds are assembled, before the PDE update; the
    // per-pixel F values (zero off the contour band).
    std::function<void(std::uint64_t iter, const RasterGrid&, const std::vector<double>& speed)>
        on_speed;
};

// True once the extracted mask has changed by at most conv_tol pixels for
// conv_window consecutive recorded iterations.
inline bool check_convergence(const EvolutionTrace& trace, const EvolutionConfig& cfg) {
    if (trace.records.size() < cfg.conv_window) return false;
    for (std::size_t k = trace.records.size() - cfg.conv_window; k < trace.records.size(); ++k)
        if (trace.records[k].mask_change > cfg.conv_tol) return false;
    return true;
}

inline LevelSetField make_initial_levelset(const RasterGrid& grid, const InitSpec& init) {
    switch (init.kind) {
        case InitKind::circle: {
            double cx = init.circle_cx >= 0.0 ? init.circle_cx : 0.5 * (grid.width - 1);
            double cy = init.circle_cy >= 0.0 ? init.circle_cy : 0.5 * (grid.height - 1);
            double r = init.circle_radius > 0.0 ? init.circle_radius
                                                : 0.36 * std::min(grid.width, grid.height);
            return init_circle(grid, cx, cy, r);
        }
        case InitKind::bubbles:
            return init_bubbles(grid, init.bubble_spacing, init.bubble_radius);
        case InitKind::mask: {
            if (!init.mask) throw error("mask initializer selected but no mask given");
            require_same_grid(grid, init.mask->grid, "initial mask");
            return init_from_mask(*init.mask);
        }
    }
    throw error("unknown initializer");
}

inline std::string trace_to_csv(const EvolutionTrace& trace) {
    std::string out = "iter,jh,mi,reg,total,area,mask_change";
    for (std::size_t i = 1; i <= trace.input_count; ++i) out += ",p_" + std::to_string(i);
    for (std::size_t i = 1; i <= trace.input_count; ++i) out += ",q_" + std::to_string(i);
    out += "\n";
    char buf[64];
    for (const TraceRecord& r : trace.records) {
        out += energy_csv_row(r.iter, r.energy, r.area);
        std::snprintf(buf, sizeof(buf), ",%llu", static_cast<unsigned long long>(r.mask_change));
        out += buf;
        for (double v : r.p) {
            std::snprintf(buf, sizeof(buf), ",%.6g", v);
            out += buf;
        }
        for (double v : r.q) {
            std::snprintf(buf, sizeof(buf), ",%.6g", v);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

inline EvolutionResult evolve(const ShapeSet& s, const EvolutionConfig& cfg,
                              const LevelSetField& initial, const EvolutionHooks& hooks = {}) {
    if (s.count() < 2) throw error("evolve: need at least two input masks");
    require_same_grid(s.grid, initial.grid, "evolve initializer");
    const BinaryMask* work = cfg.working_mask ? &*cfg.working_mask : nullptr;
    if (work) require_same_grid(s.grid, work->grid, "evolve working mask");

    const KernelSpec kspec{cfg.sigma};
    const std::size_t total = s.grid.size();

    LevelSetField u = initial;
    EvolutionTrace trace;
    trace.input_count = s.count();

    BinaryMask prev_mask = extract_mask(u);
    BinaryMask mu = prev_mask;
    QualityParams qp;
    bool converged = false;
    std::uint64_t iter = 0;

    std::vector<double> speed(total, 0.0);

    for (; iter < cfg.max_iters; ++iter) {
        mu = extract_mask(u);
        const std::uint64_t area = region_area(mu);
        if (area == 0 || area == total)
            throw degenerate_evolution_error(
                "contour vanished at iteration " + std::to_string(iter) +
                    (area == 0 ? " (empty region)" : " (region covers the whole grid)"),
                std::move(trace));

        RegionStats stats = compute_region_stats(s, mu, work);
        if (stats.mu_area == 0 || stats.comp_area == 0)
            throw degenerate_evolution_error(
                "region degenerate inside the working area at iteration " + std::to_string(iter),
                std::move(trace));
        qp = quality_from_stats(stats, kspec, cfg.clamp_eps);
        JointProbs jp = joints_from_stats(stats, kspec, cfg.clamp_eps);

        EnergyBreakdown eb;
        eb.jh = energy_jh(jp);
        eb.mi_surrogate = energy_mi(qp, static_cast<double>(stats.mu_area),
                                    static_cast<double>(stats.comp_area),
                                    static_cast<double>(stats.work_area));
        eb.reg = contour_length(u);
        eb.total = cfg.mode == EvolveMode::mutual
                       ? eb.jh + eb.mi_surrogate + cfg.lambda * eb.reg
                       : static_cast<double>(energy_sd(s, mu)) + cfg.lambda * eb.reg;

        TraceRecord rec;
        rec.iter = iter;
        rec.energy = eb;
        rec.p = qp.p;
        rec.q = qp.q;
        rec.area = stats.mu_area;
        rec.mask_change = iter == 0 ? 0 : symmetric_difference_area(mu, prev_mask);
        trace.records.push_back(std::move(rec));
        prev_mask = mu;

        if (check_convergence(trace, cfg)) {
            converged = true;
            break;
        }

        VelocityContext ctx = make_velocity_context(s, mu, qp, jp,
                                                    static_cast<double>(stats.work_area),
                                                    cfg.lambda, kspec);
        ctx.verify_fresh(mu);

        const std::vector<std::size_t> band = contour_band(u, cfg.band_beta);
        std::fill(speed.begin(), speed.end(), 0.0);
        double max_speed = 0.0;
        for (std::size_t idx : band) {
            if (work && !work->values[idx]) {
                speed[idx] = 0.0;
                continue;
            }
            const int x = static_cast<int>(idx % s.grid.width);
            const int y = static_cast<int>(idx / s.grid.width);
            const double F = composite_F(ctx, u, x, y, cfg.mode);
            if (!std::isfinite(F))
                throw numerical_error("non-finite velocity at iteration " + std::to_string(iter));
            speed[idx] = F;
            max_speed = std::max(max_speed, std::fabs(F));
        }
        if (hooks.on_speed) hooks.on_speed(iter, s.grid, speed);
        const double dt = cfg.cfl / std::max(max_speed, 1e-12);

        LevelSetField next = u;
        for (std::size_t idx : band) {
            const double F = speed[idx];
            if (F == 0.0) continue;
            const int x = static_cast<int>(idx % s.grid.width);
            const int y = static_cast<int>(idx / s.grid.width);
            next.u[idx] = u.u[idx] + dt * F * upwind_gradnorm_at(u, x, y, F > 0.0 ? 1 : -1);
        }
        u = std::move(next);

        if (cfg.reinit_every > 0 && (iter + 1) % cfg.reinit_every == 0) {
            if (hooks.post_redistance) {
                LevelSetField before = u;
                u = redistance(u);
                hooks.post_redistance(iter, before, u);
            } else {
                u = redistance(u);
            }
        }
        if (hooks.on_iteration) hooks.on_iteration(iter, u);
    }

    EvolutionResult res;
    res.consensus = extract_mask(u);
    res.trace = std::move(trace);
    res.iterations = iter;
    res.converged = converged;
    const std::uint64_t final_area = region_area(res.consensus);
    if (final_area == 0 || final_area == total)
        throw degenerate_evolution_error("evolution ended with a degenerate region",
                                         std::move(res.trace));
    RegionStats final_stats = compute_region_stats(s, res.consensus, work);
    res.quality = quality_from_stats(final_stats, kspec, cfg.clamp_eps);
    return res;
}

inline EvolutionResult evolve(const ShapeSet& s, const EvolutionConfig& cfg,
                              const EvolutionHooks& hooks = {}) {
    return evolve(s, cfg, make_initial_levelset(s.grid, cfg.init), hooks);
}

}  // namespace mshape
