#include <doctest.h>

#include <cmath>

#include "mutualshape/evolution.hpp"
#include "mutualshape/synthetic.hpp"
#include "oracles.hpp"

using namespace mshape;

namespace {

EvolutionTrace fake_trace(const std::vector<std::uint64_t>& changes) {
    EvolutionTrace t;
    t.input_count = 1;
    for (std::size_t i = 0; i < changes.size(); ++i) {
        TraceRecord r;
        r.iter = i;
        r.mask_change = changes[i];
        r.p = {0.5};
        r.q = {0.5};
        t.records.push_back(r);
    }
    return t;
}

}  // namespace

TEST_CASE("check_convergence looks at the trailing window") {
    EvolutionConfig cfg;  // window 25, tol 0
    std::vector<std::uint64_t> quiet(25, 0);
    CHECK(check_convergence(fake_trace(quiet), cfg));
    CHECK_FALSE(check_convergence(fake_trace(std::vector<std::uint64_t>(24, 0)), cfg));

    std::vector<std::uint64_t> flicker(30, 2);  // two-pixel oscillation
    CHECK_FALSE(check_convergence(fake_trace(flicker), cfg));
    cfg.conv_tol = 2;
    CHECK(check_convergence(fake_trace(flicker), cfg));

    cfg.conv_tol = 0;
    std::vector<std::uint64_t> tail(40, 0);
    tail[10] = 5;  // a change before the trailing window does not matter
    EvolutionConfig w40 = cfg;
    w40.conv_window = 25;
    CHECK(check_convergence(fake_trace(tail), w40));
    tail[30] = 5;  // a change inside it does
    CHECK_FALSE(check_convergence(fake_trace(tail), w40));
}

TEST_CASE("two identical inputs with a matching initializer are a fixed point") {
    RasterGrid g(48, 48);
    BinaryMask blob(g);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x)
            if ((x - 20) * (x - 20) + (y - 25) * (y - 25) <= 81) blob.set(x, y, true);
    ShapeSet s = ShapeSet::from_masks({blob, blob});
    EvolutionConfig cfg;
    cfg.init.kind = InitKind::mask;
    cfg.init.mask = blob;
    EvolutionResult r = evolve(s, cfg);
    CHECK(r.converged);
    CHECK(r.iterations == cfg.conv_window - 1);  // immediate convergence
    CHECK(r.consensus == blob);
    CHECK(r.quality.p[0] == doctest::Approx(1.0 - 1e-6));
    CHECK(r.quality.q[0] == doctest::Approx(1.0 - 1e-6));
}

TEST_CASE("fewer than two inputs are rejected") {
    RasterGrid g(16, 16);
    ShapeSet s = ShapeSet::from_masks({BinaryMask(g, 1)});
    CHECK_THROWS_AS(evolve(s, EvolutionConfig{}), error);
}

TEST_CASE("a vanishing contour aborts with the trace attached") {
    RasterGrid g(32, 32);
    ShapeSet s = ShapeSet::from_masks({BinaryMask(g), BinaryMask(g)});  // encourage collapse
    EvolutionConfig cfg;
    cfg.mode = EvolveMode::sd;
    cfg.lambda = 0.0;
    try {
        evolve(s, cfg);
        FAIL("expected degenerate_evolution_error");
    } catch (const degenerate_evolution_error& e) {
        CHECK(e.trace.records.size() > 0);
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}

TEST_CASE("determinism: identical configs give identical traces and masks") {
    LozengeSet loz = make_lozenge_set(64, false);
    EvolutionConfig cfg;
    EvolutionResult a = evolve(loz.set, cfg);
    EvolutionResult b = evolve(loz.set, cfg);
    CHECK(a.consensus == b.consensus);
    CHECK(trace_to_csv(a.trace) == trace_to_csv(b.trace));
}

TEST_CASE("trace CSV layout") {
    LozengeSet loz = make_lozenge_set(64, false);
    EvolutionConfig cfg;
    cfg.max_iters = 30;
    cfg.conv_window = 5;
    EvolutionResult r = evolve(loz.set, cfg);
    const std::string csv = trace_to_csv(r.trace);
    CHECK(csv.rfind("iter,jh,mi,reg,total,area,mask_change,p_1,p_2,p_3,p_4,p_5,q_1,", 0) == 0);
    // one line per record plus the header
    std::size_t lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == r.trace.records.size() + 1);
}

TEST_CASE("hooks fire on schedule") {
    LozengeSet loz = make_lozenge_set(64, false);
    EvolutionConfig cfg;
    cfg.max_iters = 45;
    cfg.conv_window = 1000;  // do not converge early
    int iter_calls = 0, redist_calls = 0;
    EvolutionHooks hooks;
    hooks.on_iteration = [&](std::uint64_t, const LevelSetField&) { ++iter_calls; };
    hooks.post_redistance = [&](std::uint64_t it, const LevelSetField& before,
                                const LevelSetField& after) {
        ++redist_calls;
        CHECK((it + 1) % 20 == 0);
        CHECK(dice(extract_mask(before), extract_mask(after)) >= 0.98);
    };
    evolve(loz.set, cfg, hooks);
    CHECK(iter_calls == 45);
    CHECK(redist_calls == 2);
}

TEST_CASE("lozenge runs: energy descent and quality trajectories") {
    SUBCASE("mutual-mode total energy is non-increasing over 50-iteration windows") {
        LozengeSet loz = make_lozenge_set(128, false);
        EvolutionConfig cfg;
        EvolutionResult r = evolve(loz.set, cfg);
        const auto& recs = r.trace.records;
        REQUIRE(recs.size() > 60);
        for (std::size_t i = 0; i + 50 < recs.size(); ++i)
            CHECK(recs[i + 50].energy.total <= recs[i].energy.total * 1.02);
    }
    SUBCASE("sd-mode total energy is non-increasing over 50-iteration windows") {
        LozengeSet loz = make_lozenge_set(128, false);
        EvolutionConfig cfg;
        cfg.mode = EvolveMode::sd;
        EvolutionResult r = evolve(loz.set, cfg);
        const auto& recs = r.trace.records;
        REQUIRE(recs.size() > 60);
        for (std::size_t i = 0; i + 50 < recs.size(); ++i)
            CHECK(recs[i + 50].energy.total <= recs[i].energy.total * 1.02);
    }
    SUBCASE("the truth mask's sensitivity climbs monotonically toward 1") {
        LozengeSet loz = make_lozenge_set(128, true);
        EvolutionConfig cfg;
        EvolutionResult r = evolve(loz.set, cfg);
        const auto& recs = r.trace.records;
        for (std::size_t i = 1; i < recs.size(); ++i)
            CHECK(recs[i].p[0] >= recs[i - 1].p[0] - 0.02);
        CHECK(recs.back().p[0] >= 0.98);
        CHECK(recs.front().p[0] < 0.5);  // starts from the circle-based value
    }
}

TEST_CASE("a working mask rescales the specificity normalization") {
    LozengeSet loz = make_lozenge_set(64, true);
    EvolutionConfig cfg;
    EvolutionResult plain = evolve(loz.set, cfg);

    // working area: box around the union of the inputs
    BinaryMask work(loz.set.grid);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (x >= 8 && x < 60 && y >= 8 && y < 60) work.set(x, y, true);
    // the bistability ridge scales with the working area: the initial circle
    // must stay snug relative to |work|, not the full grid
    EvolutionConfig cfg2 = cfg;
    cfg2.working_mask = work;
    cfg2.init.circle_radius = 18.0;
    EvolutionResult restricted = evolve(loz.set, cfg2);

    CHECK(dice(restricted.consensus, loz.truth) >= 0.95);
    // a smaller complement makes the outlier's specificity penalty visible
    const std::size_t outlier_idx = loz.set.count() - 1;
    CHECK(restricted.quality.q[outlier_idx] < plain.quality.q[outlier_idx]);
}

TEST_CASE("disconnected objects survive fusion when seeded from a dilated union") {
    RasterGrid g(96, 96);
    auto disk = [&](BinaryMask& m, double cx, double cy, double r) {
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y, true);
    };
    BinaryMask truth(g), left(g), right(g), shifted(g);
    disk(truth, 28, 48, 14);
    disk(truth, 68, 48, 11);
    disk(left, 28, 48, 14);
    disk(right, 68, 48, 11);
    disk(shifted, 30, 49, 14);
    disk(shifted, 70, 49, 11);
    ShapeSet s = ShapeSet::from_masks({truth, left, right, shifted});

    // seed strictly outside every input: a contour placed exactly on one
    // input's boundary saturates that input's statistics and pins there
    BinaryMask seed(g);
    BinaryMask u = mask_union(s);
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) {
            bool hit = false;
            for (int dy = -3; dy <= 3 && !hit; ++dy)
                for (int dx = -3; dx <= 3 && !hit; ++dx)
                    if (g.contains(x + dx, y + dy) && u.at(x + dx, y + dy)) hit = true;
            seed.set(x, y, hit);
        }
    EvolutionConfig cfg;
    cfg.init.kind = InitKind::mask;
    cfg.init.mask = seed;
    EvolutionResult r = evolve(s, cfg);
    CHECK(r.converged);
    CHECK(dice(r.consensus, truth) >= 0.9);

    // both components are still present
    int components = 0;
    BinaryMask c = r.consensus;
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        if (!c.values[i]) continue;
        ++components;
        c.values[i] = 0;
        stack.push_back(i);
        while (!stack.empty()) {
            const std::size_t j = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(j % 96), y = static_cast<int>(j / 96);
            auto visit = [&](int nx, int ny) {
                if (!g.contains(nx, ny)) return;
                const std::size_t k = g.index(nx, ny);
                if (c.values[k]) {
                    c.values[k] = 0;
                    stack.push_back(k);
                }
            };
            visit(x - 1, y);
            visit(x + 1, y);
            visit(x, y - 1);
            visit(x, y + 1);
        }
    }
    CHECK(components == 2);
}

TEST_CASE("non-square grids evolve correctly") {
    RasterGrid g(144, 80);
    auto ellipse = [&](BinaryMask& m, double cx, double cy, double a, double b) {
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x) {
                const double dx = (x - cx) / a, dy = (y - cy) / b;
                if (dx * dx + dy * dy <= 1.0) m.set(x, y, true);
            }
    };
    BinaryMask truth(g), inner(g), shifted(g);
    ellipse(truth, 72, 40, 42, 20);
    ellipse(inner, 72, 40, 38, 17);
    ellipse(shifted, 75, 41, 42, 20);
    ShapeSet s = ShapeSet::from_masks({truth, inner, shifted});
    BinaryMask u = mask_union(s), seed(g);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            bool hit = false;
            for (int dy = -3; dy <= 3 && !hit; ++dy)
                for (int dx = -3; dx <= 3 && !hit; ++dx)
                    if (g.contains(x + dx, y + dy) && u.at(x + dx, y + dy)) hit = true;
            seed.set(x, y, hit);
        }
    EvolutionConfig cfg;
    cfg.init.kind = InitKind::mask;
    cfg.init.mask = seed;
    EvolutionResult r = evolve(s, cfg);
    CHECK(r.converged);
    CHECK(dice(r.consensus, truth) >= 0.95);
}

TEST_CASE("max_iters caps the run") {
    LozengeSet loz = make_lozenge_set(64, false);
    EvolutionConfig cfg;
    cfg.max_iters = 3;
    EvolutionResult r = evolve(loz.set, cfg);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
    CHECK(r.trace.records.size() == 3);
}
