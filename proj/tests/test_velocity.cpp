#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mutualshape/velocity.hpp"
#include "oracles.hpp"

using namespace mshape;

namespace {

// Context with prescribed statistics on a one-pixel "grid": the shapes only
// feed d_i(x) lookups.
struct Fixture {
    ShapeSet set;
    BinaryMask mu;

    Fixture(std::vector<std::uint8_t> d_at_pixel) {
        RasterGrid g(1, 1);
        std::vector<BinaryMask> masks;
        for (std::uint8_t d : d_at_pixel) {
            BinaryMask m(g);
            m.values[0] = d;
            masks.push_back(m);
        }
        set = ShapeSet::from_masks(std::move(masks));
        mu = BinaryMask(g);
    }

    VelocityContext ctx(std::vector<double> p, std::vector<double> q, double work_area,
                        double lambda = 0.0, JointTable table = {0.25, 0.25, 0.25, 0.25}) const {
        QualityParams qp;
        qp.p = std::move(p);
        qp.q = std::move(q);
        JointProbs jp;
        jp.tables.assign(set.count(), table);
        return make_velocity_context(set, mu, qp, jp, work_area, lambda);
    }
};

}  // namespace

TEST_CASE("v_sd counts votes: n - 2k") {
    Fixture all1({1, 1, 1});
    CHECK(v_sd(all1.ctx({.5, .5, .5}, {.5, .5, .5}, 9), 0) == -3.0);
    Fixture none({0, 0, 0});
    CHECK(v_sd(none.ctx({.5, .5, .5}, {.5, .5, .5}, 9), 0) == 3.0);
    Fixture mixed({1, 1, 1, 0, 0});  // n=5, k=3
    CHECK(v_sd(mixed.ctx({.5, .5, .5, .5, .5}, {.5, .5, .5, .5, .5}, 9), 0) == -1.0);
}

TEST_CASE("v_mi vanishes at coin-flip statistics") {
    // With p = q = 1/2 the energy is flat in the region (H(D|T) = log 2
    // regardless of mu), so the velocity must be exactly zero. Verified by
    // finite differences: a configuration with p = q = 1/2 has dE = 0 for
    // balanced flips.
    for (std::uint8_t d : {0, 1}) {
        Fixture f({d});
        CHECK(v_mi(f.ctx({0.5}, {0.5}, 100.0), 0) == 0.0);
    }
}

TEST_CASE("v_mi hand evaluation: n=1, d=1, p=q=0.9, area 100") {
    Fixture f({1});
    // longhand: (p-K(0))·log(p/(1-p)) - (q-K(1))·log(q/(1-q)) - phi(p) + phi(q)
    const double k1 = std::exp(-50.0);
    const double L = std::log(0.9 / 0.1);
    const double expected = ((0.9 - 1.0) * L - (0.9 - k1) * L) / 100.0;  // phi terms cancel
    CHECK(v_mi(f.ctx({0.9}, {0.9}, 100.0), 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(-0.021972).epsilon(1e-4));
}

TEST_CASE("v_mi is invariant under input relabeling (d,p,q) -> (1-d,1-p,1-q)") {
    oracle::Rng rng(21);
    for (int t = 0; t < 40; ++t) {
        const double p = 0.05 + 0.9 * rng.uniform();
        const double q = 0.05 + 0.9 * rng.uniform();
        const std::uint8_t d = rng.coin() ? 1 : 0;
        Fixture a({d}), b({static_cast<std::uint8_t>(1 - d)});
        const double va = v_mi(a.ctx({p}, {q}, 64.0), 0);
        const double vb = v_mi(b.ctx({1.0 - p}, {1.0 - q}, 64.0), 0);
        CHECK(va == doctest::Approx(vb).epsilon(1e-10));
    }
}

TEST_CASE("v_jh pinned values") {
    SUBCASE("n=1, d=1, diagonal-heavy table, unit area") {
        Fixture f({1});
        const double v = v_jh(f.ctx({.5}, {.5}, 1.0, 0.0, {0.4, 0.1, 0.1, 0.4}), 0);
        CHECK(v == doctest::Approx(-std::log(4.0)).epsilon(1e-9));
    }
    SUBCASE("balanced log-ratios give zero") {
        for (std::uint8_t d : {0, 1}) {
            Fixture f({d});
            CHECK(v_jh(f.ctx({.5}, {.5}, 7.0, 0.0, {0.3, 0.3, 0.2, 0.2}), 0) == 0.0);
        }
    }
    SUBCASE("swapping the t-rows flips the sign") {
        Fixture f({1});
        const double a = v_jh(f.ctx({.5}, {.5}, 3.0, 0.0, {0.4, 0.1, 0.2, 0.3}), 0);
        const double b = v_jh(f.ctx({.5}, {.5}, 3.0, 0.0, {0.1, 0.4, 0.3, 0.2}), 0);
        CHECK(a == doctest::Approx(-b).epsilon(1e-12));
    }
}

TEST_CASE("statistical velocities scale as 1/area at fixed statistics") {
    Fixture f({1, 0});
    const JointTable t{0.37, 0.13, 0.08, 0.42};
    const double w = 144.0;
    const auto c1 = f.ctx({0.7, 0.3}, {0.8, 0.6}, w, 0.0, t);
    const auto c2 = f.ctx({0.7, 0.3}, {0.8, 0.6}, 2.0 * w, 0.0, t);
    CHECK(v_mi(c2, 0) == v_mi(c1, 0) / 2.0);
    CHECK(v_jh(c2, 0) == v_jh(c1, 0) / 2.0);
}

TEST_CASE("composite F") {
    RasterGrid g(16, 16);
    oracle::Rng rng(33);
    std::vector<BinaryMask> masks;
    for (int i = 0; i < 3; ++i) masks.push_back(oracle::random_blob_mask(g, rng));
    ShapeSet s = ShapeSet::from_masks(masks);
    BinaryMask mu = oracle::random_blob_mask(g, rng);
    RegionStats st = compute_region_stats(s, mu);
    QualityParams qp = quality_from_stats(st);
    JointProbs jp = joints_from_stats(st);
    LevelSetField u = init_from_mask(mu);

    SUBCASE("lambda = 0: mutual is exactly v_jh + v_mi, sd is exactly v_sd") {
        VelocityContext ctx =
            make_velocity_context(s, mu, qp, jp, static_cast<double>(st.work_area), 0.0);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                const std::size_t i = g.index(x, y);
                CHECK(composite_F(ctx, u, x, y, EvolveMode::mutual) == v_jh(ctx, i) + v_mi(ctx, i));
                CHECK(composite_F(ctx, u, x, y, EvolveMode::sd) == v_sd(ctx, i));
            }
    }
    SUBCASE("a pixel with a split vote and lambda = 0 has zero sd speed") {
        Fixture f({1, 0});
        CHECK(composite_F(f.ctx({.5, .5}, {.5, .5}, 4.0), init_from_mask(f.mu), 0, 0,
                          EvolveMode::sd) == 0.0);
    }
    SUBCASE("with lambda the curvature term enters with weight lambda/area") {
        VelocityContext ctx =
            make_velocity_context(s, mu, qp, jp, static_cast<double>(st.work_area), 10.0);
        CHECK(ctx.reg_weight == doctest::Approx(10.0 / st.work_area));
        for (int y = 2; y < 14; ++y)
            for (int x = 2; x < 14; ++x) {
                const std::size_t i = g.index(x, y);
                const double expect =
                    v_jh(ctx, i) + v_mi(ctx, i) + ctx.reg_weight * v_reg(u, x, y);
                CHECK(composite_F(ctx, u, x, y, EvolveMode::mutual) ==
                      doctest::Approx(expect).epsilon(1e-15));
            }
    }
}

TEST_CASE("stale statistics are detected") {
    RasterGrid g(8, 8);
    oracle::Rng rng(44);
    BinaryMask d = oracle::random_blob_mask(g, rng);
    BinaryMask mu = oracle::random_blob_mask(g, rng);
    ShapeSet s = ShapeSet::from_masks({d, d});
    RegionStats st = compute_region_stats(s, mu);
    VelocityContext ctx = make_velocity_context(s, mu, quality_from_stats(st),
                                                joints_from_stats(st),
                                                static_cast<double>(st.work_area), 1.0);
    CHECK_NOTHROW(ctx.verify_fresh(mu));
    BinaryMask moved = mu;
    moved.values[12] ^= 1;
    CHECK_THROWS_AS(ctx.verify_fresh(moved), std::logic_error);
}

TEST_CASE("single-pixel flips change the SD energy by exactly -(n-2k)") {
    oracle::Rng rng(55);
    RasterGrid g(16, 16);
    for (int t = 0; t < 8; ++t) {
        std::vector<BinaryMask> masks;
        const int n = rng.range(2, 5);
        for (int i = 0; i < n; ++i) masks.push_back(oracle::random_blob_mask(g, rng));
        ShapeSet s = ShapeSet::from_masks(masks);
        BinaryMask mu = oracle::random_blob_mask(g, rng);
        if (region_area(mu) == 0 || region_area(mu) == g.size()) continue;
        CHECK(oracle::sd_flip_exact_fraction(s, mu) == 1.0);
    }
}

TEST_CASE("velocities agree with finite differences of the discrete energy") {
    oracle::Rng rng(66);
    RasterGrid g(32, 32);
    int pooled_pixels = 0, pooled_agree = 0;
    for (int t = 0; t < 5; ++t) {
        std::vector<BinaryMask> masks;
        const int n = rng.range(2, 4);
        for (int i = 0; i < n; ++i) masks.push_back(oracle::random_blob_mask(g, rng));
        ShapeSet s = ShapeSet::from_masks(masks);
        BinaryMask mu = oracle::random_blob_mask(g, rng);
        const std::size_t area = region_area(mu);
        if (area == 0 || area == g.size()) continue;
        const oracle::GradCheck gc = oracle::gradient_check_it(s, mu);
        REQUIRE(gc.pixels > 0);
        CHECK(gc.sign_agreement >= 0.85);
        CHECK(gc.median_rel_err <= 0.15);
        pooled_pixels += gc.pixels;
        pooled_agree += static_cast<int>(std::lround(gc.sign_agreement * gc.pixels));
    }
    CHECK(pooled_pixels > 100);
    CHECK(pooled_agree >= static_cast<int>(0.9 * pooled_pixels));
}
