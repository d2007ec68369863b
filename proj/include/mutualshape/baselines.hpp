#pragma once

// Reference fusers to compare the evolved consensus against: majority vote,
// union, intersection and a plain binary STAPLE-EM (stationary scalar prior,
// no spatial regularization).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"

namespace mshape {

// Pixel joins the consensus iff at least half of the inputs contain it
// (ties at exactly n/2 included).
inline BinaryMask majority_vote(const ShapeSet& s) {
    BinaryMask out(s.grid);
    const std::size_t n = s.count();
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        std::size_t k = 0;
        for (const BinaryMask& m : s.masks) k += m.values[i];
        out.values[i] = (2 * k >= n) ? 1 : 0;
    }
    return out;
}

inline BinaryMask mask_union(const ShapeSet& s) {
    BinaryMask out(s.grid);
    for (const BinaryMask& m : s.masks)
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] |= m.values[i];
    return out;
}

inline BinaryMask mask_intersection(const ShapeSet& s) {
    BinaryMask out(s.grid, 1);
    for (const BinaryMask& m : s.masks)
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] &= m.values[i];
    return out;
}

struct StapleResult {
    ScalarField posterior;       // per-pixel P(true label = 1 | inputs)
    std::vector<double> p;       // per-input sensitivity
    std::vector<double> q;       // per-input specificity
    BinaryMask consensus;        // posterior >= 0.5
    std::uint64_t iterations = 0;
    bool converged = false;
    bool ambiguous = false;      // some pair of inputs are exact complements
};

// Binary STAPLE-EM. E-step: pixel posterior from the current p/q and a
// stationary prior fixed at the mean foreground fraction. M-step: p/q as
// posterior-weighted agreement rates. Stops when no parameter moves by more
// than `tol`. Initializing p=q=0.9 (rather than near 1) keeps the posterior
// from collapsing onto the majority band before the rater weights are learnt.
inline StapleResult staple_em(const ShapeSet& s, std::uint64_t max_em_iters = 100,
                              double tol = 1e-6, double eps = 1e-6, double init_pq = 0.9) {
    if (s.count() < 2) throw error("staple_em: need at least two input masks");
    const std::size_t n = s.count();
    const std::size_t total = s.grid.size();

    StapleResult res;
    res.posterior = ScalarField(s.grid);
    res.p.assign(n, init_pq);
    res.q.assign(n, init_pq);

    for (std::size_t i = 0; i < n && !res.ambiguous; ++i)
        for (std::size_t j = i + 1; j < n && !res.ambiguous; ++j) {
            bool comp = true;
            for (std::size_t x = 0; x < total; ++x)
                if (s.masks[i].values[x] == s.masks[j].values[x]) {
                    comp = false;
                    break;
                }
            res.ambiguous = comp;
        }

    double fg = 0.0;
    for (const BinaryMask& m : s.masks) fg += static_cast<double>(region_area(m));
    double prior = fg / (static_cast<double>(n) * static_cast<double>(total));
    prior = prior < eps ? eps : (prior > 1.0 - eps ? 1.0 - eps : prior);

    auto clamp = [&](double v) { return v < eps ? eps : (v > 1.0 - eps ? 1.0 - eps : v); };

    std::uint64_t it = 0;
    for (; it < max_em_iters; ++it) {
        // E-step
        for (std::size_t x = 0; x < total; ++x) {
            double a = prior, b = 1.0 - prior;
            for (std::size_t i = 0; i < n; ++i) {
                if (s.masks[i].values[x]) {
                    a *= res.p[i];
                    b *= 1.0 - res.q[i];
                } else {
                    a *= 1.0 - res.p[i];
                    b *= res.q[i];
                }
            }
            res.posterior.values[x] = a / (a + b);
        }
        // M-step
        double wsum = 0.0, cwsum = 0.0;
        for (std::size_t x = 0; x < total; ++x) {
            wsum += res.posterior.values[x];
            cwsum += 1.0 - res.posterior.values[x];
        }
        double max_delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double pw = 0.0, qw = 0.0;
            for (std::size_t x = 0; x < total; ++x) {
                const double w = res.posterior.values[x];
                if (s.masks[i].values[x])
                    pw += w;
                else
                    qw += 1.0 - w;
            }
            const double np = clamp(wsum > 0.0 ? pw / wsum : 0.5);
            const double nq = clamp(cwsum > 0.0 ? qw / cwsum : 0.5);
            max_delta = std::max(max_delta, std::fabs(np - res.p[i]));
            max_delta = std::max(max_delta, std::fabs(nq - res.q[i]));
            res.p[i] = np;
            res.q[i] = nq;
        }
        if (max_delta < tol) {
            res.converged = true;
            ++it;
            break;
        }
    }
    res.iterations = it;

    res.consensus = BinaryMask(s.grid);
    for (std::size_t x = 0; x < total; ++x)
        res.consensus.values[x] = res.posterior.values[x] >= 0.5 ? 1 : 0;
    return res;
}

}  // namespace mshape
