#pragma once

// Probability estimates and energy terms for the consensus criteria: the
// Gaussian kernel, per-input sensitivity/specificity, joint label
// probabilities, the conditional-entropy surrogate of the mutual-information
// term, the joint-entropy term, the symmetric-difference energy, the phi
// information metric and the smoothed contour length. Energies are in nats.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "core.hpp"
#include "levelset.hpp"

namespace mshape {

// Peak-normalized Gaussian, K(0) = 1. Peak normalization (rather than unit
// integral) is what keeps the kernel sums in [0,1] and usable as
// probabilities.
struct KernelSpec {
    double sigma = 0.1;
};

inline double kernel(double x, const KernelSpec& k = {}) {
    return std::exp(-x * x / (2.0 * k.sigma * k.sigma));
}

namespace detail {

inline double clamp_prob(double v, double eps) {
    if (v < eps) return eps;
    if (v > 1.0 - eps) return 1.0 - eps;
    return v;
}

// p log p + (1-p) log(1-p); expects a clamped argument.
inline double phi(double p) { return p * std::log(p) + (1.0 - p) * std::log(1.0 - p); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace detail

// Contingency counts of one input mask against the consensus label t within
// the working area: n_ab = #{ d_i = a, t = b }.
struct ContingencyCounts {
    std::uint64_t n11 = 0, n10 = 0, n01 = 0, n00 = 0;
};

struct RegionStats {
    std::vector<ContingencyCounts> counts;  // one per input mask
    std::uint64_t mu_area = 0;              // |μ ∩ work|
    std::uint64_t comp_area = 0;            // |μ̄ ∩ work|
    std::uint64_t work_area = 0;            // |work| (grid size when unrestricted)
};

// One pass over the grid; `work` (optional) restricts every count and area
// to its foreground.
inline RegionStats compute_region_stats(const ShapeSet& s, const BinaryMask& mu,
                                        const BinaryMask* work = nullptr) {
    require_same_grid(s.grid, mu.grid, "compute_region_stats");
    if (work) require_same_grid(s.grid, work->grid, "compute_region_stats(work)");
    RegionStats st;
    st.counts.resize(s.count());
    const std::size_t total = s.grid.size();
    for (std::size_t i = 0; i < total; ++i) {
        if (work && !work->values[i]) continue;
        ++st.work_area;
        const bool t = mu.values[i] != 0;
        t ? ++st.mu_area : ++st.comp_area;
        for (std::size_t k = 0; k < s.count(); ++k) {
            const bool d = s.masks[k].values[i] != 0;
            ContingencyCounts& c = st.counts[k];
            if (d)
                t ? ++c.n11 : ++c.n10;
            else
                t ? ++c.n01 : ++c.n00;
        }
    }
    return st;
}

// Per-input sensitivity p_i and specificity q_i, clamped to [eps, 1-eps]
// before any logarithm touches them.
struct QualityParams {
    std::vector<double> p;
    std::vector<double> q;
    double eps = 1e-6;
};

inline QualityParams quality_from_stats(const RegionStats& st, const KernelSpec& k = {},
                                        double eps = 1e-6) {
    if (st.mu_area == 0 || st.comp_area == 0)
        throw degenerate_region_error("sensitivity/specificity need a nonempty region and complement");
    const double k1 = kernel(1.0, k);
    QualityParams qp;
    qp.eps = eps;
    qp.p.reserve(st.counts.size());
    qp.q.reserve(st.counts.size());
    for (const ContingencyCounts& c : st.counts) {
        // Σ_{x∈μ} K(d_i-1) = n11·K(0) + n01·K(1), and the μ̄ analogue for q.
        double p = (c.n11 + k1 * c.n01) / static_cast<double>(st.mu_area);
        double q = (c.n00 + k1 * c.n10) / static_cast<double>(st.comp_area);
        qp.p.push_back(detail::clamp_prob(p, eps));
        qp.q.push_back(detail::clamp_prob(q, eps));
    }
    return qp;
}

inline QualityParams sensitivity_specificity(const ShapeSet& s, const BinaryMask& mu,
                                             const KernelSpec& k = {},
                                             const BinaryMask* work = nullptr,
                                             double eps = 1e-6) {
    return quality_from_stats(compute_region_stats(s, mu, work), k, eps);
}

// Joint probabilities p(d_i = a, t = b) per input, normalized by the
// working-area size, each entry clamped to [eps, 1-eps].
struct JointTable {
    double p11 = 0, p10 = 0, p01 = 0, p00 = 0;
};

struct JointProbs {
    std::vector<JointTable> tables;
    double eps = 1e-6;
};

inline JointProbs joints_from_stats(const RegionStats& st, const KernelSpec& k = {},
                                    double eps = 1e-6) {
    const double k1 = kernel(1.0, k);
    const double W = static_cast<double>(st.work_area);
    JointProbs jp;
    jp.eps = eps;
    jp.tables.reserve(st.counts.size());
    for (const ContingencyCounts& c : st.counts) {
        JointTable t;
        t.p11 = detail::clamp_prob((c.n11 + k1 * c.n01) / W, eps);
        t.p01 = detail::clamp_prob((c.n01 + k1 * c.n11) / W, eps);
        t.p10 = detail::clamp_prob((c.n10 + k1 * c.n00) / W, eps);
        t.p00 = detail::clamp_prob((c.n00 + k1 * c.n10) / W, eps);
        jp.tables.push_back(t);
    }
    return jp;
}

inline JointProbs joint_probs(const ShapeSet& s, const BinaryMask& mu, const KernelSpec& k = {},
                              const BinaryMask* work = nullptr, double eps = 1e-6) {
    return joints_from_stats(compute_region_stats(s, mu, work), k, eps);
}

// Σ_i H(D_i | T): the part of -Σ_i I(D_i,T) that depends on the region (the
// marginal entropies H(D_i) are constants and dropped). Nonnegative, at most
// log 2 per input.
inline double energy_mi(const QualityParams& qp, double mu_area, double comp_area,
                        double work_area) {
    double e = 0.0;
    for (std::size_t i = 0; i < qp.p.size(); ++i)
        e -= (mu_area / work_area) * detail::phi(qp.p[i]) +
             (comp_area / work_area) * detail::phi(qp.q[i]);
    return e;
}

// Σ_i H(D_i, T); each term is in [0, log 4].
inline double energy_jh(const JointProbs& jp) {
    double e = 0.0;
    for (const JointTable& t : jp.tables)
        e -= t.p11 * std::log(t.p11) + t.p10 * std::log(t.p10) + t.p01 * std::log(t.p01) +
             t.p00 * std::log(t.p00);
    return e;
}

// Σ_i |Ω_i △ μ|, exact in integers.
inline std::uint64_t energy_sd(const ShapeSet& s, const BinaryMask& mu) {
    std::uint64_t e = 0;
    for (const BinaryMask& m : s.masks) e += symmetric_difference_area(m, mu);
    return e;
}

// phi(X,Y) = H(X,Y) - I(X,Y) = H(X|Y) + H(Y|X): an information metric on
// random labels (nonnegative, symmetric, zero iff X = Y a.s., triangle
// inequality). Input is an exact 2x2 pmf; zero cells contribute 0·log 0 = 0
// so that identity of indiscernibles holds exactly.
struct JointPmf2x2 {
    // p[a][b] = P(X = a, Y = b)
    double p00 = 0, p01 = 0, p10 = 0, p11 = 0;
};

inline double phi_metric(const JointPmf2x2& j) {
    const double sum = j.p00 + j.p01 + j.p10 + j.p11;
    if (j.p00 < -1e-12 || j.p01 < -1e-12 || j.p10 < -1e-12 || j.p11 < -1e-12 ||
        std::fabs(sum - 1.0) > 1e-9)
        throw error("phi_metric: input is not a probability table");
    const double hxy = -(detail::xlogx(j.p00) + detail::xlogx(j.p01) + detail::xlogx(j.p10) +
                         detail::xlogx(j.p11));
    const double hx = -(detail::xlogx(j.p00 + j.p01) + detail::xlogx(j.p10 + j.p11));
    const double hy = -(detail::xlogx(j.p00 + j.p10) + detail::xlogx(j.p01 + j.p11));
    // H(X,Y) - I(X,Y) with I = H(X) + H(Y) - H(X,Y).
    return 2.0 * hxy - hx - hy;
}

// Smoothed-Dirac contour length Σ δ_β(u)|∇u| with a linear hat of half-width
// beta; accurate when u is close to a signed distance function.
inline double contour_length(const LevelSetField& f, double beta = 1.5) {
    double total = 0.0;
    for (int y = 0; y < f.grid.height; ++y)
        for (int x = 0; x < f.grid.width; ++x) {
            const double u = f.at(x, y);
            if (std::fabs(u) >= beta) continue;
            const double delta = (1.0 - std::fabs(u) / beta) / beta;
            total += delta * grad_norm_at(f, x, y);
        }
    return total;
}

// Energy report for one contour state. `total` is the mode's objective:
// jh + mi + λ·reg for the mutual criterion, sd + λ·reg for the
// symmetric-difference one.
struct EnergyBreakdown {
    double jh = 0.0;
    double mi_surrogate = 0.0;
    double reg = 0.0;
    double total = 0.0;
};

inline std::string energy_csv_row(std::uint64_t iter, const EnergyBreakdown& eb,
                                  std::uint64_t area) {
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%llu,%.6g,%.6g,%.6g,%.6g,%llu",
                  static_cast<unsigned long long>(iter), eb.jh, eb.mi_surrogate, eb.reg, eb.total,
                  static_cast<unsigned long long>(area));
    return std::string(buf);
}

}  // namespace mshape
