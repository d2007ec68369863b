#pragma once

// Run artifact writers shared by the command-line tool and the test suites,
// so that byte-level reproducibility can be asserted on exactly the files the
// tool emits: consensus.pgm, pq.csv, trace.csv, run.cfg, snapshots.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "evolution.hpp"
#include "levelset.hpp"
#include "pgm.hpp"

namespace mshape {

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw io_error("write failed for '" + path + "'");
}

// Final per-input quality parameters, two decimals (enough to read 1.00 /
// 0.25 / 0.94 style values at a glance; the full-precision history lives in
// trace.csv).
inline std::string format_pq_csv(const std::vector<std::string>& names,
                                 const std::vector<double>& p, const std::vector<double>& q) {
    std::string out = "index,name,p,q\n";
    char buf[160];
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%s,%.2f,%.2f\n", i + 1, names[i].c_str(), p[i], q[i]);
        out += buf;
    }
    return out;
}

// Inputs sorted by p+q (descending, ties by name): the evaluation ranking.
// `dice` may be empty; when given it adds a column of overlaps against a
// reference mask.
inline std::string format_ranking_csv(const std::vector<std::string>& names,
                                      const std::vector<double>& p, const std::vector<double>& q,
                                      const std::vector<double>& dice = {}) {
    std::vector<std::size_t> order(names.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = p[a] + q[a], sb = p[b] + q[b];
        if (sa != sb) return sa > sb;
        return names[a] < names[b];
    });
    std::string out = dice.empty() ? "rank,name,p,q,score\n" : "rank,name,p,q,score,dice\n";
    char buf[224];
    for (std::size_t r = 0; r < order.size(); ++r) {
        const std::size_t i = order[r];
        if (dice.empty())
            std::snprintf(buf, sizeof(buf), "%zu,%s,%.2f,%.2f,%.6g\n", r + 1, names[i].c_str(),
                          p[i], q[i], p[i] + q[i]);
        else
            std::snprintf(buf, sizeof(buf), "%zu,%s,%.2f,%.2f,%.6g,%.6g\n", r + 1,
                          names[i].c_str(), p[i], q[i], p[i] + q[i], dice[i]);
        out += buf;
    }
    return out;
}

// key=value echo of every resolved parameter, in the given order.
inline std::string format_run_cfg(const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

// Contour overlay: the region interior in mid-gray on black, contour pixels
// white.
inline void write_contour_snapshot(const std::string& path, const LevelSetField& f) {
    GrayImage img;
    img.grid = f.grid;
    img.values.assign(f.grid.size(), 0);
    for (std::size_t i = 0; i < f.u.size(); ++i)
        if (f.u[i] < 0.0) img.values[i] = 96;
    for (std::size_t i : contour_pixels(f)) img.values[i] = 255;
    save_pgm(path, img);
}

}  // namespace mshape
