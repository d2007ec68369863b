// Command-line front end: consensus-shape estimation runs, baseline fusers,
// and the synthetic lozenge fixture generator. One run per invocation; every
// run echoes its resolved parameters to run.cfg in the output directory.
//
// Exit codes: 0 ok, 1 numerical/degenerate failure, 2 I/O or argument error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mutualshape/mutualshape.hpp"

namespace fs = std::filesystem;
using namespace mshape;

namespace {

struct InputOptions {
    std::vector<std::string> inputs;
    int threshold = 128;
    bool invert = false;
};

struct FuseOptions {
    InputOptions in;
    std::string out;
    std::string mode = "mutual";
    std::string init = "circle";
    double lambda = 10.0;
    double sigma = 0.1;
    double cfl = 0.45;
    std::uint64_t max_iters = 1000;
    std::uint64_t reinit_every = 20;
    std::uint64_t conv_window = 25;
    std::uint64_t conv_tol = 0;
    double radius = -1.0;
    double bubble_spacing = 16.0;
    double bubble_radius = 5.0;
    std::string working_mask;
    std::uint64_t snapshot_every = 0;
    bool dump_fields = false;
    std::string reference;  // evaluate only
};

struct BaselineOptions {
    InputOptions in;
    std::string out;
    std::string method = "vote";
    std::uint64_t em_iters = 100;
    double em_tol = 1e-6;
};

struct SynthOptions {
    std::string generator = "lozenge";
    std::string out;
    int size = 128;
    bool outlier = false;
};

std::string mask_name(const std::string& path, std::vector<std::string>& seen) {
    std::string base = fs::path(path).stem().string();
    if (base.empty()) base = "mask";
    std::string name = base;
    int k = 2;
    while (std::find(seen.begin(), seen.end(), name) != seen.end())
        name = base + "_" + std::to_string(k++);
    seen.push_back(name);
    return name;
}

ShapeSet load_inputs(const InputOptions& in, std::size_t min_count) {
    if (in.inputs.size() < min_count)
        throw error("need at least " + std::to_string(min_count) + " input masks, got " +
                    std::to_string(in.inputs.size()));
    std::vector<BinaryMask> masks;
    std::vector<std::string> names;
    std::vector<std::string> seen;
    for (const std::string& path : in.inputs) {
        if (!fs::exists(path)) throw io_error("input file not found: " + path);
        masks.push_back(load_mask(path, in.threshold, in.invert));
        names.push_back(mask_name(path, seen));
    }
    return ShapeSet::from_masks(std::move(masks), std::move(names));
}

void prepare_outdir(const std::string& out) {
    if (out.empty()) throw error("--out directory is required");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out))
        throw io_error("cannot create output directory '" + out + "'");
    // probe writability up front so failures are clean
    const std::string probe = (fs::path(out) / ".write_probe").string();
    {
        std::ofstream p(probe);
        if (!p) throw io_error("output directory '" + out + "' is not writable");
    }
    fs::remove(probe, ec);
}

std::string join(const std::vector<std::string>& v, const char* sep = ",") {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

int run_fuse(const FuseOptions& o, bool with_report) {
    ShapeSet set = load_inputs(o.in, 2);
    prepare_outdir(o.out);

    EvolutionConfig cfg;
    cfg.lambda = o.lambda;
    cfg.sigma = o.sigma;
    cfg.cfl = o.cfl;
    cfg.max_iters = o.max_iters;
    cfg.reinit_every = o.reinit_every;
    cfg.conv_window = o.conv_window;
    cfg.conv_tol = o.conv_tol;
    if (o.mode == "mutual")
        cfg.mode = EvolveMode::mutual;
    else if (o.mode == "sd")
        cfg.mode = EvolveMode::sd;
    else
        throw error("unknown --mode '" + o.mode + "' (expected mutual or sd)");

    double resolved_radius = o.radius;
    if (o.init == "circle") {
        cfg.init.kind = InitKind::circle;
        if (resolved_radius <= 0.0)
            resolved_radius = 0.36 * std::min(set.grid.width, set.grid.height);
        cfg.init.circle_radius = resolved_radius;
    } else if (o.init == "bubbles") {
        cfg.init.kind = InitKind::bubbles;
        cfg.init.bubble_spacing = o.bubble_spacing;
        cfg.init.bubble_radius = o.bubble_radius;
    } else if (o.init.rfind("mask:", 0) == 0) {
        const std::string path = o.init.substr(5);
        if (!fs::exists(path)) throw io_error("initializer mask not found: " + path);
        cfg.init.kind = InitKind::mask;
        cfg.init.mask = load_mask(path, o.in.threshold, o.in.invert);
    } else {
        throw error("unknown --init '" + o.init + "' (expected circle, bubbles or mask:PATH)");
    }
    if (!o.working_mask.empty()) {
        if (!fs::exists(o.working_mask)) throw io_error("working mask not found: " + o.working_mask);
        cfg.working_mask = load_mask(o.working_mask, o.in.threshold, o.in.invert);
    }

    std::vector<std::pair<std::string, std::string>> kv{
        {"command", with_report ? "evaluate" : "fuse"},
        {"inputs", join(o.in.inputs)},
        {"threshold", std::to_string(o.in.threshold)},
        {"invert", o.in.invert ? "1" : "0"},
        {"mode", o.mode},
        {"lambda", fmt(o.lambda)},
        {"sigma", fmt(o.sigma)},
        {"cfl", fmt(o.cfl)},
        {"max_iters", std::to_string(o.max_iters)},
        {"reinit_every", std::to_string(o.reinit_every)},
        {"conv_window", std::to_string(o.conv_window)},
        {"conv_tol", std::to_string(o.conv_tol)},
        {"init", o.init},
        {"circle_radius", fmt(resolved_radius)},
        {"bubble_spacing", fmt(o.bubble_spacing)},
        {"bubble_radius", fmt(o.bubble_radius)},
        {"working_mask", o.working_mask},
        {"snapshot_every", std::to_string(o.snapshot_every)},
        {"dump_fields", o.dump_fields ? "1" : "0"},
        {"out", o.out}};
    if (with_report) kv.emplace_back("reference", o.reference);
    write_text_file((fs::path(o.out) / "run.cfg").string(), format_run_cfg(kv));

    EvolutionHooks hooks;
    if (o.snapshot_every > 0) {
        const std::string dir = o.out;
        const std::uint64_t every = o.snapshot_every;
        const bool dump = o.dump_fields;
        hooks.on_iteration = [dir, every, dump](std::uint64_t iter, const LevelSetField& f) {
            if (iter % every != 0) return;
            char name[64];
            std::snprintf(name, sizeof(name), "snapshot_%06llu.pgm",
                          static_cast<unsigned long long>(iter));
            write_contour_snapshot((fs::path(dir) / name).string(), f);
            if (dump) {
                std::snprintf(name, sizeof(name), "levelset_%06llu",
                              static_cast<unsigned long long>(iter));
                save_field_raw((fs::path(dir) / name).string(), f.grid, f.u);
            }
        };
        if (o.dump_fields)
            hooks.on_speed = [dir, every](std::uint64_t iter, const RasterGrid& g,
                                          const std::vector<double>& speed) {
                if (iter % every != 0) return;
                char name[64];
                std::snprintf(name, sizeof(name), "speed_%06llu",
                              static_cast<unsigned long long>(iter));
                save_field_raw((fs::path(dir) / name).string(), g, speed);
            };
    } else if (o.dump_fields) {
        throw error("--dump-fields needs --snapshot-every to set the cadence");
    }

    EvolutionResult res;
    try {
        res = evolve(set, cfg, hooks);
    } catch (const degenerate_evolution_error& e) {
        // keep the partial trace around for post-mortems, then fail
        write_text_file((fs::path(o.out) / "trace.csv").string(), trace_to_csv(e.trace));
        throw;
    }

    save_mask((fs::path(o.out) / "consensus.pgm").string(), res.consensus);
    write_text_file((fs::path(o.out) / "pq.csv").string(),
                    format_pq_csv(set.names, res.quality.p, res.quality.q));
    write_text_file((fs::path(o.out) / "trace.csv").string(), trace_to_csv(res.trace));

    std::printf("%s: %s after %llu iterations, consensus area %llu of %llu px\n",
                with_report ? "evaluate" : "fuse",
                res.converged ? "converged" : "stopped at max-iters",
                static_cast<unsigned long long>(res.iterations),
                static_cast<unsigned long long>(region_area(res.consensus)),
                static_cast<unsigned long long>(set.grid.size()));
    for (std::size_t i = 0; i < set.count(); ++i)
        std::printf("  %-24s p=%.2f q=%.2f\n", set.names[i].c_str(), res.quality.p[i],
                    res.quality.q[i]);

    if (with_report) {
        std::vector<double> dc;
        if (!o.reference.empty()) {
            if (!fs::exists(o.reference)) throw io_error("reference mask not found: " + o.reference);
            BinaryMask ref = load_mask(o.reference, o.in.threshold, o.in.invert);
            for (const BinaryMask& m : set.masks) dc.push_back(dice(m, ref));
            std::printf("consensus dice vs reference: %.6g\n", dice(res.consensus, ref));
        }
        write_text_file((fs::path(o.out) / "report.csv").string(),
                        format_ranking_csv(set.names, res.quality.p, res.quality.q, dc));
    }
    return 0;
}

int run_baseline(const BaselineOptions& o) {
    ShapeSet set = load_inputs(o.in, 2);
    prepare_outdir(o.out);

    write_text_file((fs::path(o.out) / "run.cfg").string(),
                    format_run_cfg({{"command", "baseline"},
                                    {"method", o.method},
                                    {"inputs", join(o.in.inputs)},
                                    {"threshold", std::to_string(o.in.threshold)},
                                    {"invert", o.in.invert ? "1" : "0"},
                                    {"em_iters", std::to_string(o.em_iters)},
                                    {"em_tol", fmt(o.em_tol)},
                                    {"out", o.out}}));

    BinaryMask consensus;
    if (o.method == "vote") {
        consensus = majority_vote(set);
    } else if (o.method == "union") {
        consensus = mask_union(set);
    } else if (o.method == "intersection") {
        consensus = mask_intersection(set);
    } else if (o.method == "staple") {
        StapleResult st = staple_em(set, o.em_iters, o.em_tol);
        consensus = st.consensus;
        write_text_file((fs::path(o.out) / "pq.csv").string(),
                        format_pq_csv(set.names, st.p, st.q));
        std::printf("staple: %s after %llu iterations%s\n",
                    st.converged ? "converged" : "stopped at max-iters",
                    static_cast<unsigned long long>(st.iterations),
                    st.ambiguous ? " (ambiguous: complementary inputs)" : "");
    } else {
        throw error("unknown --method '" + o.method +
                    "' (expected vote, union, intersection or staple)");
    }
    save_mask((fs::path(o.out) / "consensus.pgm").string(), consensus);
    std::printf("baseline %s: consensus area %llu px, written to %s\n", o.method.c_str(),
                static_cast<unsigned long long>(region_area(consensus)), o.out.c_str());
    return 0;
}

int run_synth(const SynthOptions& o) {
    if (o.generator != "lozenge")
        throw error("unknown generator '" + o.generator + "' (expected lozenge)");
    prepare_outdir(o.out);
    LozengeSet loz = make_lozenge_set(o.size, o.outlier);

    write_text_file((fs::path(o.out) / "run.cfg").string(),
                    format_run_cfg({{"command", "synth"},
                                    {"generator", o.generator},
                                    {"size", std::to_string(o.size)},
                                    {"outlier", o.outlier ? "1" : "0"},
                                    {"out", o.out}}));

    save_mask((fs::path(o.out) / "truth.pgm").string(), loz.truth);
    std::string manifest = "size " + std::to_string(o.size) + "\n";
    manifest += "truth truth.pgm\n";
    for (std::size_t i = 0; i < loz.set.count(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "mask_%zu.pgm", i + 1);
        save_mask((fs::path(o.out) / name).string(), loz.set.masks[i]);
        manifest += "mask " + std::to_string(i + 1) + " " + loz.set.names[i] + " " + name + "\n";
    }
    write_text_file((fs::path(o.out) / "manifest.txt").string(), manifest);
    std::printf("synth lozenge: %zu masks on a %dx%d grid written to %s\n", loz.set.count(),
                o.size, o.size, o.out.c_str());
    return 0;
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
    cmd->fallthrough(true);
    cmd->add_option("--inputs", in.inputs, "Input segmentation masks (PGM P2/P5)")
        ->required()
        ->expected(-1);
    cmd->add_option("--threshold", in.threshold,
                    "Gray level at/above which a pixel is foreground (default 128)");
    cmd->add_flag("--invert", in.invert, "Treat dark pixels as foreground");
}

void add_fuse_options(CLI::App* cmd, FuseOptions& o) {
    add_input_options(cmd, o.in);
    cmd->add_option("--out", o.out, "Output directory")->required();
    cmd->add_option("--mode", o.mode, "Criterion: mutual (joint entropy + MI) or sd");
    cmd->add_option("--lambda", o.lambda, "Regularization weight (default 10)");
    cmd->add_option("--sigma", o.sigma, "Kernel width (default 0.1)");
    cmd->add_option("--cfl", o.cfl, "CFL number in (0,1] (default 0.45)");
    cmd->add_option("--max-iters", o.max_iters, "Iteration cap (default 1000)");
    cmd->add_option("--reinit-every", o.reinit_every, "Redistance period (default 20)");
    cmd->add_option("--conv-window", o.conv_window, "Convergence window (default 25)");
    cmd->add_option("--conv-tol", o.conv_tol,
                    "Mask-change pixels tolerated per iteration (default 0)");
    cmd->add_option("--init", o.init, "Initial contour: circle, bubbles or mask:PATH");
    cmd->add_option("--radius", o.radius, "Circle radius (default 0.36*min(w,h))");
    cmd->add_option("--bubble-spacing", o.bubble_spacing, "Bubble lattice spacing (default 16)");
    cmd->add_option("--bubble-radius", o.bubble_radius, "Bubble radius (default 5)");
    cmd->add_option("--working-mask", o.working_mask,
                    "Restrict statistics to this mask's foreground");
    cmd->add_option("--snapshot-every", o.snapshot_every,
                    "Write a contour snapshot every S iterations (0 = off)");
    cmd->add_flag("--dump-fields", o.dump_fields,
                  "Also dump the level-set field and the velocity field as float32 raw + "
                  "header on the snapshot cadence");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "mutualshape - consensus shape estimation from binary segmentations.\n"
        "Estimates a consensus region from N input masks by evolving a level-set\n"
        "contour, jointly estimating each input's sensitivity p and specificity q."};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Config file with key=value lines under a [subcommand] section "
                   "(flags take precedence)");
    app.footer(
        "Output files (all under --out):\n"
        "  consensus.pgm   final consensus mask (P5, foreground 255)\n"
        "  pq.csv          index,name,p,q           (final values, 2 decimals)\n"
        "  trace.csv       iter,jh,mi,reg,total,area,mask_change,p_1..p_n,q_1..q_n\n"
        "                  (energies in nats, 6 significant digits)\n"
        "  report.csv      rank,name,p,q,score[,dice]  (evaluate only, score = p+q)\n"
        "  run.cfg         key=value echo of every resolved parameter\n"
        "Exit codes: 0 ok, 1 numerical/degenerate failure, 2 I/O or argument error.");

    FuseOptions fuse_opts;
    CLI::App* fuse = app.add_subcommand("fuse", "Estimate a consensus shape from input masks");
    add_fuse_options(fuse, fuse_opts);

    FuseOptions eval_opts;
    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "Fuse, then rank the inputs by p+q (optionally with Dice vs a reference)");
    add_fuse_options(evaluate, eval_opts);
    evaluate->add_option("--reference", eval_opts.reference,
                         "Gold-standard mask for Dice columns (optional)");

    BaselineOptions base_opts;
    CLI::App* baseline = app.add_subcommand("baseline", "Run a reference fuser");
    add_input_options(baseline, base_opts.in);
    baseline->add_option("--out", base_opts.out, "Output directory")->required();
    baseline->add_option("--method", base_opts.method, "vote, union, intersection or staple");
    baseline->add_option("--em-iters", base_opts.em_iters, "STAPLE EM iteration cap (default 100)");
    baseline->add_option("--em-tol", base_opts.em_tol, "STAPLE EM convergence tolerance");

    SynthOptions synth_opts;
    CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic lozenge fixture");
    synth->fallthrough(true);
    synth->add_option("generator", synth_opts.generator, "Fixture family (lozenge)");
    synth->add_option("--size", synth_opts.size, "Grid size in pixels (default 128, min 64)");
    synth->add_flag("--outlier", synth_opts.outlier, "Add the disjoint outlier blob");
    synth->add_option("--out", synth_opts.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
        if (fuse->parsed()) return run_fuse(fuse_opts, false);
        if (evaluate->parsed()) return run_fuse(eval_opts, true);
        if (baseline->parsed()) return run_baseline(base_opts);
        if (synth->parsed()) return run_synth(synth_opts);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const degenerate_evolution_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const degenerate_region_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const numerical_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
