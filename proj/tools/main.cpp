// structlim — command line workbench for structural limits of finite
// relational structures: formula densities, ball statistics, convergence
// diagnostics, back-and-forth games, and measurable graphings.
//
// Exit codes: 0 success, 2 usage or formula syntax error, 3 input error
// (missing/malformed files, out-of-range parameters, exceeded budgets).
//
// Every report echoes the tool version, the effective parameters, and the
// seed of any randomized step; identical invocations produce byte-identical
// reports. `--json` renders the same content as a single JSON object.

#include "structlim/canonical.hpp"
#include "structlim/convergence.hpp"
#include "structlim/density.hpp"
#include "structlim/errors.hpp"
#include "structlim/formula.hpp"
#include "structlim/graphing.hpp"
#include "structlim/io.hpp"
#include "structlim/local_bs.hpp"
#include "structlim/rational.hpp"
#include "structlim/structure.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using structlim::BallCode;
using structlim::BallDistribution;
using structlim::Formula;
using structlim::Rational;
using structlim::Structure;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "structlim 0.1.0";

// ---------------------------------------------------------------------------
// Report assembly: text and JSON views of the same key/value content. The
// text is accumulated into one string and written once, so identical runs
// emit identical bytes.

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

struct Report {
    bool as_json = false;
    std::string text;
    ordered_json json;

    explicit Report(const std::string& command, bool as_json_) : as_json(as_json_) {
        kv("version", std::string(kVersion));
        kv("command", command);
    }

    void raw_line(const std::string& s) {
        text += s;
        text += '\n';
    }
    void kv(const std::string& key, const std::string& value) {
        raw_line(key + ": " + value);
        json[key] = value;
    }
    void kv(const std::string& key, const char* value) { kv(key, std::string(value)); }
    void kv(const std::string& key, std::int64_t value) {
        raw_line(key + ": " + std::to_string(value));
        json[key] = value;
    }
    void kv(const std::string& key, int value) { kv(key, static_cast<std::int64_t>(value)); }
    void kv(const std::string& key, std::uint64_t value) {
        raw_line(key + ": " + std::to_string(value));
        json[key] = value;
    }
    void kv(const std::string& key, bool value) {
        raw_line(key + ": " + (value ? "true" : "false"));
        json[key] = value;
    }
    /// A rational printed exactly, with a decimal companion in the JSON.
    void kv(const std::string& key, const Rational& value) {
        raw_line(key + ": " + structlim::rational_string(value));
        json[key] = structlim::rational_string(value);
    }
    void blank() { text += '\n'; }

    void emit() const {
        std::string out = as_json ? json.dump(2) + "\n" : text;
        std::fwrite(out.data(), 1, out.size(), stdout);
    }
};

// ---------------------------------------------------------------------------
// Shared option plumbing.

struct CommonOpts {
    bool json = false;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_flag("--json", o.json, "emit the report as a JSON object");
    cmd->add_option("--threads", o.threads, "worker threads (never changes results)")
        ->check(CLI::Range(1, 256))
        ->capture_default_str();
}

Structure load(const std::string& path) { return structlim::load_structure(path); }

Formula parse_against(const std::string& text, const Structure& s) {
    return structlim::parse_formula(text, s.signature_ptr());
}

Rational rational_arg(const std::string& text, const std::string& flag) {
    try {
        return structlim::parse_rational(text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(flag + ": " + e.what());
    }
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

void emit_distribution(Report& rep, const std::map<BallCode, Rational>& freq,
                       const char* json_key) {
    ordered_json arr = ordered_json::array();
    for (const auto& [code, fr] : freq) {
        rep.raw_line(code.hex() + " " + structlim::rational_string(fr));
        arr.push_back({{"code", code.hex()}, {"frequency", structlim::rational_string(fr)}});
    }
    rep.json[json_key] = std::move(arr);
}

// ---------------------------------------------------------------------------
// eval: evaluate a formula at an explicit assignment.

struct EvalOpts {
    CommonOpts common;
    std::string formula;
    std::string file;
    std::vector<std::string> bindings;
};

int cmd_eval(const EvalOpts& o) {
    Structure s = load(o.file);
    Formula f = parse_against(o.formula, s);

    std::vector<std::pair<std::string, int>> assignment;
    for (const auto& b : o.bindings) {
        auto eq = b.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("--set expects VAR=ELEMENT, got '" + b + "'");
        std::string var = b.substr(0, eq);
        std::string elem = b.substr(eq + 1);
        assignment.emplace_back(var, s.element_by_label(elem));
    }

    bool value = structlim::satisfies(s, f, assignment);

    Report rep("eval", o.common.json);
    rep.kv("structure", o.file);
    rep.kv("size", s.size());
    rep.kv("formula", f.to_string());
    rep.kv("free-variables", join_words(f.free_variables()));
    ordered_json jassign = ordered_json::object();
    std::string tassign;
    for (const auto& [var, idx] : assignment) {
        if (!tassign.empty()) tassign += ' ';
        tassign += var + "=" + s.label(idx);
        jassign[var] = s.label(idx);
    }
    rep.raw_line("assignment: " + tassign);
    rep.json["assignment"] = std::move(jassign);
    rep.kv("result", value);
    rep.emit();
    return 0;
}

// ---------------------------------------------------------------------------
// density: exact or sampled Stone pairing of a formula in each structure.

struct DensityOpts {
    CommonOpts common;
    std::string formula;
    std::vector<std::string> files;
    bool exact = false;
    std::int64_t samples = -1;
    std::uint64_t seed = 0;
    std::uint64_t budget = 100'000'000;
    int pad = -1;
};

int cmd_density(const DensityOpts& o) {
    bool sampled = o.samples >= 0;
    if (sampled && o.samples <= 0)
        throw std::invalid_argument("--samples must be positive");

    std::vector<Structure> structures;
    structures.reserve(o.files.size());
    for (const auto& path : o.files) structures.push_back(load(path));

    Formula f = parse_against(o.formula, structures.front());

    Report rep("density", o.common.json);
    rep.kv("formula", f.to_string());
    rep.kv("free-variables", join_words(f.free_variables()));
    rep.kv("mode", sampled ? "sampled" : "exact");
    if (sampled) {
        rep.kv("samples", o.samples);
        rep.kv("seed", o.seed);
    } else {
        rep.kv("budget", o.budget);
    }
    if (o.pad >= 0) rep.kv("pad", o.pad);
    rep.kv("threads", o.common.threads);
    rep.kv("structures", static_cast<std::int64_t>(structures.size()));

    ordered_json records = ordered_json::array();
    for (std::size_t i = 0; i < structures.size(); ++i) {
        const Structure& s = structures[i];
        structlim::DensityValue v;
        if (sampled) {
            v = structlim::density_sampled(s, f, o.samples, o.seed, o.common.threads);
        } else {
            structlim::DensityOptions dopts;
            dopts.budget = o.budget;
            dopts.threads = o.common.threads;
            dopts.pad_to = o.pad;
            try {
                v = structlim::density_exact(s, f, dopts);
            } catch (const structlim::budget_error& e) {
                throw structlim::budget_error(std::string(e.what()) +
                                              "; rerun with --samples N for a sampled estimate");
            }
        }

        rep.blank();
        rep.raw_line("structure: " + o.files[i]);
        rep.raw_line("size: " + std::to_string(s.size()));
        rep.raw_line("value: " + structlim::rational_string(v.value));
        rep.raw_line("decimal: " + fixed6(structlim::to_double(v.value)));
        ordered_json record = {{"structure", o.files[i]},
                               {"size", s.size()},
                               {"value", structlim::rational_string(v.value)},
                               {"decimal", fixed6(structlim::to_double(v.value))}};
        if (sampled) {
            rep.raw_line("confidence-radius: " + fixed6(v.conf_radius));
            record["confidence-radius"] = fixed6(v.conf_radius);
        }
        records.push_back(std::move(record));
    }
    rep.json["records"] = std::move(records);
    rep.emit();
    return 0;
}

// ---------------------------------------------------------------------------
// balls: the r-ball code distribution of one structure.

struct BallsOpts {
    CommonOpts common;
    std::string file;
    int radius = 1;
};

int cmd_balls(const BallsOpts& o) {
    Structure s = load(o.file);
    BallDistribution dist = structlim::ball_distribution(s, o.radius, o.common.threads);

    Report rep("balls", o.common.json);
    rep.kv("structure", o.file);
    rep.kv("size", s.size());
    rep.kv("radius", o.radius);
    rep.kv("threads", o.common.threads);
    rep.kv("codes", static_cast<std::int64_t>(dist.freq.size()));
    emit_distribution(rep, dist.freq, "distribution");
    rep.emit();
    return 0;
}

// ---------------------------------------------------------------------------
// rho: neighborhood metric between two rooted structures.

struct RhoOpts {
    CommonOpts common;
    std::string left_file, left_root, right_file, right_root;
};

int cmd_rho(const RhoOpts& o) {
    Structure a = load(o.left_file);
    Structure b = load(o.right_file);
    int ra = a.element_by_label(o.left_root);
    int rb = b.element_by_label(o.right_root);
    Rational value = structlim::rho(a, ra, b, rb);

    Report rep("rho", o.common.json);
    rep.kv("left", o.left_file);
    rep.kv("left-size", a.size());
    rep.kv("left-root", a.label(ra));
    rep.kv("right", o.right_file);
    rep.kv("right-size", b.size());
    rep.kv("right-root", b.label(rb));
    rep.kv("value", value);
    rep.kv("decimal", fixed6(structlim::to_double(value)));
    rep.emit();
    return 0;
}

// ---------------------------------------------------------------------------
// tv: total variation distance between two r-ball distributions.

struct TvOpts {
    CommonOpts common;
    std::string left_file, right_file;
    int radius = 1;
};

int cmd_tv(const TvOpts& o) {
    Structure a = load(o.left_file);
    Structure b = load(o.right_file);
    BallDistribution da = structlim::ball_distribution(a, o.radius, o.common.threads);
    BallDistribution db = structlim::ball_distribution(b, o.radius, o.common.threads);
    Rational value = structlim::tv_distance(da, db);

    Report rep("tv", o.common.json);
    rep.kv("left", o.left_file);
    rep.kv("left-size", a.size());
    rep.kv("left-codes", static_cast<std::int64_t>(da.freq.size()));
    rep.kv("right", o.right_file);
    rep.kv("right-size", b.size());
    rep.kv("right-codes", static_cast<std::int64_t>(db.freq.size()));
    rep.kv("radius", o.radius);
    rep.kv("threads", o.common.threads);
    rep.kv("value", value);
    rep.kv("decimal", fixed6(structlim::to_double(value)));
    rep.emit();
    return 0;
}

// ---------------------------------------------------------------------------
// ef: elementary (back-and-forth) distance between two structures.

struct EfOpts {
    CommonOpts common;
    std::string left_file, right_file;
    int kmax = 3;
};

int cmd_ef(const EfOpts& o) {
    Structure a = load(o.left_file);
    Structure b = load(o.right_file);
    structlim::ElementaryDistance d = structlim::elementary_distance(a, b, o.kmax);

    Report rep("ef", o.common.json);
    rep.kv("left", o.left_file);
    rep.kv("left-size", a.size());
    rep.kv("right", o.right_file);
    rep.kv("right-size", b.size());
    rep.kv("kmax", o.kmax);
    rep.kv("distance", d.to_string());
    switch (d.kind) {
        case structlim::ElementaryDistance::Kind::Zero:
            rep.kv("separating-rank", "none (isomorphic)");
            break;
        case structlim::ElementaryDistance::Kind::Exact:
            rep.kv("separating-rank", d.k);
            break;
        case structlim::ElementaryDistance::Kind::UpperBound:
            rep.kv("separating-rank", "> " + std::to_string(d.k));
            break;
    }
    rep.emit();
    return 0;
}

// ---------------------------------------------------------------------------
// converge: convergence diagnostics over a manifest of structures.

struct ConvergeOpts {
    CommonOpts common;
    std::string manifest;
    std::vector<std::string> formulas;
    int rmax = 2;
    int kmax = 3;
    std::string epsilon = "1/100";
    int window = 5;
    std::int64_t samples = 100'000;
    std::uint64_t seed = 0;
    std::uint64_t budget = 100'000'000;
};

void report_verdict(Report& rep, ordered_json& block, const std::string& indent,
                    const structlim::ConvergenceVerdict& v) {
    rep.raw_line(indent + "verdict: " + structlim::verdict_name(v.status));
    rep.raw_line(indent + "max-gap: " + structlim::rational_string(v.max_gap));
    rep.raw_line(indent + "witness: " + v.witness);
    block["verdict"] = structlim::verdict_name(v.status);
    block["max-gap"] = structlim::rational_string(v.max_gap);
    block["witness"] = v.witness;
}

int cmd_converge(const ConvergeOpts& o) {
    Rational epsilon = rational_arg(o.epsilon, "--epsilon");
    structlim::Manifest manifest = structlim::load_manifest(o.manifest);
    if (manifest.paths.empty()) throw structlim::file_error("manifest lists no structures: " + o.manifest);

    std::vector<Structure> seq;
    seq.reserve(manifest.paths.size());
    for (const auto& p : manifest.paths) seq.push_back(structlim::load_structure(p));

    Report rep("converge", o.common.json);
    rep.kv("manifest", o.manifest);
    rep.kv("structures", static_cast<std::int64_t>(seq.size()));
    rep.kv("labels", join_words(manifest.labels));
    rep.kv("epsilon", epsilon);
    rep.kv("window", o.window);
    rep.kv("rmax", o.rmax);
    rep.kv("kmax", o.kmax);
    rep.kv("samples", o.samples);
    rep.kv("seed", o.seed);
    rep.kv("budget", o.budget);
    rep.kv("threads", o.common.threads);

    // Per-formula density traces.
    ordered_json jformulas = ordered_json::array();
    for (const auto& ftext : o.formulas) {
        Formula f = parse_against(ftext, seq.front());
        structlim::TraceOptions topts;
        topts.budget = o.budget;
        topts.samples = o.samples;
        topts.seed = o.seed;
        topts.threads = o.common.threads;
        structlim::DensityTrace trace = structlim::density_trace(
            seq, manifest.labels, f, topts);
        structlim::ConvergenceVerdict v = structlim::trace_verdict(trace, epsilon, o.window);

        rep.blank();
        rep.raw_line("[density] formula: " + f.to_string());
        ordered_json block = {{"formula", f.to_string()}};
        ordered_json values = ordered_json::array();
        for (std::size_t i = 0; i < trace.values.size(); ++i) {
            const auto& dv = trace.values[i];
            bool is_sampled = dv.mode == structlim::DensityValue::Mode::Sampled;
            std::string line = "  " + trace.labels[i] + ": " +
                               structlim::rational_string(dv.value) +
                               (is_sampled ? " (sampled)" : " (exact)");
            rep.raw_line(line);
            values.push_back({{"label", trace.labels[i]},
                              {"value", structlim::rational_string(dv.value)},
                              {"mode", is_sampled ? "sampled" : "exact"}});
        }
        block["values"] = std::move(values);
        report_verdict(rep, block, "  ", v);
        jformulas.push_back(std::move(block));
    }
    if (!o.formulas.empty()) rep.json["density"] = std::move(jformulas);

    // Ball statistics, elementary agreement, and the combined verdict.
    structlim::FoSplitReport fo = structlim::fo_split_check(
        seq, manifest.labels, o.rmax, o.kmax, epsilon, o.window, o.common.threads);

    ordered_json jradii = ordered_json::array();
    for (const auto& rr : fo.bs.per_radius) {
        rep.blank();
        rep.raw_line("[balls radius " + std::to_string(rr.radius) + "]");
        ordered_json block = {{"radius", rr.radius}};
        ordered_json steps = ordered_json::array();
        for (std::size_t i = 0; i < rr.consecutive_tv.size(); ++i) {
            std::string line = "  tv " + manifest.labels[i] + " -> " + manifest.labels[i + 1] +
                               ": " + structlim::rational_string(rr.consecutive_tv[i]);
            rep.raw_line(line);
            steps.push_back({{"from", manifest.labels[i]},
                             {"to", manifest.labels[i + 1]},
                             {"tv", structlim::rational_string(rr.consecutive_tv[i])}});
        }
        block["consecutive-tv"] = std::move(steps);
        report_verdict(rep, block, "  ", rr.verdict);
        jradii.push_back(std::move(block));
    }
    rep.blank();
    rep.raw_line("[balls] overall: " + structlim::verdict_name(fo.bs.overall));
    ordered_json jballs = {{"radii", std::move(jradii)},
                           {"overall", structlim::verdict_name(fo.bs.overall)}};
    if (fo.bs.degree_warning) {
        rep.raw_line("[balls] note: " + fo.bs.degree_note);
        jballs["note"] = fo.bs.degree_note;
    }
    rep.json["balls"] = std::move(jballs);

    rep.blank();
    rep.raw_line("[elementary kmax " + std::to_string(fo.kmax) + "]");
    rep.raw_line("  verdict: " + structlim::verdict_name(fo.elementary));
    rep.raw_line("  witness: " + fo.elementary_witness);
    rep.json["elementary"] = {{"kmax", fo.kmax},
                              {"verdict", structlim::verdict_name(fo.elementary)},
                              {"witness", fo.elementary_witness}};

    rep.blank();
    rep.raw_line("[fo] verdict: " + structlim::verdict_name(fo.fo));
    rep.json["fo"] = structlim::verdict_name(fo.fo);
    rep.emit();
    return 0;
}

// ---------------------------------------------------------------------------
// graphing: sampled ball statistics of a bounded-degree measurable graphing,
// with optional cleaning and comparison against a finite structure.

struct GraphingOpts {
    CommonOpts common;
    std::string builtin;
    std::string spec_file;
    int radius = 2;
    std::int64_t samples = 10'000;
    std::uint64_t seed = 0;
    std::string clean_threshold;  // empty: no cleaning
    std::string compare_file;
    std::vector<std::string> injections;
    int hanf_t = 3;
    std::int64_t hanf_scale = -1;  // default: samples
    int emit_finite = -1;
};

structlim::InjectedPoint parse_injection(const std::string& text) {
    structlim::InjectedPoint out;
    std::string body = text;
    auto colon = body.find(':');
    if (colon != std::string::npos) {
        out.count = std::stoll(body.substr(colon + 1));
        if (out.count <= 0) throw std::invalid_argument("--inject count must be positive: '" + text + "'");
        body = body.substr(0, colon);
    }
    auto comma = body.find(',');
    if (comma == std::string::npos)
        throw std::invalid_argument("--inject expects X,Y[:COUNT], got '" + text + "'");
    out.point.x = structlim::parse_rational(body.substr(0, comma));
    out.point.y = structlim::parse_rational(body.substr(comma + 1));
    return out;
}

int cmd_graphing(const GraphingOpts& o) {
    if (o.emit_finite >= 0) {
        // Emit the finite analogue of the built-in graphing as a structure
        // file (plain graph text, no report header).
        if (!o.spec_file.empty() || (!o.builtin.empty() && o.builtin != "debruijn"))
            throw std::invalid_argument("--emit-finite applies to the built-in debruijn graphing");
        std::ostringstream out;
        structlim::save_graph(structlim::debruijn_graph(o.emit_finite), out);
        std::string s = out.str();
        std::fwrite(s.data(), 1, s.size(), stdout);
        return 0;
    }

    structlim::Graphing g = [&] {
        if (!o.builtin.empty() && !o.spec_file.empty())
            throw std::invalid_argument("give either --builtin or --spec, not both");
        if (!o.builtin.empty()) {
            if (o.builtin != "debruijn")
                throw std::invalid_argument("unknown builtin graphing: '" + o.builtin +
                                            "' (available: debruijn)");
            return structlim::debruijn_graphing();
        }
        if (!o.spec_file.empty()) {
            try {
                return structlim::load_graphing(o.spec_file);
            } catch (const structlim::parse_error& e) {
                throw structlim::file_error(e.what());
            }
        }
        throw std::invalid_argument("choose a graphing with --builtin debruijn or --spec FILE");
    }();

    std::vector<structlim::InjectedPoint> injected;
    for (const auto& text : o.injections) injected.push_back(parse_injection(text));

    structlim::GraphingBallStats stats = structlim::graphing_ball_stats(
        g, o.radius, o.samples, o.seed, o.common.threads, injected);

    Report rep("graphing", o.common.json);
    rep.kv("source", o.builtin.empty() ? "spec " + o.spec_file : "builtin " + o.builtin);
    rep.kv("degree-bound", g.degree_bound);
    rep.kv("radius", o.radius);
    rep.kv("samples", o.samples);
    rep.kv("seed", o.seed);
    rep.kv("threads", o.common.threads);
    if (!injected.empty()) {
        std::string t;
        ordered_json arr = ordered_json::array();
        for (const auto& ip : injected) {
            if (!t.empty()) t += ' ';
            std::string point = structlim::rational_string(ip.point.x) + "," +
                                structlim::rational_string(ip.point.y);
            t += point + ":" + std::to_string(ip.count);
            arr.push_back({{"point", point}, {"count", ip.count}});
        }
        rep.raw_line("injected: " + t);
        rep.json["injected"] = std::move(arr);
        rep.kv("total-roots", stats.total);
    }
    rep.kv("codes", static_cast<std::int64_t>(stats.freq.size()));
    emit_distribution(rep, stats.freq, "distribution");

    const std::map<BallCode, Rational>* effective = &stats.freq;
    std::optional<structlim::CleanResult> cleaned;
    if (!o.clean_threshold.empty()) {
        Rational threshold = rational_arg(o.clean_threshold, "--clean");
        cleaned = structlim::clean(stats, threshold);
        effective = &cleaned->kept.freq;
        rep.blank();
        rep.kv("clean-threshold", threshold);
        rep.kv("kept-codes", static_cast<std::int64_t>(cleaned->kept.freq.size()));
        rep.kv("removed-codes", static_cast<std::int64_t>(cleaned->removed.size()));
        rep.kv("removed-mass", cleaned->removed_mass);
        emit_distribution(rep, cleaned->kept.freq, "cleaned-distribution");
    }

    if (!o.compare_file.empty()) {
        Structure finite = load(o.compare_file);
        BallDistribution exact =
            structlim::ball_distribution(finite, o.radius, o.common.threads);
        Rational tv = structlim::tv_distance(*effective, exact.freq);
        std::int64_t scale = o.hanf_scale > 0 ? o.hanf_scale : o.samples;
        structlim::HanfReport hanf =
            structlim::hanf_check(*effective, exact.freq, o.hanf_t, scale);

        rep.blank();
        rep.kv("compare", o.compare_file);
        rep.kv("compare-size", finite.size());
        rep.kv("compare-codes", static_cast<std::int64_t>(exact.freq.size()));
        rep.kv("tv-vs-compare", tv);
        rep.kv("tv-decimal", fixed6(structlim::to_double(tv)));
        rep.kv("hanf-t", hanf.t);
        rep.kv("hanf-scale", hanf.scale);
        rep.kv("hanf", hanf.pass ? "pass" : "fail");
        ordered_json mismatches = ordered_json::array();
        for (const auto& m : hanf.mismatches) {
            rep.raw_line("hanf-mismatch: " + m.code.hex() + " left=" + std::to_string(m.left) +
                         " right=" + std::to_string(m.right));
            mismatches.push_back(
                {{"code", m.code.hex()}, {"left", m.left}, {"right", m.right}});
        }
        if (!hanf.pass) rep.json["hanf-mismatches"] = std::move(mismatches);
    }
    rep.emit();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"workbench for structural limits of finite relational structures"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    EvalOpts eval_opts;
    auto* eval = app.add_subcommand("eval", "evaluate a formula at an explicit assignment");
    eval->add_option("formula", eval_opts.formula, "first-order formula text")->required();
    eval->add_option("file", eval_opts.file, "structure file")->required();
    eval->add_option("--set", eval_opts.bindings, "assignment VAR=ELEMENT (repeatable)");
    add_common(eval, eval_opts.common);

    DensityOpts density_opts;
    auto* density = app.add_subcommand("density", "formula density (Stone pairing) per structure");
    density->add_option("formula", density_opts.formula, "first-order formula text")->required();
    density->add_option("files", density_opts.files, "structure files")->required();
    auto* exact_flag = density->add_flag("--exact", density_opts.exact,
                                         "exact enumeration (the default)");
    density->add_option("--samples", density_opts.samples, "Monte Carlo sample count")
        ->excludes(exact_flag);
    density->add_option("--seed", density_opts.seed, "sampling seed")->capture_default_str();
    density->add_option("--budget", density_opts.budget, "max assignments to enumerate")
        ->capture_default_str();
    density->add_option("--pad", density_opts.pad, "evaluate in at least this many variables");
    add_common(density, density_opts.common);

    BallsOpts balls_opts;
    auto* balls = app.add_subcommand("balls", "r-ball code distribution of a structure");
    balls->add_option("file", balls_opts.file, "structure file")->required();
    balls->add_option("--radius", balls_opts.radius, "ball radius")
        ->check(CLI::Range(0, 1'000'000))
        ->capture_default_str();
    add_common(balls, balls_opts.common);

    RhoOpts rho_opts;
    auto* rho = app.add_subcommand("rho", "neighborhood metric between two rooted structures");
    rho->add_option("left", rho_opts.left_file, "left structure file")->required();
    rho->add_option("left-root", rho_opts.left_root, "left root element")->required();
    rho->add_option("right", rho_opts.right_file, "right structure file")->required();
    rho->add_option("right-root", rho_opts.right_root, "right root element")->required();
    add_common(rho, rho_opts.common);

    TvOpts tv_opts;
    auto* tv = app.add_subcommand("tv", "total variation distance between ball distributions");
    tv->add_option("left", tv_opts.left_file, "left structure file")->required();
    tv->add_option("right", tv_opts.right_file, "right structure file")->required();
    tv->add_option("--radius", tv_opts.radius, "ball radius")
        ->check(CLI::Range(0, 1'000'000))
        ->capture_default_str();
    add_common(tv, tv_opts.common);

    EfOpts ef_opts;
    auto* ef = app.add_subcommand("ef", "elementary distance via back-and-forth games");
    ef->add_option("left", ef_opts.left_file, "left structure file")->required();
    ef->add_option("right", ef_opts.right_file, "right structure file")->required();
    ef->add_option("--kmax", ef_opts.kmax, "largest quantifier rank to test")
        ->check(CLI::Range(0, 64))
        ->capture_default_str();
    add_common(ef, ef_opts.common);

    ConvergeOpts converge_opts;
    auto* converge = app.add_subcommand("converge", "convergence diagnostics over a manifest");
    converge->add_option("manifest", converge_opts.manifest, "manifest file (path [label] lines)")
        ->required();
    converge->add_option("--formula", converge_opts.formulas,
                         "density trace formula (repeatable)");
    converge->add_option("--rmax", converge_opts.rmax, "largest ball radius")
        ->check(CLI::Range(0, 1'000'000))
        ->capture_default_str();
    converge->add_option("--kmax", converge_opts.kmax, "largest quantifier rank")
        ->check(CLI::Range(0, 64))
        ->capture_default_str();
    converge->add_option("--epsilon", converge_opts.epsilon, "convergence tolerance (rational)")
        ->capture_default_str();
    converge->add_option("--window", converge_opts.window, "tail window length")
        ->check(CLI::Range(2, 1'000'000))
        ->capture_default_str();
    converge->add_option("--samples", converge_opts.samples,
                         "samples when a density exceeds the budget")
        ->capture_default_str();
    converge->add_option("--seed", converge_opts.seed, "sampling seed")->capture_default_str();
    converge->add_option("--budget", converge_opts.budget, "max assignments to enumerate")
        ->capture_default_str();
    add_common(converge, converge_opts.common);

    GraphingOpts graphing_opts;
    auto* graphing = app.add_subcommand("graphing", "ball statistics of a measurable graphing");
    graphing->add_option("--builtin", graphing_opts.builtin, "built-in graphing (debruijn)");
    graphing->add_option("--spec", graphing_opts.spec_file, "graphing spec file");
    graphing->add_option("--radius", graphing_opts.radius, "ball radius")
        ->check(CLI::Range(0, 1'000'000))
        ->capture_default_str();
    graphing->add_option("--samples", graphing_opts.samples, "number of sampled roots")
        ->check(CLI::Range(std::int64_t{1}, std::int64_t{1'000'000'000}))
        ->capture_default_str();
    graphing->add_option("--seed", graphing_opts.seed, "sampling seed")->capture_default_str();
    graphing->add_option("--clean", graphing_opts.clean_threshold,
                         "drop codes below this frequency and renormalize (e.g. 1/10000)");
    graphing->add_option("--compare", graphing_opts.compare_file,
                         "finite structure to compare against");
    graphing->add_option("--inject", graphing_opts.injections,
                         "extra root X,Y[:COUNT] (repeatable)");
    graphing->add_option("--hanf-t", graphing_opts.hanf_t,
                         "count threshold for the comparison check")
        ->check(CLI::Range(1, 1'000'000))
        ->capture_default_str();
    graphing->add_option("--hanf-scale", graphing_opts.hanf_scale,
                         "count scale for the comparison check (default: samples)");
    graphing->add_option("--emit-finite", graphing_opts.emit_finite,
                         "print the finite shift-window graph on 3*2^N vertices and exit")
        ->check(CLI::Range(1, 20));
    add_common(graphing, graphing_opts.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(eval)) return cmd_eval(eval_opts);
        if (app.got_subcommand(density)) return cmd_density(density_opts);
        if (app.got_subcommand(balls)) return cmd_balls(balls_opts);
        if (app.got_subcommand(rho)) return cmd_rho(rho_opts);
        if (app.got_subcommand(tv)) return cmd_tv(tv_opts);
        if (app.got_subcommand(ef)) return cmd_ef(ef_opts);
        if (app.got_subcommand(converge)) return cmd_converge(converge_opts);
        if (app.got_subcommand(graphing)) return cmd_graphing(graphing_opts);
    } catch (const structlim::parse_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const structlim::file_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const structlim::budget_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
