#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "structlim/convergence.hpp"
#include "structlim/density.hpp"
#include "structlim/errors.hpp"
#include "structlim/formula.hpp"
#include "structlim/rational.hpp"
#include "structlim/structure.hpp"

#include "test_util.hpp"

#include <climits>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

using namespace structlim;

namespace {

std::shared_ptr<const Signature> graph_sig() {
    return std::make_shared<Signature>(Signature::graph());
}

Formula parse(const std::string& text) { return parse_formula(text, graph_sig()); }

// Brute-force back-and-forth game oracle, written against the game itself:
// a position is a pair of equal-length tuples (constants first). Duplicator
// wins with `rounds` to go iff the position is a partial isomorphism and
// every Spoiler pick on either side has a response that keeps winning. A
// violated atomic pattern persists under extension, so checking it at every
// node is equivalent to checking it only at the leaves.
bool oracle_partial_iso(const Structure& a, const Structure& b, const std::vector<int>& ta,
                        const std::vector<int>& tb) {
    const Signature& sig = a.signature();
    const int m = static_cast<int>(ta.size());
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if ((ta[i] == ta[j]) != (tb[i] == tb[j])) return false;
        }
    }
    for (std::size_t rel = 0; rel < sig.relations.size(); ++rel) {
        const int ar = sig.relations[rel].arity;
        if (m == 0) continue;
        std::vector<int> idx(ar, 0);
        std::vector<int> aa(ar);
        std::vector<int> bb(ar);
        for (;;) {
            for (int i = 0; i < ar; ++i) {
                aa[i] = ta[idx[i]];
                bb[i] = tb[idx[i]];
            }
            if (a.has_tuple(static_cast<int>(rel), aa) !=
                b.has_tuple(static_cast<int>(rel), bb)) {
                return false;
            }
            int pos = ar - 1;
            while (pos >= 0 && ++idx[pos] == m) {
                idx[pos] = 0;
                --pos;
            }
            if (pos < 0) break;
        }
    }
    return true;
}

bool oracle_duplicator_wins(const Structure& a, const Structure& b, std::vector<int>& ta,
                            std::vector<int>& tb, int rounds) {
    if (!oracle_partial_iso(a, b, ta, tb)) return false;
    if (rounds == 0) return true;
    for (int v = 0; v < a.size(); ++v) {
        bool answered = false;
        for (int w = 0; w < b.size() && !answered; ++w) {
            ta.push_back(v);
            tb.push_back(w);
            answered = oracle_duplicator_wins(a, b, ta, tb, rounds - 1);
            ta.pop_back();
            tb.pop_back();
        }
        if (!answered) return false;
    }
    for (int w = 0; w < b.size(); ++w) {
        bool answered = false;
        for (int v = 0; v < a.size() && !answered; ++v) {
            ta.push_back(v);
            tb.push_back(w);
            answered = oracle_duplicator_wins(a, b, ta, tb, rounds - 1);
            ta.pop_back();
            tb.pop_back();
        }
        if (!answered) return false;
    }
    return true;
}

bool oracle_game(const Structure& a, const Structure& b, int k) {
    std::vector<int> ta;
    std::vector<int> tb;
    const int consts = static_cast<int>(a.signature().constants.size());
    for (int c = 0; c < consts; ++c) {
        ta.push_back(a.constant_value(c));
        tb.push_back(b.constant_value(c));
    }
    return oracle_duplicator_wins(a, b, ta, tb, k);
}

int oracle_least_separating_rank(const Structure& a, const Structure& b, int kmax) {
    for (int k = 0; k <= kmax; ++k) {
        if (!oracle_game(a, b, k)) return k;
    }
    return INT_MAX;
}

}  // namespace

TEST_CASE("back-and-forth equivalence matches the brute-force game oracle") {
    for (int seed = 0; seed < 30; ++seed) {
        Structure a = testutil::random_graph(2 + seed % 3, 7000 + seed, 50);
        Structure b = testutil::random_graph(2 + (seed / 3) % 3, 7100 + seed, 50);
        CAPTURE(seed);
        for (int k = 0; k <= 3; ++k) {
            CAPTURE(k);
            CHECK(ef_equivalent(a, b, k) == oracle_game(a, b, k));
        }
    }
}

TEST_CASE("back-and-forth equivalence with constants matches the oracle") {
    for (int seed = 0; seed < 12; ++seed) {
        Structure a0 = testutil::random_graph(3 + seed % 2, 7300 + seed, 50);
        Structure b0 = testutil::random_graph(3 + (seed / 2) % 2, 7400 + seed, 50);
        std::vector<int> va = {seed % a0.size()};
        std::vector<int> vb = {(seed + 1) % b0.size()};
        Structure a = with_constants(a0, va);
        Structure b = with_constants(b0, vb);
        CAPTURE(seed);
        for (int k = 0; k <= 2; ++k) {
            CAPTURE(k);
            CHECK(ef_equivalent(a, b, k) == oracle_game(a, b, k));
        }
    }
    // A pinned vertex matters: the end and the center of a path are already
    // told apart with one round even though the bare paths are identical.
    Structure end = with_constants(path_graph(3), std::vector<int>{0});
    Structure mid = with_constants(path_graph(3), std::vector<int>{1});
    CHECK(ef_equivalent(end, mid, 0));
    CHECK_FALSE(ef_equivalent(end, mid, 1));
    CHECK(oracle_game(end, mid, 0));
    CHECK_FALSE(oracle_game(end, mid, 1));
}

TEST_CASE("complete graphs separate exactly at the size of the smaller one plus one") {
    Structure k2 = complete_graph(2);
    Structure k3 = complete_graph(3);
    Structure k4 = complete_graph(4);
    for (int k = 0; k <= 2; ++k) CHECK(ef_equivalent(k2, k3, k));
    CHECK_FALSE(ef_equivalent(k2, k3, 3));
    for (int k = 0; k <= 3; ++k) CHECK(ef_equivalent(k3, k4, k));
    CHECK_FALSE(ef_equivalent(k3, k4, 4));
    CHECK(oracle_least_separating_rank(k2, k3, 5) == 3);
    CHECK(oracle_least_separating_rank(k3, k4, 5) == 4);

    ElementaryDistance d = elementary_distance(k2, k3, 5);
    CHECK(d.kind == ElementaryDistance::Kind::Exact);
    CHECK(d.k == 3);
    CHECK(d.upper() == Rational(1, 8));
    CHECK(d.to_string() == "2^-3");
}

TEST_CASE("elementary distance reports all three kinds") {
    // Isomorphic structures: distance zero, regardless of labelling.
    Structure p4 = path_graph(4);
    Structure p4_shuffled = Structure::graph(4, {{0, 2}, {2, 3}, {3, 1}});
    ElementaryDistance zero = elementary_distance(p4, p4_shuffled, 0);
    CHECK(zero.kind == ElementaryDistance::Kind::Zero);
    CHECK(zero.upper() == 0);
    CHECK(zero.to_string() == "0");

    // Separation past the cap: an interval, never a silent zero.
    ElementaryDistance capped = elementary_distance(complete_graph(2), complete_graph(3), 2);
    CHECK(capped.kind == ElementaryDistance::Kind::UpperBound);
    CHECK(capped.k == 2);
    CHECK(capped.upper() == Rational(1, 4));
    CHECK(capped.to_string() == "(0, 2^-2]");

    // Long cycles agree at low ranks, so the cap is reached there too.
    ElementaryDistance cycles = elementary_distance(cycle_graph(10), cycle_graph(11), 2);
    CHECK(cycles.kind == ElementaryDistance::Kind::UpperBound);
    CHECK(oracle_game(cycle_graph(10), cycle_graph(11), 2));

    // Separation at rank zero needs something atomic; with constants it shows.
    Structure loopy = with_constants(complete_graph(2), std::vector<int>{0});
    Structure lonely = with_constants(edgeless_graph(2), std::vector<int>{0});
    CHECK(ef_equivalent(loopy, lonely, 0));  // one constant alone says nothing
    CHECK_FALSE(ef_equivalent(loopy, lonely, 1));
    ElementaryDistance one = elementary_distance(loopy, lonely, 3);
    CHECK(one.kind == ElementaryDistance::Kind::Exact);
    CHECK(one.k == 1);
    CHECK(one.to_string() == "2^-1");
}

TEST_CASE("separation is monotone in the round count") {
    std::vector<Structure> pool = {complete_graph(2), complete_graph(3), cycle_graph(4),
                                   cycle_graph(5),    path_graph(4),     star_graph(3)};
    for (std::size_t i = 0; i < pool.size(); ++i) {
        for (std::size_t j = i + 1; j < pool.size(); ++j) {
            ElementaryDistance d = elementary_distance(pool[i], pool[j], 4);
            CAPTURE(i);
            CAPTURE(j);
            REQUIRE(d.kind == ElementaryDistance::Kind::Exact);
            CHECK_FALSE(ef_equivalent(pool[i], pool[j], d.k));
            CHECK_FALSE(ef_equivalent(pool[i], pool[j], d.k + 1));
            if (d.k > 0) CHECK(ef_equivalent(pool[i], pool[j], d.k - 1));
            // The least separating rank is what the oracle finds as well.
            CHECK(oracle_least_separating_rank(pool[i], pool[j], 4) == d.k);
        }
    }
}

TEST_CASE("least separating rank makes the distance an ultrametric") {
    std::vector<Structure> pool = {complete_graph(2), complete_graph(3), cycle_graph(4),
                                   cycle_graph(5), path_graph(4)};
    const int kmax = 6;
    auto kstar = [&](const Structure& a, const Structure& b) {
        ElementaryDistance d = elementary_distance(a, b, kmax);
        REQUIRE(d.kind != ElementaryDistance::Kind::UpperBound);
        return d.kind == ElementaryDistance::Kind::Zero ? INT_MAX : d.k;
    };
    const int n = static_cast<int>(pool.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            CHECK(kstar(pool[i], pool[j]) == kstar(pool[j], pool[i]));
            for (int l = 0; l < n; ++l) {
                // d(A,C) <= max(d(A,B), d(B,C)) with d = 2^-k*.
                CHECK(kstar(pool[i], pool[l]) >=
                      std::min(kstar(pool[i], pool[j]), kstar(pool[j], pool[l])));
            }
        }
    }
}

TEST_CASE("game comparisons validate their inputs and their budget") {
    Structure g = complete_graph(2);
    CHECK_THROWS_AS(ef_equivalent(g, with_constants(g, std::vector<int>{0}), 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(ef_equivalent(g, g, -1), std::invalid_argument);
    CHECK_THROWS_AS(elementary_distance(g, complete_graph(3), -1), std::invalid_argument);
    // 2 * 100^5 tuples is past the work guard.
    CHECK_THROWS_AS(ef_equivalent(edgeless_graph(100), edgeless_graph(100), 5),
                    budget_error);
    // Zero rounds with no constants is the empty position: always a draw.
    CHECK(ef_equivalent(complete_graph(2), edgeless_graph(3), 0));
}

TEST_CASE("windowed verdict classifies the largest tail gap") {
    std::vector<std::string> labels = {"s1", "s2", "s3", "s4", "s5", "s6"};
    Rational eps(1, 100);

    auto run = [&](std::vector<Rational> values, int window) {
        return window_verdict(values, labels, eps, window);
    };

    // Entries before the window are ignored entirely.
    ConvergenceVerdict flat = run({Rational(5), Rational(-3), Rational(1, 2),
                                   Rational(1, 2), Rational(1, 2), Rational(1, 2)},
                                  3);
    CHECK(flat.status == VerdictStatus::Converged);
    CHECK(flat.max_gap == 0);
    CHECK(flat.witness == "s4 vs s5: gap 0");

    // Gap exactly epsilon still converges.
    ConvergenceVerdict edge = run({Rational(0), Rational(0), Rational(0), Rational(1, 2),
                                   Rational(1, 2) + Rational(1, 100), Rational(1, 2)},
                                  3);
    CHECK(edge.status == VerdictStatus::Converged);
    CHECK(edge.max_gap == Rational(1, 100));

    // Between epsilon and 2*epsilon: inconclusive, including exactly 2*epsilon.
    ConvergenceVerdict mid = run({Rational(0), Rational(0), Rational(0), Rational(1, 2),
                                  Rational(1, 2) + Rational(3, 200), Rational(1, 2)},
                                 3);
    CHECK(mid.status == VerdictStatus::Inconclusive);
    ConvergenceVerdict two = run({Rational(0), Rational(0), Rational(0), Rational(1, 2),
                                  Rational(1, 2) + Rational(1, 50), Rational(1, 2)},
                                 3);
    CHECK(two.status == VerdictStatus::Inconclusive);
    CHECK(two.max_gap == Rational(1, 50));

    // Past 2*epsilon: diverged, and the witness names the widest pair.
    ConvergenceVerdict wide = run({Rational(0), Rational(0), Rational(0), Rational(1, 4),
                                   Rational(1, 4), Rational(1, 4) + Rational(3, 100)},
                                  3);
    CHECK(wide.status == VerdictStatus::Diverged);
    CHECK(wide.max_gap == Rational(3, 100));
    CHECK(wide.witness == "s4 vs s6: gap 3/100");

    // The whole trace can be the window.
    std::vector<Rational> all(6, Rational(1, 3));
    CHECK(window_verdict(all, labels, eps, 6).status == VerdictStatus::Converged);

    // Validation.
    std::vector<Rational> vals(6, Rational(0));
    CHECK_THROWS_AS(window_verdict(vals, labels, eps, 1), std::invalid_argument);
    CHECK_THROWS_AS(window_verdict(vals, labels, eps, 7), std::invalid_argument);
    std::vector<std::string> short_labels = {"a", "b"};
    CHECK_THROWS_AS(window_verdict(vals, short_labels, eps, 3), std::invalid_argument);
    CHECK_THROWS_AS(window_verdict(vals, labels, Rational(0), 3), std::invalid_argument);
    CHECK_THROWS_AS(window_verdict(vals, labels, Rational(-1, 4), 3),
                    std::invalid_argument);

    CHECK(verdict_name(VerdictStatus::Converged) == "converged");
    CHECK(verdict_name(VerdictStatus::Diverged) == "diverged");
    CHECK(verdict_name(VerdictStatus::Inconclusive) == "inconclusive");
}

TEST_CASE("density trace evaluates exactly when the budget allows") {
    Formula f = parse("x ~ y");
    std::vector<Structure> seq = {cycle_graph(4), cycle_graph(5), cycle_graph(6)};
    std::vector<std::string> labels = {"c4", "c5", "c6"};
    DensityTrace trace = density_trace(seq, labels, f, TraceOptions{});
    REQUIRE(trace.values.size() == 3);
    CHECK(trace.labels == labels);
    CHECK(trace.values[0].mode == DensityValue::Mode::Exact);
    CHECK(trace.values[0].value == Rational(1, 2));
    CHECK(trace.values[1].value == Rational(2, 5));
    CHECK(trace.values[2].value == Rational(1, 3));

    // Verdict thresholds act on the same trace.
    CHECK(trace_verdict(trace, Rational(1, 100), 3).status == VerdictStatus::Diverged);
    CHECK(trace_verdict(trace, Rational(1, 10), 3).status == VerdictStatus::Inconclusive);
    CHECK(trace_verdict(trace, Rational(1, 6), 3).status == VerdictStatus::Converged);
    CHECK(trace_verdict(trace, Rational(1, 100), 3).witness == "c4 vs c6: gap 1/6");

    std::vector<std::string> wrong = {"a"};
    CHECK_THROWS_AS(density_trace(seq, wrong, f, TraceOptions{}), std::invalid_argument);
}

TEST_CASE("density trace falls back to sampling when the budget runs out") {
    Formula f = parse("x ~ y");
    std::vector<Structure> seq = {cycle_graph(12), cycle_graph(12)};
    std::vector<std::string> labels = {"a", "b"};
    TraceOptions opts;
    opts.budget = 10;  // 12^2 assignments exceed this immediately
    opts.samples = 2000;
    opts.seed = 5;

    DensityTrace trace = density_trace(seq, labels, f, opts);
    REQUIRE(trace.values.size() == 2);
    for (const DensityValue& v : trace.values) {
        CHECK(v.mode == DensityValue::Mode::Sampled);
        CHECK(v.samples == 2000);
        CHECK(v.value >= 0);
        CHECK(v.value <= 1);
        CHECK(v.conf_radius == doctest::Approx(std::sqrt(std::log(40.0) / 4000.0)));
    }
    // Each entry samples from its own stream, derived from the base seed.
    CHECK(trace.values[0].seed == 5);
    CHECK(trace.values[1].seed == 6);

    // Deterministic: the same options give the same estimates.
    DensityTrace again = density_trace(seq, labels, f, opts);
    CHECK(again.values[0].value == trace.values[0].value);
    CHECK(again.values[1].value == trace.values[1].value);

    // The estimates should be near the true 1/6, inside the 95% radius.
    Rational truth(1, 6);
    for (const DensityValue& v : trace.values) {
        Rational err = v.value >= truth ? v.value - truth : truth - v.value;
        CHECK(to_double(err) <= v.conf_radius);
    }

    opts.allow_sampling = false;
    CHECK_THROWS_AS(density_trace(seq, labels, f, opts), budget_error);
}

TEST_CASE("ball statistics convergence on growing cycles") {
    std::vector<Structure> seq;
    std::vector<std::string> labels;
    for (int n = 10; n <= 22; n += 2) {
        seq.push_back(cycle_graph(n));
        labels.push_back("c" + std::to_string(n));
    }
    BsCheckReport report = bs_convergence_check(seq, labels, 2, Rational(1, 100), 3);
    REQUIRE(report.per_radius.size() == 3);
    for (int r = 0; r <= 2; ++r) {
        const BsRadiusResult& res = report.per_radius[r];
        CHECK(res.radius == r);
        // All cycles here are long enough that their balls never wrap, so
        // every distribution is a single shared code and all distances vanish.
        CHECK(res.verdict.status == VerdictStatus::Converged);
        CHECK(res.verdict.max_gap == 0);
        REQUIRE(res.consecutive_tv.size() == seq.size() - 1);
        for (const Rational& tv : res.consecutive_tv) CHECK(tv == 0);
    }
    CHECK(report.overall == VerdictStatus::Converged);
    CHECK_FALSE(report.degree_warning);
    CHECK(report.degree_note.empty());

    CHECK_THROWS_AS(bs_convergence_check(seq, labels, -1, Rational(1, 100), 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(bs_convergence_check(seq, labels, 2, Rational(1, 100), 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(bs_convergence_check(seq, labels, 2, Rational(1, 100), 10),
                    std::invalid_argument);
    std::vector<std::string> wrong(seq.size() - 1, "x");
    CHECK_THROWS_AS(bs_convergence_check(seq, wrong, 2, Rational(1, 100), 3),
                    std::invalid_argument);
}

TEST_CASE("ball statistics flag degree drift inside the window") {
    std::vector<Structure> seq = {cycle_graph(10), cycle_graph(12), star_graph(5),
                                  cycle_graph(14)};
    std::vector<std::string> labels = {"c10", "c12", "star5", "c14"};
    BsCheckReport report = bs_convergence_check(seq, labels, 1, Rational(1, 100), 3);
    CHECK(report.degree_warning);
    CHECK(report.degree_note.find("maximum degree varies") != std::string::npos);
    CHECK(report.degree_note.find("star5=5") != std::string::npos);
    CHECK(report.degree_note.find("c14=2") != std::string::npos);
    // Radius zero cannot tell anything apart; radius one certainly can.
    CHECK(report.per_radius[0].verdict.status == VerdictStatus::Converged);
    CHECK(report.per_radius[1].verdict.status == VerdictStatus::Diverged);
    CHECK(report.per_radius[1].verdict.max_gap == 1);  // disjoint supports
    CHECK(report.overall == VerdictStatus::Diverged);
}

TEST_CASE("first-order split accepts growing cycles") {
    std::vector<Structure> seq;
    std::vector<std::string> labels;
    for (int n = 10; n <= 60; n += 10) {
        seq.push_back(cycle_graph(n));
        labels.push_back("c" + std::to_string(n));
    }
    FoSplitReport report = fo_split_check(seq, labels, 2, 3, Rational(1, 100), 3);
    CHECK(report.bs.overall == VerdictStatus::Converged);
    CHECK(report.elementary == VerdictStatus::Converged);
    CHECK(report.elementary_witness == "all window pairs agree up to quantifier rank 3");
    CHECK(report.kmax == 3);
    CHECK(report.fo == VerdictStatus::Converged);

    CHECK_THROWS_AS(fo_split_check(seq, labels, 2, -1, Rational(1, 100), 3),
                    std::invalid_argument);
}

TEST_CASE("first-order split rejects a sequence that alternates pendants") {
    // Same skeletons, but every other member carries one pendant vertex. The
    // ball statistics drift only a little, while a rank-3 sentence (there is
    // a vertex of degree one) flips back and forth forever.
    std::vector<Structure> seq;
    std::vector<std::string> labels;
    for (int n = 10; n <= 60; n += 10) {
        bool pendant = (n / 10) % 2 == 0;
        seq.push_back(pendant ? pendant_cycle_graph(n) : cycle_graph(n));
        labels.push_back((pendant ? "p" : "c") + std::to_string(n));
    }
    FoSplitReport report = fo_split_check(seq, labels, 2, 3, Rational(1, 100), 3);
    CHECK(report.elementary == VerdictStatus::Diverged);
    CHECK(report.elementary_witness.find("separated at quantifier rank") !=
          std::string::npos);
    CHECK(report.fo == VerdictStatus::Diverged);
    // The pendant also nudges the radius-1 statistics past the tolerance:
    // a 41-vertex member has 2/41 of its mass on codes a plain cycle lacks.
    CHECK(report.bs.overall == VerdictStatus::Diverged);

    // The two halves are genuinely independent: among themselves the pendant
    // members agree on every sentence up to rank 3, so only the statistics
    // half objects — the lone pendant still shifts O(1/n) of the radius-2
    // mass, which at these sizes exceeds the tolerance.
    std::vector<Structure> pendants;
    std::vector<std::string> plabels;
    for (int n = 20; n <= 60; n += 10) {
        pendants.push_back(pendant_cycle_graph(n));
        plabels.push_back("p" + std::to_string(n));
    }
    FoSplitReport pure = fo_split_check(pendants, plabels, 2, 3, Rational(1, 100), 3);
    CHECK(pure.elementary == VerdictStatus::Converged);
    CHECK(pure.bs.overall == VerdictStatus::Diverged);
    CHECK(pure.fo == VerdictStatus::Diverged);
    // With the drift inside the tolerance (coarser epsilon), both halves and
    // the combined verdict accept the same sequence.
    FoSplitReport coarse = fo_split_check(pendants, plabels, 2, 3, Rational(1, 20), 3);
    CHECK(coarse.bs.overall == VerdictStatus::Converged);
    CHECK(coarse.fo == VerdictStatus::Converged);
}
