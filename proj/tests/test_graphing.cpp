#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "structlim/canonical.hpp"
#include "structlim/errors.hpp"
#include "structlim/graphing.hpp"
#include "structlim/local_bs.hpp"
#include "structlim/rational.hpp"
#include "structlim/rng.hpp"
#include "structlim/structure.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

using namespace structlim;

namespace {

// Cursor i of the infinite periodic repetition of a bit sequence, embedded
// as a row-0 point of the shift space: x spells the bits ahead of the
// cursor, y the bits behind it, both purely periodic, so both have exact
// denominator 2^L - 1.
Point embed_cursor(const std::vector<int>& s, int i) {
    const int L = static_cast<int>(s.size());
    const BigInt den = (BigInt(1) << L) - 1;
    BigInt ahead = 0;
    BigInt behind = 0;
    for (int j = 0; j < L; ++j) {
        ahead = ahead * 2 + s[(i + j) % L];
        behind = behind * 2 + s[((i - 1 - j) % L + L) % L];
    }
    return {Rational(ahead, den), Rational(behind, den)};
}

// x ∈ [0, 2/3) shifts right by 1/3, the rest wraps: a rational rotation
// whose orbits are exact triangles.
const char* kRotationSpec = R"(# rotation by one third along the x axis
degree 2
map rot
piece 0 2/3 0 1 -> 1 1/3 1 0
piece 2/3 1 0 1 -> 1 -2/3 1 0
)";

}  // namespace

TEST_CASE("shift-window sequences contain every word exactly once") {
    CHECK(debruijn_sequence(1) == std::vector<int>{0, 1});
    for (int n = 1; n <= 12; ++n) {
        std::vector<int> s = debruijn_sequence(n);
        const int len = static_cast<int>(s.size());
        REQUIRE(len == (1 << n));
        std::set<int> windows;
        for (int i = 0; i < len; ++i) {
            int w = 0;
            for (int j = 0; j < n; ++j) w = w * 2 + s[(i + j) % len];
            windows.insert(w);
        }
        CHECK(static_cast<int>(windows.size()) == len);
    }
    CHECK_THROWS_AS(debruijn_sequence(0), std::invalid_argument);
    CHECK_THROWS_AS(debruijn_sequence(25), budget_error);
}

TEST_CASE("finite shift-window graphs wire the pendants by the current bit") {
    for (int n = 1; n <= 6; ++n) {
        std::vector<int> s = debruijn_sequence(n);
        const int len = static_cast<int>(s.size());
        Structure g = debruijn_graph(n);
        REQUIRE(g.size() == 3 * len);
        CHECK(max_degree(g) <= 4);
        auto adjacent = [&](int a, int b) {
            const auto& nb = g.adjacent(a);
            return std::find(nb.begin(), nb.end(), b) != nb.end();
        };
        for (int i = 0; i < len; ++i) {
            CHECK(g.label(i) == "u" + std::to_string(i));
            CHECK(g.label(len + i) == "w" + std::to_string(i));
            CHECK(g.label(2 * len + i) == "z" + std::to_string(i));
            CHECK(adjacent(i, (i + 1) % len));
            CHECK(adjacent(i, len + i));
            CHECK(adjacent(2 * len + i, s[i] == 0 ? len + i : i));
            CHECK(g.degree(2 * len + i) == 1);
            CHECK(g.degree(len + i) == (s[i] == 0 ? 2 : 1));
        }
    }
}

TEST_CASE("the continuum shift space validates and maps points as designed") {
    Graphing g = debruijn_graphing();
    CHECK_NOTHROW(g.validate());
    CHECK(g.degree_bound == 4);
    CHECK(g.space.contains(Point{Rational(0), Rational(0)}));
    CHECK_FALSE(g.space.contains(Point{Rational(1), Rational(0)}));
    CHECK_FALSE(g.space.contains(Point{Rational(0), Rational(3)}));
    REQUIRE(g.generators.size() == 3);
    CHECK(g.generators[0].name == "f");
    CHECK_FALSE(g.generators[0].involution);
    CHECK(g.generators[1].name == "t1");
    CHECK(g.generators[1].involution);
    CHECK(g.generators[2].name == "t2");
    CHECK(g.generators[2].involution);

    const PiecewiseMap& f = g.generators[0];
    // Doubling the bits ahead, halving the bits behind.
    CHECK(*f.apply({Rational(1, 4), Rational(1, 2)}) ==
          Point{Rational(1, 2), Rational(1, 4)});
    CHECK(*f.apply({Rational(3, 4), Rational(1, 3)}) ==
          Point{Rational(1, 2), Rational(2, 3)});
    // The shift is invertible: exactly one preimage inside the row.
    std::vector<Point> pre = f.preimages({Rational(1, 2), Rational(1, 4)});
    REQUIRE(pre.size() == 1);
    CHECK(pre[0] == Point{Rational(1, 4), Rational(1, 2)});
    CHECK_FALSE(f.apply({Rational(1, 4), Rational(3, 2)}).has_value());  // row 1

    // The involutions undo themselves pointwise wherever they act.
    Rng rng = Rng::stream(99, 0);
    for (int trial = 0; trial < 50; ++trial) {
        Point p = sample_root(g.space, rng);
        for (int gen : {1, 2}) {
            auto q = g.generators[gen].apply(p);
            if (!q.has_value()) continue;
            auto back = g.generators[gen].apply(*q);
            REQUIRE(back.has_value());
            CHECK(*back == p);
        }
    }

    // Neighbor lists are symmetric and respect the degree bound.
    rng = Rng::stream(99, 1);
    for (int trial = 0; trial < 25; ++trial) {
        Point p = sample_root(g.space, rng);
        std::vector<Point> nbrs = g.neighbors(p);
        CHECK(static_cast<int>(nbrs.size()) <= g.degree_bound);
        for (const Point& q : nbrs) {
            std::vector<Point> back = g.neighbors(q);
            CHECK(std::find(back.begin(), back.end(), p) != back.end());
        }
    }
    CHECK_THROWS_AS(g.neighbors(Point{Rational(5), Rational(0)}), std::invalid_argument);
}

TEST_CASE("root sampling stays in the space and is reproducible") {
    Graphing g = debruijn_graphing();
    int row_hits[3] = {0, 0, 0};
    for (int i = 0; i < 300; ++i) {
        Rng rng = Rng::stream(7, static_cast<std::uint64_t>(i));
        Point p = sample_root(g.space, rng);
        CHECK(g.space.contains(p));
        // The fractional parts are 64-bit dyadics; the y offset is an integer.
        BigInt dx = denominator(p.x);
        BigInt dy = denominator(p.y);
        CHECK((dx & (dx - 1)) == 0);
        CHECK((dy & (dy - 1)) == 0);
        row_hits[p.y < 1 ? 0 : (p.y < 2 ? 1 : 2)]++;
        Rng replay = Rng::stream(7, static_cast<std::uint64_t>(i));
        CHECK(sample_root(g.space, replay) == p);
    }
    // Every unit row of the y extent is reachable and roughly uniform.
    for (int row = 0; row < 3; ++row) CHECK(row_hits[row] >= 60);
}

TEST_CASE("periodic points of the continuum shift carry the finite windows") {
    Graphing g = debruijn_graphing();
    const PiecewiseMap& f = g.generators[0];
    for (int n : {3, 4}) {
        std::vector<int> s = debruijn_sequence(n);
        const int len = static_cast<int>(s.size());
        Structure fin = debruijn_graph(n);
        std::vector<Point> u(len);
        for (int i = 0; i < len; ++i) u[i] = embed_cursor(s, i);

        // The shift advances the cursor along the periodic orbit.
        for (int i = 0; i < len; ++i) {
            auto next = f.apply(u[i]);
            REQUIRE(next.has_value());
            CHECK(*next == u[(i + 1) % len]);
        }

        // Finite vertex (class, i) sits at the embedded point shifted up by
        // its row; the rooted balls agree code-for-code at every radius.
        for (int i = 0; i < len; ++i) {
            for (int cls = 0; cls < 3; ++cls) {
                Point p{u[i].x, u[i].y + cls};
                const int v = cls * len + i;
                CAPTURE(n);
                CAPTURE(i);
                CAPTURE(cls);
                for (int r = 0; r <= 4; ++r) {
                    RootedBall cont = graphing_ball(g, p, r);
                    RootedBall finb = ball(fin, std::vector<int>{v}, r);
                    CHECK(canonical_code(cont) == canonical_code(finb));
                }
            }
        }
    }
}

TEST_CASE("an injected periodic orbit forms its own alien component") {
    Graphing g = debruijn_graphing();
    // Period 4, bits 0001: ahead 0b0001/15, behind 0b1000/15.
    Point p{Rational(1, 15), Rational(8, 15)};
    RootedBall comp = graphing_ball(g, p, 6);
    CHECK(comp.structure.size() == 12);  // 4 cursors, each with both pendants
    CHECK(graphing_ball(g, p, 7).structure.size() == 12);

    // Its short cycle wraps inside radius 2, so the code matches nothing the
    // genuine statistics can produce.
    BallCode alien = canonical_code(graphing_ball(g, p, 2));
    GraphingBallStats stats = graphing_ball_stats(g, 2, 2000, 11, 2);
    CHECK(stats.freq.find(alien) == stats.freq.end());
}

TEST_CASE("sampled ball statistics: determinism, threads, injection, cleaning") {
    Graphing g = debruijn_graphing();

    GraphingBallStats a = graphing_ball_stats(g, 1, 600, 3);
    CHECK(a.radius == 1);
    CHECK(a.samples == 600);
    CHECK(a.total == 600);
    CHECK(a.seed == 3);
    Rational mass(0);
    for (const auto& [code, fr] : a.freq) mass += fr;
    CHECK(mass == 1);
    for (const auto& [code, rep] : a.representative) CHECK(canonical_code(rep) == code);
    for (const auto& [code, root] : a.first_root) {
        CHECK(canonical_code(graphing_ball(g, root, 1)) == code);
    }

    GraphingBallStats b = graphing_ball_stats(g, 1, 600, 3);
    CHECK(a.freq == b.freq);
    GraphingBallStats c = graphing_ball_stats(g, 1, 600, 3, 4);
    CHECK(a.freq == c.freq);
    GraphingBallStats d = graphing_ball_stats(g, 1, 600, 4);
    CHECK(a.freq != d.freq);

    // Against the finite analogue the sampled picture is already close.
    BallDistribution finite = ball_distribution(debruijn_graph(4), 1);
    GraphingBallStats wide = graphing_ball_stats(g, 1, 2000, 0, 2);
    CHECK(tv_distance(wide.freq, finite.freq) <= Rational(1, 20));

    // Injected roots ride along with their multiplicity.
    Point orbit{Rational(1, 15), Rational(8, 15)};
    std::vector<InjectedPoint> inj = {{orbit, 1}};
    GraphingBallStats spiked = graphing_ball_stats(g, 2, 1000, 3, 2, inj);
    CHECK(spiked.total == 1001);
    BallCode alien = canonical_code(graphing_ball(g, orbit, 2));
    CHECK(spiked.freq.at(alien) == Rational(1, 1001));
    CHECK(spiked.first_root.at(alien) == orbit);

    // Cleaning removes the trace mass and renormalizes what is left.
    CleanResult cleaned = clean(spiked, Rational(1, 100));
    CHECK(cleaned.removed.count(alien) == 1);
    CHECK(cleaned.kept.freq.count(alien) == 0);
    Rational removed_sum(0);
    for (const auto& [code, fr] : cleaned.removed) removed_sum += fr;
    CHECK(cleaned.removed_mass == removed_sum);
    Rational kept_sum(0);
    for (const auto& [code, fr] : cleaned.kept.freq) kept_sum += fr;
    CHECK(kept_sum == 1);
    for (const auto& [code, fr] : cleaned.kept.freq) {
        CHECK(fr == spiked.freq.at(code) / (1 - cleaned.removed_mass));
    }

    // A single-code distribution survives even a threshold of one.
    GraphingBallStats point = graphing_ball_stats(g, 0, 50, 5);
    REQUIRE(point.freq.size() == 1);
    CHECK_NOTHROW(clean(point, Rational(1)));
    // With several codes a threshold of one removes everything: an error.
    CHECK_THROWS_AS(clean(spiked, Rational(1)), std::invalid_argument);
    CHECK_THROWS_AS(clean(spiked, Rational(-1, 2)), std::invalid_argument);
    CHECK_THROWS_AS(clean(spiked, Rational(3, 2)), std::invalid_argument);

    // Input validation.
    CHECK_THROWS_AS(graphing_ball_stats(g, -1, 10, 0), std::invalid_argument);
    CHECK_THROWS_AS(graphing_ball_stats(g, 1, -1, 0), std::invalid_argument);
    CHECK_THROWS_AS(graphing_ball_stats(g, 1, 0, 0), std::invalid_argument);
    std::vector<InjectedPoint> bad = {{orbit, 0}};
    CHECK_THROWS_AS(graphing_ball_stats(g, 1, 10, 0, 1, bad), std::invalid_argument);
}

TEST_CASE("threshold comparison of code distributions") {
    BallDistribution star = ball_distribution(star_graph(3), 1);
    REQUIRE(star.freq.size() == 2);
    BallCode c1 = star.freq.begin()->first;
    BallCode c2 = std::next(star.freq.begin())->first;

    std::map<BallCode, Rational> left = {{c1, Rational(1, 2)}, {c2, Rational(1, 2)}};
    std::map<BallCode, Rational> right = {{c1, Rational(49, 100)}, {c2, Rational(51, 100)}};

    HanfReport same = hanf_check(left, right, 3, 100);
    CHECK(same.pass);
    CHECK(same.t == 3);
    CHECK(same.scale == 100);
    CHECK(same.mismatches.empty());

    // With the cap far out the raw counts differ.
    HanfReport raw = hanf_check(left, right, 60, 100);
    CHECK_FALSE(raw.pass);
    REQUIRE(raw.mismatches.size() == 2);
    CHECK(raw.mismatches[0].code == c1);
    CHECK(raw.mismatches[0].left == 50);
    CHECK(raw.mismatches[0].right == 49);
    CHECK(raw.mismatches[1].left == 50);
    CHECK(raw.mismatches[1].right == 51);

    // A code missing on one side counts as zero there.
    std::map<BallCode, Rational> only = {{c2, Rational(1)}};
    HanfReport onesided = hanf_check(left, only, 3, 100);
    CHECK_FALSE(onesided.pass);
    REQUIRE(onesided.mismatches.size() == 1);
    CHECK(onesided.mismatches[0].code == c1);
    CHECK(onesided.mismatches[0].left == 3);
    CHECK(onesided.mismatches[0].right == 0);

    // Counts at or above the threshold are indistinguishable.
    std::map<BallCode, Rational> tl = {{c1, Rational(3, 100)}, {c2, Rational(97, 100)}};
    std::map<BallCode, Rational> tr = {{c1, Rational(7, 100)}, {c2, Rational(93, 100)}};
    CHECK(hanf_check(tl, tr, 3, 100).pass);
    CHECK_FALSE(hanf_check(tl, tr, 7, 100).pass);

    CHECK_THROWS_AS(hanf_check(left, right, -1, 100), std::invalid_argument);
    CHECK_THROWS_AS(hanf_check(left, right, 3, 0), std::invalid_argument);
}

TEST_CASE("graphing text format parses, validates, and reports positions") {
    Graphing rot = parse_graphing(kRotationSpec, "rot.spec");
    CHECK(rot.degree_bound == 2);
    CHECK(rot.space.x1 == 1);  // default unit square
    REQUIRE(rot.generators.size() == 1);
    CHECK(rot.generators[0].name == "rot");
    CHECK_FALSE(rot.generators[0].involution);

    // Orbits are exact triangles: the ball of any point is a 3-cycle.
    RootedBall tri = graphing_ball(rot, {Rational(0), Rational(0)}, 2);
    CHECK(tri.structure.size() == 3);
    CHECK(canonical_code(tri) == canonical_code(RootedBall{cycle_graph(3), {0}, 2}));
    // Saturation: larger radii see the same component.
    CHECK(canonical_code(graphing_ball(rot, {Rational(0), Rational(0)}, 5)) ==
          canonical_code(RootedBall{cycle_graph(3), {0}, 5}));

    // An explicit space line is honored.
    Graphing tall = parse_graphing(
        "space 0 1 0 2\ndegree 2\nmap up\npiece 0 1 0 1 -> 1 0 1 1\n", "tall.spec");
    CHECK(tall.space.y1 == 2);
    CHECK(tall.neighbors({Rational(1, 2), Rational(1, 2)}).size() == 1);

    // A declared degree bound is enforced at traversal time.
    Graphing tight = parse_graphing(
        "degree 1\nmap rot\npiece 0 2/3 0 1 -> 1 1/3 1 0\npiece 2/3 1 0 1 -> 1 -2/3 1 0\n",
        "tight.spec");
    CHECK_THROWS_AS(tight.neighbors({Rational(0), Rational(0)}), std::invalid_argument);

    auto parse_fails_with = [](const std::string& text, const std::string& needle) {
        try {
            parse_graphing(text, "bad.spec");
            FAIL_CHECK("expected a parse failure containing '" << needle << "'");
        } catch (const parse_error& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    parse_fails_with("map f\npiece 0 1 0 1 -> 1 0 1 0\n", "missing 'degree'");
    parse_fails_with("degree 2\npiece 0 1 0 1 -> 1 0 1 0\n",
                     "piece before any 'map' or 'involution'");
    parse_fails_with("degree 2\nmap f\npiece 0 1 0 1 -> 1 0\n",
                     "expected 'piece x0 x1 y0 y1 -> ax bx ay by'");
    parse_fails_with("degree 2\nmap f\npiece 0 1 0 1 -> 2 0 1 0\n", "preserve area");
    parse_fails_with("degree 2\nmap f\npiece 0 1 0 1 -> 1 0 1 0\nwobble\n",
                     "unknown directive 'wobble'");
    parse_fails_with("degree 2\nmap f\npiece 0 x 0 1 -> 1 0 1 0\n", "bad rational 'x'");
    parse_fails_with("degree 0\nmap f\npiece 0 1 0 1 -> 1 0 1 0\n",
                     "degree must be a positive integer");
    parse_fails_with(
        "degree 2\nmap f\npiece 0 1 0 1 -> 1 0 1 0\npiece 1/2 1 0 1 -> 1 -1/2 1 0\n",
        "overlapping piece domains");
    parse_fails_with("degree 2\ninvolution t\npiece 0 1/2 0 1 -> 1 1/2 1 0\n",
                     "declared an involution but is not one");
    parse_fails_with("degree 2\nmap f\npiece 0 1 0 2 -> 1 0 1 0\n",
                     "piece domain outside the space");

    // Line numbers point at the offending line.
    try {
        parse_graphing("degree 2\nmap f\npiece 0 1 0 1 -> 1 0\n", "bad.spec");
        FAIL_CHECK("expected a parse failure");
    } catch (const parse_error& e) {
        CHECK(std::string(e.what()).find("bad.spec:3") != std::string::npos);
        CHECK(e.position == 3);
    }

    CHECK_THROWS_AS(load_graphing("/nonexistent/gr.spec"), file_error);
}

TEST_CASE("ball extraction from a graphing validates its arguments") {
    Graphing g = debruijn_graphing();
    CHECK_THROWS_AS(graphing_ball(g, {Rational(2), Rational(0)}, 1), std::invalid_argument);
    CHECK_THROWS_AS(graphing_ball(g, {Rational(0), Rational(0)}, -1), std::invalid_argument);
    // Radius zero is the bare root.
    RootedBall r0 = graphing_ball(g, {Rational(1, 3), Rational(1, 3)}, 0);
    CHECK(r0.structure.size() == 1);
    CHECK(r0.roots == std::vector<int>{0});
    CHECK(r0.radius == 0);
}
