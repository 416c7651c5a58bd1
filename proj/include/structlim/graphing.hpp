#pragma once

#include "structlim/canonical.hpp"
#include "structlim/rational.hpp"
#include "structlim/rng.hpp"
#include "structlim/structure.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace structlim {

/// Exact point of a measured space; all coordinate arithmetic is rational.
struct Point {
    Rational x;
    Rational y;

    bool operator==(const Point& o) const { return x == o.x && y == o.y; }
    bool operator<(const Point& o) const { return x < o.x || (x == o.x && y < o.y); }
};

/// Half-open axis-aligned box [x0, x1) x [y0, y1).
struct Box {
    Rational x0, x1, y0, y1;

    bool contains(const Point& p) const;
    bool overlaps(const Box& o) const;
};

/// Orientation-preserving affine map (x, y) -> (ax*x + bx, ay*y + by).
struct AffineRule {
    Rational ax, bx, ay, by;

    Point apply(const Point& p) const;
    Box apply(const Box& b) const;
};

struct MapPiece {
    Box domain;
    AffineRule rule;
};

/// Partial measure-preserving transformation assembled from affine pieces
/// with pairwise disjoint domains and pairwise disjoint images.
struct PiecewiseMap {
    std::string name;
    bool involution = false;
    std::vector<MapPiece> pieces;

    std::optional<Point> apply(const Point& p) const;
    std::vector<Point> preimages(const Point& p) const;
};

/// Bounded-degree measured graph: points of the space, edges x ~ g(x) for
/// every generator g (and so also x ~ g^{-1}(x)).
struct Graphing {
    Box space;
    int degree_bound = 0;
    std::vector<PiecewiseMap> generators;

    /// Exact neighbor points in generator order, deduplicated, self-edges
    /// dropped. Throws when the count exceeds degree_bound.
    std::vector<Point> neighbors(const Point& p) const;

    /// Structural checks: pieces stay inside the space, scale product 1 per
    /// piece, disjoint domains and images per generator, and involution
    /// generators compose to the identity piece by piece.
    void validate() const;
};

/// Binary shift-window sequence of order n: length 2^n, cyclically containing
/// every n-bit word exactly once.
std::vector<int> debruijn_sequence(int n);

/// Finite shift-window graph on 3*2^n vertices: a cycle u_0..u_{2^n-1}, a
/// pendant w_i on each u_i, and a second pendant z_i on w_i when bit i of the
/// sequence is 0, on u_i when it is 1.
Structure debruijn_graph(int n);

/// The continuum analogue on [0,1) x [0,3): row 0 carries the two-sided shift
/// (x holds the bits ahead, y the bits behind), rows 1 and 2 carry the w and
/// z pendants, attached by two involutions.
Graphing debruijn_graphing();

/// Text format: optional `space x0 x1 y0 y1`, required `degree d`, then
/// `map NAME` / `involution NAME` sections of lines
/// `piece x0 x1 y0 y1 -> ax bx ay by`. `#` starts a comment.
Graphing parse_graphing(const std::string& text, const std::string& origin = "<input>");
Graphing load_graphing(const std::string& path);

/// Uniform draw: per axis 64 random bits scaled to the extent; an axis of
/// integer extent e > 1 first draws the unit row uniformly, keeping the
/// fractional part dyadic. Draw order is x axis then y axis.
Point sample_root(const Box& space, Rng& rng);

/// Induced subgraph on the exact r-neighborhood of the root, with labels
/// naming the points. Throws when a visited point exceeds the degree bound.
RootedBall graphing_ball(const Graphing& g, const Point& root, int r);

struct InjectedPoint {
    Point point;
    std::int64_t count = 1;
};

/// Empirical r-ball distribution over sampled roots. Sample i draws from
/// Rng::stream(seed, i), so results are independent of the thread count.
/// Injected points are appended after the samples with their multiplicity.
struct GraphingBallStats {
    int radius = 0;
    std::int64_t samples = 0;
    std::int64_t total = 0;  // samples plus injected multiplicity
    std::uint64_t seed = 0;
    std::map<BallCode, Rational> freq;
    std::map<BallCode, RootedBall> representative;
    std::map<BallCode, Point> first_root;
};

GraphingBallStats graphing_ball_stats(const Graphing& g, int r, std::int64_t samples,
                                      std::uint64_t seed, int threads = 1,
                                      std::span<const InjectedPoint> injected = {});

/// Removes codes below the frequency threshold and renormalizes the rest,
/// reporting what was dropped. Throws when nothing survives.
struct CleanResult {
    GraphingBallStats kept;
    std::map<BallCode, Rational> removed;
    Rational removed_mass;
};

CleanResult clean(const GraphingBallStats& stats, const Rational& threshold);

/// Threshold comparison of two ball-code distributions: per code, compare
/// min(t, floor(freq * scale)) on both sides.
struct HanfMismatch {
    BallCode code;
    std::int64_t left = 0;
    std::int64_t right = 0;
};

struct HanfReport {
    bool pass = true;
    int t = 0;
    std::int64_t scale = 0;
    std::vector<HanfMismatch> mismatches;
};

HanfReport hanf_check(const std::map<BallCode, Rational>& left,
                      const std::map<BallCode, Rational>& right, int t,
                      std::int64_t scale);

}  // namespace structlim
