#pragma once

#include "structlim/canonical.hpp"
#include "structlim/formula.hpp"
#include "structlim/rational.hpp"
#include "structlim/structure.hpp"

#include <map>
#include <span>

namespace structlim {

/// Empirical distribution of canonical r-ball codes over all vertices of one
/// structure. Frequencies are exact rationals summing to 1 (source_size > 0).
/// Each code keeps the ball of its smallest root vertex as representative.
struct BallDistribution {
    int radius = 0;
    int source_size = 0;
    std::map<BallCode, Rational> freq;
    std::map<BallCode, RootedBall> representative;
};

BallDistribution ball_distribution(const Structure& g, int r, int threads = 1);

/// Rooted-neighborhood distance: 0 when the rooted components are isomorphic,
/// otherwise 1/(1+r*) where r* is the largest radius at which the rooted
/// r*-balls are still isomorphic. Capped at 1 when even radius 0 disagrees.
Rational rho(const Structure& g1, int root1, const Structure& g2, int root2);

/// Total variation distance between two ball-code distributions of equal
/// radius: half the sum of absolute frequency differences.
Rational tv_distance(const BallDistribution& a, const BallDistribution& b);

/// Same, over bare frequency maps (callers vouch for matching radii).
Rational tv_distance(const std::map<BallCode, Rational>& a,
                     const std::map<BallCode, Rational>& b);

/// Density of a one-variable formula with syntactic locality radius r,
/// recovered from the r-ball distribution alone: each code is tested once on
/// its representative and charged its frequency.
Rational local_density_from_balls(const Structure& g, const Formula& f);

struct ProductExpansion {
    Rational value;           // sum over satisfying code tuples of frequency products
    Rational error_bound;     // p(p-1)/2 * d*(d-1)^(2r) / n for max degree d
    Rational conflict_fraction;  // exact chance two sampled roots land within 2r
};

/// Density estimate for a p-variable formula (p >= 2) of locality radius r,
/// treating the p root balls as independent draws from the ball distribution.
/// Exact on tuples whose roots are pairwise farther than 2r apart; the two
/// bound fields quantify the remaining tuples.
ProductExpansion product_expansion_density(const Structure& g, const Formula& f,
                                           int threads = 1);

}  // namespace structlim
