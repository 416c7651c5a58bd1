#pragma once

#include "structlim/structure.hpp"

#include <compare>
#include <span>
#include <string>

namespace structlim {

/// Canonical encoding of a rooted structure. Two balls get equal bytes
/// exactly when an isomorphism maps roots to roots positionally; the bytes
/// decode back to the structure, so distinct codes mean non-isomorphic.
struct BallCode {
    std::string bytes;
    int radius = 0;
    int root_count = 0;

    auto operator<=>(const BallCode&) const = default;
    std::string hex() const;
};

/// Canonical form by color refinement with backtracking over the first
/// ambiguous cell; ties resolved by the lexicographically least encoding.
/// Roots are pinned by their positions before refinement starts.
std::string canonical_bytes(const Structure& s, std::span<const int> roots);

BallCode canonical_code(const RootedBall& b);

bool isomorphic(const Structure& a, const Structure& b);

}  // namespace structlim
