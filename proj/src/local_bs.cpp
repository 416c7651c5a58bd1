#include "structlim/local_bs.hpp"

#include "structlim/density.hpp"
#include "structlim/errors.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

namespace structlim {

namespace {

struct CodeBucket {
    BigInt count;
    RootedBall rep;
};

using BucketMap = std::map<BallCode, CodeBucket>;

// Buckets for a contiguous vertex range, visited in ascending order so the
// first representative seen has the smallest root in the range.
BucketMap collect_range(const Structure& g, int r, int lo, int hi) {
    BucketMap out;
    for (int v = lo; v < hi; ++v) {
        RootedBall b = ball(g, std::vector<int>{v}, r);
        BallCode code = canonical_code(b);
        auto it = out.find(code);
        if (it == out.end()) {
            out.emplace(std::move(code), CodeBucket{BigInt(1), std::move(b)});
        } else {
            it->second.count += 1;
        }
    }
    return out;
}

}  // namespace

BallDistribution ball_distribution(const Structure& g, int r, int threads) {
    if (g.size() == 0) throw std::invalid_argument("ball distribution needs a non-empty structure");
    if (r < 0) throw std::invalid_argument("ball radius must be non-negative");
    if (threads < 1) threads = 1;
    const int n = g.size();
    threads = std::min<int>(threads, n);

    std::vector<BucketMap> partial(threads);
    if (threads == 1) {
        partial[0] = collect_range(g, r, 0, n);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) {
            int lo = static_cast<int>(static_cast<long long>(n) * t / threads);
            int hi = static_cast<int>(static_cast<long long>(n) * (t + 1) / threads);
            pool.emplace_back([&, t, lo, hi] { partial[t] = collect_range(g, r, lo, hi); });
        }
        for (auto& th : pool) th.join();
    }

    BucketMap merged;
    for (auto& part : partial) {
        for (auto& [code, bucket] : part) {
            auto it = merged.find(code);
            if (it == merged.end()) {
                merged.emplace(code, std::move(bucket));
            } else {
                it->second.count += bucket.count;
            }
        }
    }

    BallDistribution dist;
    dist.radius = r;
    dist.source_size = n;
    for (auto& [code, bucket] : merged) {
        dist.freq.emplace(code, Rational(bucket.count, n));
        dist.representative.emplace(code, std::move(bucket.rep));
    }
    return dist;
}

Rational rho(const Structure& g1, int root1, const Structure& g2, int root2) {
    if (root1 < 0 || root1 >= g1.size()) throw std::invalid_argument("root out of range");
    if (root2 < 0 || root2 >= g2.size()) throw std::invalid_argument("root out of range");
    if (g1.signature() != g2.signature()) {
        throw std::invalid_argument("rooted distance needs matching signatures");
    }
    // Balls stop growing once the radius covers the root's component, so
    // agreement through radius max(|G1|,|G2|) means rooted isomorphism.
    const int cap = std::max(g1.size(), g2.size());
    int agree = -1;
    for (int r = 0; r <= cap; ++r) {
        BallCode c1 = canonical_code(ball(g1, std::vector<int>{root1}, r));
        BallCode c2 = canonical_code(ball(g2, std::vector<int>{root2}, r));
        if (c1.bytes != c2.bytes) break;
        agree = r;
    }
    if (agree == cap) return Rational(0);
    if (agree < 0) return Rational(1);
    return Rational(1, 1 + agree);
}

Rational tv_distance(const std::map<BallCode, Rational>& a,
                     const std::map<BallCode, Rational>& b) {
    Rational sum(0);
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            sum += ia->second;
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            sum += ib->second;
            ++ib;
        } else {
            sum += abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return sum / 2;
}

Rational tv_distance(const BallDistribution& a, const BallDistribution& b) {
    if (a.radius != b.radius) {
        throw std::invalid_argument("total variation needs distributions of equal radius");
    }
    return tv_distance(a.freq, b.freq);
}

Rational local_density_from_balls(const Structure& g, const Formula& f) {
    FragmentFlags flags = classify(f);
    if (flags.free_var_count != 1) {
        throw std::invalid_argument("ball-based density needs exactly one free variable");
    }
    if (!flags.syntactic_local_radius) {
        throw std::invalid_argument("ball-based density needs a syntactically local formula");
    }
    BallDistribution dist = ball_distribution(g, *flags.syntactic_local_radius);
    Rational total(0);
    for (const auto& [code, frequency] : dist.freq) {
        const RootedBall& rep = dist.representative.at(code);
        if (satisfies(rep.structure, f, rep.roots)) total += frequency;
    }
    return total;
}

ProductExpansion product_expansion_density(const Structure& g, const Formula& f, int threads) {
    FragmentFlags flags = classify(f);
    const int p = flags.free_var_count;
    if (p < 2) {
        throw std::invalid_argument("product expansion needs at least two free variables");
    }
    if (!flags.syntactic_local_radius) {
        throw std::invalid_argument("product expansion needs a syntactically local formula");
    }
    const int r = *flags.syntactic_local_radius;
    BallDistribution dist = ball_distribution(g, r, threads);

    std::vector<const BallCode*> codes;
    std::vector<const RootedBall*> reps;
    std::vector<Rational> freqs;
    for (const auto& [code, frequency] : dist.freq) {
        codes.push_back(&code);
        reps.push_back(&dist.representative.at(code));
        freqs.push_back(frequency);
    }
    const std::size_t m = codes.size();
    std::uint64_t tuple_count = 1;
    for (int i = 0; i < p; ++i) {
        if (tuple_count > 2'000'000 / m + 1) {
            throw budget_error("product expansion over too many ball-code tuples; reduce the radius");
        }
        tuple_count *= m;
    }
    if (tuple_count > 2'000'000) {
        throw budget_error("product expansion over too many ball-code tuples; reduce the radius");
    }

    auto tuple_value = [&](std::uint64_t index) -> Rational {
        std::vector<int> pick(p);
        for (int i = p - 1; i >= 0; --i) {
            pick[i] = static_cast<int>(index % m);
            index /= m;
        }
        Structure joined = reps[pick[0]]->structure;
        std::vector<int> roots;
        roots.push_back(reps[pick[0]]->roots.at(0));
        for (int i = 1; i < p; ++i) {
            int offset = joined.size();
            joined = disjoint_union(joined, reps[pick[i]]->structure);
            roots.push_back(offset + reps[pick[i]]->roots.at(0));
        }
        if (!satisfies(joined, f, roots)) return Rational(0);
        Rational product(1);
        for (int i = 0; i < p; ++i) product *= freqs[pick[i]];
        return product;
    };

    if (threads < 1) threads = 1;
    threads = static_cast<int>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(tuple_count, 1)));
    Rational value(0);
    if (threads == 1) {
        for (std::uint64_t i = 0; i < tuple_count; ++i) value += tuple_value(i);
    } else {
        std::vector<Rational> partial(threads, Rational(0));
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) {
            std::uint64_t lo = tuple_count * t / threads;
            std::uint64_t hi = tuple_count * (t + 1) / threads;
            pool.emplace_back([&, t, lo, hi] {
                Rational acc(0);
                for (std::uint64_t i = lo; i < hi; ++i) acc += tuple_value(i);
                partial[t] = std::move(acc);
            });
        }
        for (auto& th : pool) th.join();
        for (auto& part : partial) value += part;
    }

    ProductExpansion out;
    out.value = std::move(value);
    const int n = g.size();
    const int d = max_degree(g);
    BigInt reach = d <= 0 ? BigInt(0) : BigInt(d) * pow(BigInt(d - 1), 2 * r);
    out.error_bound = Rational(BigInt(p) * (p - 1) / 2 * reach, n);

    // Exact for p = 2: the chance that two independent uniform roots are
    // within distance 2r (equal roots included). Union bound over pairs
    // beyond that, clamped to 1.
    BigInt close_pairs(0);
    for (int v = 0; v < n; ++v) {
        close_pairs += static_cast<int>(neighborhood(g, std::vector<int>{v}, 2 * r).size());
    }
    Rational conflict = Rational(BigInt(p) * (p - 1) / 2 * close_pairs, BigInt(n) * n);
    out.conflict_fraction = conflict > 1 ? Rational(1) : conflict;
    return out;
}

}  // namespace structlim
