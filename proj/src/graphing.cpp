#include "structlim/graphing.hpp"

#include "structlim/errors.hpp"
#include "structlim/io.hpp"

#include <algorithm>
#include <exception>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

namespace structlim {

bool Box::contains(const Point& p) const {
    return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1;
}

bool Box::overlaps(const Box& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
}

Point AffineRule::apply(const Point& p) const {
    return {ax * p.x + bx, ay * p.y + by};
}

Box AffineRule::apply(const Box& b) const {
    // Positive scales keep the half-open orientation.
    return {ax * b.x0 + bx, ax * b.x1 + bx, ay * b.y0 + by, ay * b.y1 + by};
}

std::optional<Point> PiecewiseMap::apply(const Point& p) const {
    for (const auto& piece : pieces) {
        if (piece.domain.contains(p)) return piece.rule.apply(p);
    }
    return std::nullopt;
}

std::vector<Point> PiecewiseMap::preimages(const Point& p) const {
    std::vector<Point> out;
    for (const auto& piece : pieces) {
        Point q{(p.x - piece.rule.bx) / piece.rule.ax, (p.y - piece.rule.by) / piece.rule.ay};
        if (piece.domain.contains(q)) out.push_back(std::move(q));
    }
    return out;
}

std::vector<Point> Graphing::neighbors(const Point& p) const {
    if (!space.contains(p)) throw std::invalid_argument("point outside the graphing space");
    // Neighbor lists are tiny (at most the degree bound), so linear dedup by
    // equality beats an ordered set: rational equality is a plain limb
    // compare while ordering needs cross-multiplications.
    std::vector<Point> out;
    auto push = [&](Point q) {
        if (q == p) return;
        for (const Point& seen : out) {
            if (seen == q) return;
        }
        out.push_back(std::move(q));
    };
    for (const auto& gen : generators) {
        if (auto q = gen.apply(p)) push(std::move(*q));
        for (auto& q : gen.preimages(p)) push(std::move(q));
    }
    if (static_cast<int>(out.size()) > degree_bound) {
        throw std::invalid_argument("neighbor count exceeds the declared degree bound");
    }
    return out;
}

void Graphing::validate() const {
    auto proper = [](const Box& b) { return b.x0 < b.x1 && b.y0 < b.y1; };
    auto inside = [&](const Box& b) {
        return b.x0 >= space.x0 && b.x1 <= space.x1 && b.y0 >= space.y0 && b.y1 <= space.y1;
    };
    if (!proper(space)) throw std::invalid_argument("degenerate space box");
    if (degree_bound < 1) throw std::invalid_argument("degree bound must be at least 1");
    if (generators.empty()) throw std::invalid_argument("graphing needs at least one generator");

    for (const auto& gen : generators) {
        if (gen.name.empty()) throw std::invalid_argument("generator without a name");
        if (gen.pieces.empty()) {
            throw std::invalid_argument("generator " + gen.name + " has no pieces");
        }
        std::vector<Box> images;
        for (const auto& piece : gen.pieces) {
            if (!proper(piece.domain)) {
                throw std::invalid_argument("empty piece domain in generator " + gen.name);
            }
            if (!inside(piece.domain)) {
                throw std::invalid_argument("piece domain outside the space in generator " +
                                            gen.name);
            }
            if (piece.rule.ax <= 0 || piece.rule.ay <= 0) {
                throw std::invalid_argument("piece scales must be positive in generator " +
                                            gen.name);
            }
            if (piece.rule.ax * piece.rule.ay != 1) {
                throw std::invalid_argument("piece must preserve area in generator " + gen.name);
            }
            Box image = piece.rule.apply(piece.domain);
            if (!inside(image)) {
                throw std::invalid_argument("piece image outside the space in generator " +
                                            gen.name);
            }
            images.push_back(std::move(image));
        }
        for (std::size_t i = 0; i < gen.pieces.size(); ++i) {
            for (std::size_t j = i + 1; j < gen.pieces.size(); ++j) {
                if (gen.pieces[i].domain.overlaps(gen.pieces[j].domain)) {
                    throw std::invalid_argument("overlapping piece domains in generator " +
                                                gen.name);
                }
                if (images[i].overlaps(images[j])) {
                    throw std::invalid_argument("overlapping piece images in generator " +
                                                gen.name);
                }
            }
        }
        if (!gen.involution) continue;
        // Involution: every piece's image is exactly the domain of a piece
        // whose rule composes with it to the identity.
        for (std::size_t i = 0; i < gen.pieces.size(); ++i) {
            const AffineRule& r = gen.pieces[i].rule;
            bool matched = false;
            for (const auto& back : gen.pieces) {
                const Box& d = back.domain;
                if (d.x0 != images[i].x0 || d.x1 != images[i].x1 || d.y0 != images[i].y0 ||
                    d.y1 != images[i].y1) {
                    continue;
                }
                const AffineRule& s = back.rule;
                matched = s.ax * r.ax == 1 && s.ax * r.bx + s.bx == 0 &&
                          s.ay * r.ay == 1 && s.ay * r.by + s.by == 0;
                break;
            }
            if (!matched) {
                throw std::invalid_argument("generator " + gen.name +
                                            " is declared an involution but is not one");
            }
        }
    }
}

std::vector<int> debruijn_sequence(int n) {
    if (n < 1) throw std::invalid_argument("sequence order must be at least 1");
    if (n > 24) throw budget_error("sequence order too large");
    if (n == 1) return {0, 1};
    // Euler circuit over (n-1)-bit windows; each window has two outgoing
    // extensions, so the circuit spells every n-bit word once.
    const int half = 1 << (n - 1);
    std::vector<int> used(half, 0);
    std::vector<std::pair<int, int>> stack{{0, -1}};  // window, incoming bit
    std::vector<int> seq;
    seq.reserve(1 << n);
    while (!stack.empty()) {
        auto [node, bit] = stack.back();
        if (used[node] < 2) {
            int b = used[node]++;
            stack.emplace_back((node * 2 + b) & (half - 1), b);
        } else {
            if (bit >= 0) seq.push_back(bit);
            stack.pop_back();
        }
    }
    std::reverse(seq.begin(), seq.end());
    return seq;
}

Structure debruijn_graph(int n) {
    std::vector<int> s = debruijn_sequence(n);
    const int count = static_cast<int>(s.size());
    std::vector<std::pair<int, int>> edges;
    std::vector<std::string> labels(3 * count);
    for (int i = 0; i < count; ++i) {
        labels[i] = "u" + std::to_string(i);
        labels[count + i] = "w" + std::to_string(i);
        labels[2 * count + i] = "z" + std::to_string(i);
        edges.emplace_back(i, (i + 1) % count);
        edges.emplace_back(i, count + i);
        edges.emplace_back(2 * count + i, s[i] == 0 ? count + i : i);
    }
    return Structure::graph(3 * count, edges, labels);
}

Graphing debruijn_graphing() {
    const Rational half(1, 2);
    Graphing g;
    g.space = {0, 1, 0, 3};
    g.degree_bound = 4;

    // Row 0 carries the shift: x = 0.s_i s_{i+1}..., y = 0.s_{i-1} s_{i-2}...;
    // advancing the window doubles x and pushes the outgoing bit onto y.
    PiecewiseMap f;
    f.name = "f";
    f.pieces = {
        {{0, half, 0, 1}, {2, 0, half, 0}},
        {{half, 1, 0, 1}, {2, -1, half, half}},
    };

    PiecewiseMap t1;
    t1.name = "t1";
    t1.involution = true;
    t1.pieces = {
        {{0, 1, 0, 1}, {1, 0, 1, 1}},
        {{0, 1, 1, 2}, {1, 0, 1, -1}},
    };

    // The second pendant hangs off row 1 when the current bit is 0 (x < 1/2)
    // and off row 0 when it is 1.
    PiecewiseMap t2;
    t2.name = "t2";
    t2.involution = true;
    t2.pieces = {
        {{0, half, 1, 2}, {1, 0, 1, 1}},
        {{half, 1, 0, 1}, {1, 0, 1, 2}},
        {{0, half, 2, 3}, {1, 0, 1, -1}},
        {{half, 1, 2, 3}, {1, 0, 1, -2}},
    };

    g.generators = {std::move(f), std::move(t1), std::move(t2)};
    g.validate();
    return g;
}

Graphing parse_graphing(const std::string& text, const std::string& origin) {
    Graphing g;
    g.space = {0, 1, 0, 1};
    bool saw_degree = false;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;

    auto fail = [&](const std::string& what) -> void {
        throw parse_error(origin + ":" + std::to_string(lineno) + ": " + what, lineno);
    };
    auto rational_field = [&](const std::string& token) {
        try {
            return parse_rational(token);
        } catch (const std::exception&) {
            fail("bad rational '" + token + "'");
            return Rational(0);
        }
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream split(line);
        std::vector<std::string> fields;
        for (std::string tok; split >> tok;) fields.push_back(std::move(tok));
        if (fields.empty()) continue;

        const std::string& head = fields[0];
        if (head == "space") {
            if (fields.size() != 5) fail("expected 'space x0 x1 y0 y1'");
            g.space = {rational_field(fields[1]), rational_field(fields[2]),
                       rational_field(fields[3]), rational_field(fields[4])};
        } else if (head == "degree") {
            if (fields.size() != 2) fail("expected 'degree d'");
            Rational d = rational_field(fields[1]);
            if (denominator(d) != 1 || d < 1) fail("degree must be a positive integer");
            g.degree_bound = static_cast<int>(numerator(d).convert_to<long long>());
            saw_degree = true;
        } else if (head == "map" || head == "involution") {
            if (fields.size() != 2) fail("expected '" + head + " name'");
            PiecewiseMap gen;
            gen.name = fields[1];
            gen.involution = head == "involution";
            g.generators.push_back(std::move(gen));
        } else if (head == "piece") {
            if (g.generators.empty()) fail("piece before any 'map' or 'involution'");
            if (fields.size() != 10 || fields[5] != "->") {
                fail("expected 'piece x0 x1 y0 y1 -> ax bx ay by'");
            }
            MapPiece piece;
            piece.domain = {rational_field(fields[1]), rational_field(fields[2]),
                            rational_field(fields[3]), rational_field(fields[4])};
            piece.rule = {rational_field(fields[6]), rational_field(fields[7]),
                          rational_field(fields[8]), rational_field(fields[9])};
            g.generators.back().pieces.push_back(std::move(piece));
        } else {
            fail("unknown directive '" + head + "'");
        }
    }
    if (!saw_degree) throw parse_error(origin + ": missing 'degree' line", 0);
    try {
        g.validate();
    } catch (const std::invalid_argument& e) {
        throw parse_error(origin + ": " + e.what(), 0);
    }
    return g;
}

Graphing load_graphing(const std::string& path) {
    return parse_graphing(read_text_file(path), path);
}

Point sample_root(const Box& space, Rng& rng) {
    static const BigInt kScale = BigInt(1) << 64;
    auto axis = [&](const Rational& lo, const Rational& hi) -> Rational {
        Rational extent = hi - lo;
        Rational offset(0);
        if (denominator(extent) == 1 && extent > 1) {
            offset = Rational(BigInt(rng.below(numerator(extent).convert_to<std::uint64_t>())));
            extent = 1;
        }
        Rational frac(BigInt(rng.next()), kScale);
        return lo + offset + extent * frac;
    };
    Point p;
    p.x = axis(space.x0, space.x1);
    p.y = axis(space.y0, space.y1);
    return p;
}

RootedBall graphing_ball(const Graphing& g, const Point& root, int r) {
    if (r < 0) throw std::invalid_argument("ball radius must be non-negative");
    if (!g.space.contains(root)) throw std::invalid_argument("root outside the graphing space");

    // Balls are tiny (bounded by degree^radius), so vertices live in a plain
    // vector in BFS order and lookups are linear equality scans; ordered
    // Point containers would pay a rational cross-multiplication per probe.
    std::vector<Point> order{root};
    std::vector<int> depth{0};
    std::vector<std::vector<Point>> links;
    auto find_index = [&](const Point& q) -> int {
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (order[i] == q) return static_cast<int>(i);
        }
        return -1;
    };
    for (std::size_t qi = 0; qi < order.size(); ++qi) {
        std::vector<Point> nbrs = g.neighbors(order[qi]);
        if (depth[qi] < r) {
            for (const Point& q : nbrs) {
                if (find_index(q) < 0) {
                    order.push_back(q);
                    depth.push_back(depth[qi] + 1);
                }
            }
        }
        links.push_back(std::move(nbrs));
    }

    std::vector<std::string> labels;
    labels.reserve(order.size());
    for (const Point& p : order) {
        labels.push_back(rational_string(p.x) + "," + rational_string(p.y));
    }
    std::vector<std::pair<int, int>> edges;
    for (std::size_t qi = 0; qi < links.size(); ++qi) {
        int i = static_cast<int>(qi);
        for (const Point& q : links[qi]) {
            int j = find_index(q);
            if (j >= 0 && i < j) edges.emplace_back(i, j);
        }
    }
    return RootedBall{Structure::graph(static_cast<int>(order.size()), edges, labels), {0}, r};
}

GraphingBallStats graphing_ball_stats(const Graphing& g, int r, std::int64_t samples,
                                      std::uint64_t seed, int threads,
                                      std::span<const InjectedPoint> injected) {
    if (r < 0) throw std::invalid_argument("ball radius must be non-negative");
    if (samples < 0) throw std::invalid_argument("sample count must be non-negative");
    std::int64_t total = samples;
    for (const auto& inj : injected) {
        if (inj.count < 1) throw std::invalid_argument("injected multiplicity must be positive");
        total += inj.count;
    }
    if (total <= 0) throw std::invalid_argument("no roots to examine");

    struct Bucket {
        std::int64_t count = 0;
        RootedBall rep;
        Point root;
    };
    using BucketMap = std::map<BallCode, Bucket>;

    auto record = [&](BucketMap& out, const Point& p, std::int64_t count) {
        RootedBall b = graphing_ball(g, p, r);
        BallCode code = canonical_code(b);
        auto it = out.find(code);
        if (it == out.end()) {
            out.emplace(std::move(code), Bucket{count, std::move(b), p});
        } else {
            it->second.count += count;
        }
    };
    auto collect = [&](std::int64_t lo, std::int64_t hi) {
        BucketMap out;
        for (std::int64_t i = lo; i < hi; ++i) {
            Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
            record(out, sample_root(g.space, rng), 1);
        }
        return out;
    };

    if (threads < 1) threads = 1;
    threads = static_cast<int>(std::min<std::int64_t>(threads, std::max<std::int64_t>(samples, 1)));
    std::vector<BucketMap> partial(threads);
    if (threads == 1) {
        partial[0] = collect(0, samples);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) {
            std::int64_t lo = samples * t / threads;
            std::int64_t hi = samples * (t + 1) / threads;
            pool.emplace_back([&, t, lo, hi] {
                try {
                    partial[t] = collect(lo, hi);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& err : errors) {
            if (err) std::rethrow_exception(err);
        }
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
    for (const auto& inj : injected) record(merged, inj.point, inj.count);

    GraphingBallStats stats;
    stats.radius = r;
    stats.samples = samples;
    stats.total = total;
    stats.seed = seed;
    for (auto& [code, bucket] : merged) {
        stats.freq.emplace(code, Rational(bucket.count, total));
        stats.first_root.emplace(code, std::move(bucket.root));
        stats.representative.emplace(code, std::move(bucket.rep));
    }
    return stats;
}

CleanResult clean(const GraphingBallStats& stats, const Rational& threshold) {
    if (threshold < 0 || threshold > 1) {
        throw std::invalid_argument("cleaning threshold must lie in [0, 1]");
    }
    CleanResult out;
    out.kept.radius = stats.radius;
    out.kept.samples = stats.samples;
    out.kept.total = stats.total;
    out.kept.seed = stats.seed;
    out.removed_mass = Rational(0);
    Rational kept_mass(0);
    for (const auto& [code, fr] : stats.freq) {
        if (fr < threshold) {
            out.removed.emplace(code, fr);
            out.removed_mass += fr;
        } else {
            out.kept.freq.emplace(code, fr);
            out.kept.representative.emplace(code, stats.representative.at(code));
            out.kept.first_root.emplace(code, stats.first_root.at(code));
            kept_mass += fr;
        }
    }
    if (out.kept.freq.empty()) {
        throw std::invalid_argument("cleaning threshold removed every ball code");
    }
    for (auto& [code, fr] : out.kept.freq) fr /= kept_mass;
    return out;
}

HanfReport hanf_check(const std::map<BallCode, Rational>& left,
                      const std::map<BallCode, Rational>& right, int t,
                      std::int64_t scale) {
    if (t < 0) throw std::invalid_argument("count threshold must be non-negative");
    if (scale < 1) throw std::invalid_argument("scale must be positive");
    HanfReport report;
    report.t = t;
    report.scale = scale;
    auto capped = [&](const Rational& fr) -> std::int64_t {
        Rational scaled = fr * scale;
        BigInt floor = numerator(scaled) / denominator(scaled);
        if (floor > t) return t;
        return floor.convert_to<std::int64_t>();
    };
    auto la = left.begin();
    auto rb = right.begin();
    while (la != left.end() || rb != right.end()) {
        const BallCode* code = nullptr;
        std::int64_t lc = 0;
        std::int64_t rc = 0;
        if (rb == right.end() || (la != left.end() && la->first < rb->first)) {
            code = &la->first;
            lc = capped(la->second);
            ++la;
        } else if (la == left.end() || rb->first < la->first) {
            code = &rb->first;
            rc = capped(rb->second);
            ++rb;
        } else {
            code = &la->first;
            lc = capped(la->second);
            rc = capped(rb->second);
            ++la;
            ++rb;
        }
        if (lc != rc) {
            report.pass = false;
            report.mismatches.push_back({*code, lc, rc});
        }
    }
    return report;
}

}  // namespace structlim
