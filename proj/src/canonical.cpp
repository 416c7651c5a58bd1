#include "structlim/canonical.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace structlim {

namespace {

void put_varint(std::string& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<char>((v & 0x7f) | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<char>(v));
}

// One canonicalization run over a fixed structure. Colors are integers in
// [0, n); refinement only ever splits classes because the previous color is
// the leading component of every refinement key.
class Canonizer {
public:
    Canonizer(const Structure& s, std::span<const int> roots)
        : s_(s), roots_(roots.begin(), roots.end()), n_(s.size()) {
        const Signature& sig = s_.signature();
        for (std::size_t rel = 0; rel < sig.relations.size(); ++rel) {
            const auto& tuples = s_.tuples(static_cast<int>(rel));
            for (std::size_t t = 0; t < tuples.size(); ++t) {
                const auto& tup = tuples[t];
                for (std::size_t pos = 0; pos < tup.size(); ++pos) {
                    occ_[tup[pos]].push_back(
                        {static_cast<int>(rel), static_cast<int>(t), static_cast<int>(pos)});
                }
            }
        }
    }

    std::string run() {
        std::vector<int> color = initial_colors();
        refine(color);
        search(color);
        return best_;
    }

private:
    struct Occurrence {
        int rel;
        int tuple;
        int pos;
    };

    std::vector<int> initial_colors() {
        // Vertices are split by the multiset of root slots they occupy.
        std::vector<std::pair<std::vector<int>, int>> keyed(n_);
        for (int v = 0; v < n_; ++v) keyed[v].second = v;
        for (std::size_t i = 0; i < roots_.size(); ++i) {
            keyed[roots_[i]].first.push_back(static_cast<int>(i));
        }
        return rank_keys(keyed);
    }

    static std::vector<int> rank_keys(std::vector<std::pair<std::vector<int>, int>>& keyed) {
        std::sort(keyed.begin(), keyed.end());
        std::vector<int> color(keyed.size(), 0);
        int next = -1;
        for (std::size_t i = 0; i < keyed.size(); ++i) {
            if (i == 0 || keyed[i].first != keyed[i - 1].first) ++next;
            color[keyed[i].second] = next;
        }
        return color;
    }

    static int color_count(const std::vector<int>& color) {
        int m = -1;
        for (int c : color) m = std::max(m, c);
        return m + 1;
    }

    void refine(std::vector<int>& color) const {
        int classes = color_count(color);
        for (;;) {
            std::vector<std::pair<std::vector<int>, int>> keyed(n_);
            std::vector<std::vector<int>> parts;
            for (int v = 0; v < n_; ++v) {
                keyed[v].second = v;
                auto& key = keyed[v].first;
                key.push_back(color[v]);
                parts.clear();
                auto it = occ_.find(v);
                if (it != occ_.end()) {
                    for (const auto& o : it->second) {
                        const auto& tup = s_.tuples(o.rel)[o.tuple];
                        std::vector<int> part;
                        part.reserve(tup.size() + 2);
                        part.push_back(o.rel);
                        part.push_back(o.pos);
                        for (int w : tup) part.push_back(color[w]);
                        parts.push_back(std::move(part));
                    }
                }
                std::sort(parts.begin(), parts.end());
                for (const auto& part : parts) {
                    key.push_back(static_cast<int>(part.size()));
                    key.insert(key.end(), part.begin(), part.end());
                }
            }
            color = rank_keys(keyed);
            int now = color_count(color);
            if (now == classes) return;
            classes = now;
        }
    }

    void search(std::vector<int> color) {
        int classes = color_count(color);
        if (classes == n_) {
            std::string enc = encode(color);
            if (!have_best_ || enc < best_) {
                best_ = std::move(enc);
                have_best_ = true;
            }
            return;
        }
        // First non-singleton class by color id; individualize each member.
        std::vector<int> members;
        for (int c = 0; c < classes; ++c) {
            members.clear();
            for (int v = 0; v < n_; ++v) {
                if (color[v] == c) members.push_back(v);
            }
            if (members.size() > 1) break;
        }
        for (int v : members) {
            std::vector<int> next = color;
            next[v] = classes;
            refine(next);
            search(std::move(next));
        }
    }

    std::string encode(const std::vector<int>& color) const {
        // A discrete coloring is a relabeling: vertex v becomes color[v].
        const Signature& sig = s_.signature();
        std::string out;
        put_varint(out, static_cast<std::uint64_t>(n_));
        put_varint(out, roots_.size());
        for (int r : roots_) put_varint(out, static_cast<std::uint64_t>(color[r]));
        put_varint(out, sig.relations.size());
        std::vector<std::vector<int>> relabeled;
        for (std::size_t rel = 0; rel < sig.relations.size(); ++rel) {
            put_varint(out, static_cast<std::uint64_t>(sig.relations[rel].arity));
            const auto& tuples = s_.tuples(static_cast<int>(rel));
            relabeled.clear();
            relabeled.reserve(tuples.size());
            for (const auto& tup : tuples) {
                std::vector<int> image;
                image.reserve(tup.size());
                for (int w : tup) image.push_back(color[w]);
                relabeled.push_back(std::move(image));
            }
            std::sort(relabeled.begin(), relabeled.end());
            put_varint(out, relabeled.size());
            for (const auto& tup : relabeled) {
                for (int w : tup) put_varint(out, static_cast<std::uint64_t>(w));
            }
        }
        put_varint(out, sig.constants.size());
        for (std::size_t c = 0; c < sig.constants.size(); ++c) {
            put_varint(out, static_cast<std::uint64_t>(color[s_.constant_value(static_cast<int>(c))]));
        }
        return out;
    }

    const Structure& s_;
    std::vector<int> roots_;
    int n_;
    std::map<int, std::vector<Occurrence>> occ_;
    std::string best_;
    bool have_best_ = false;
};

}  // namespace

std::string BallCode::hex() const {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0x0f]);
    }
    return out;
}

std::string canonical_bytes(const Structure& s, std::span<const int> roots) {
    for (int r : roots) {
        if (r < 0 || r >= s.size()) throw std::invalid_argument("root out of range");
    }
    return Canonizer(s, roots).run();
}

BallCode canonical_code(const RootedBall& b) {
    BallCode code;
    code.bytes = canonical_bytes(b.structure, b.roots);
    code.radius = b.radius;
    code.root_count = static_cast<int>(b.roots.size());
    return code;
}

bool isomorphic(const Structure& a, const Structure& b) {
    if (a.signature() != b.signature()) {
        throw std::invalid_argument("isomorphism check needs matching signatures");
    }
    if (a.size() != b.size()) return false;
    return canonical_bytes(a, {}) == canonical_bytes(b, {});
}

}  // namespace structlim
