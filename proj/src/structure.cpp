#include "structlim/structure.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace structlim {

Signature Signature::graph() {
    Signature sig;
    sig.relations.push_back({"adj", 2});
    return sig;
}

Signature Signature::with_constants(int p) const {
    if (p < 0) throw std::invalid_argument("negative constant count");
    Signature out = *this;
    for (int i = 1; i <= p; ++i) {
        std::string name = "c" + std::to_string(i);
        if (relation_index(name) >= 0 || constant_index(name) >= 0)
            throw std::invalid_argument("constant name already taken: " + name);
        out.constants.push_back(std::move(name));
    }
    out.validate();
    return out;
}

int Signature::relation_index(std::string_view name) const {
    for (std::size_t i = 0; i < relations.size(); ++i)
        if (relations[i].name == name) return static_cast<int>(i);
    return -1;
}

int Signature::constant_index(std::string_view name) const {
    for (std::size_t i = 0; i < constants.size(); ++i)
        if (constants[i] == name) return static_cast<int>(i);
    return -1;
}

void Signature::validate() const {
    std::set<std::string> seen;
    for (const auto& r : relations) {
        if (r.name.empty()) throw std::invalid_argument("empty relation name");
        if (r.arity < 1) throw std::invalid_argument("relation arity must be >= 1: " + r.name);
        if (!seen.insert(r.name).second)
            throw std::invalid_argument("duplicate symbol name: " + r.name);
    }
    for (const auto& c : constants) {
        if (c.empty()) throw std::invalid_argument("empty constant name");
        if (!seen.insert(c).second)
            throw std::invalid_argument("duplicate symbol name: " + c);
    }
}

Structure::Structure(std::shared_ptr<const Signature> sig, int n,
                     std::vector<std::vector<std::vector<int>>> tuples,
                     std::vector<int> constant_values,
                     std::vector<std::string> labels)
    : sig_(std::move(sig)),
      n_(n),
      tuples_(std::move(tuples)),
      constants_(std::move(constant_values)),
      labels_(std::move(labels)) {
    if (!sig_) throw std::invalid_argument("null signature");
    sig_->validate();
    if (n_ < 0) throw std::invalid_argument("negative universe size");
    if (tuples_.size() != sig_->relations.size())
        throw std::invalid_argument("tuple sets do not match the signature");
    if (constants_.size() != sig_->constants.size())
        throw std::invalid_argument("constant values do not match the signature");
    if (!labels_.empty() && static_cast<int>(labels_.size()) != n_)
        throw std::invalid_argument("label list does not match the universe");

    for (std::size_t r = 0; r < tuples_.size(); ++r) {
        int arity = sig_->relations[r].arity;
        for (const auto& t : tuples_[r]) {
            if (static_cast<int>(t.size()) != arity)
                throw std::invalid_argument("tuple arity mismatch in " + sig_->relations[r].name);
            for (int v : t)
                if (v < 0 || v >= n_)
                    throw std::invalid_argument("tuple element out of range in " +
                                                sig_->relations[r].name);
        }
        std::sort(tuples_[r].begin(), tuples_[r].end());
        tuples_[r].erase(std::unique(tuples_[r].begin(), tuples_[r].end()), tuples_[r].end());
    }
    for (int c : constants_)
        if (c < 0 || c >= n_) throw std::invalid_argument("constant value out of range");

    gaifman_.assign(n_, {});
    for (const auto& rel : tuples_) {
        for (const auto& t : rel) {
            for (std::size_t i = 0; i < t.size(); ++i)
                for (std::size_t j = i + 1; j < t.size(); ++j)
                    if (t[i] != t[j]) {
                        gaifman_[t[i]].push_back(t[j]);
                        gaifman_[t[j]].push_back(t[i]);
                    }
        }
    }
    for (auto& adj : gaifman_) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
}

Structure Structure::graph(int n, const std::vector<std::pair<int, int>>& edges,
                           std::vector<std::string> labels) {
    static const auto sig = std::make_shared<const Signature>(Signature::graph());
    std::vector<std::vector<int>> adj;
    adj.reserve(edges.size() * 2);
    for (auto [u, v] : edges) {
        if (u == v) continue;  // irreflexive by normalization
        adj.push_back({u, v});
        adj.push_back({v, u});
    }
    return Structure(sig, n, {std::move(adj)}, {}, std::move(labels));
}

bool Structure::has_tuple(int rel, std::span<const int> t) const {
    const auto& set = tuples_[rel];
    std::vector<int> key(t.begin(), t.end());
    return std::binary_search(set.begin(), set.end(), key);
}

std::string Structure::label(int v) const {
    if (!labels_.empty()) return labels_[v];
    return std::to_string(v);
}

int Structure::element_by_label(std::string_view label) const {
    if (!labels_.empty()) {
        for (int v = 0; v < n_; ++v)
            if (labels_[v] == label) return v;
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), value);
    if (ec == std::errc() && ptr == label.data() + label.size() && value >= 0 && value < n_)
        return value;
    return -1;
}

bool Structure::operator==(const Structure& other) const {
    return *sig_ == *other.sig_ && n_ == other.n_ && tuples_ == other.tuples_ &&
           constants_ == other.constants_;
}

Structure gaifman_graph(const Structure& s) {
    std::vector<std::pair<int, int>> edges;
    for (int v = 0; v < s.size(); ++v)
        for (int u : s.adjacent(v))
            if (v < u) edges.emplace_back(v, u);
    std::vector<std::string> labels = s.labels();
    return Structure::graph(s.size(), edges, std::move(labels));
}

std::vector<int> neighborhood(const Structure& s, std::span<const int> roots, int r) {
    if (roots.empty()) throw std::invalid_argument("neighborhood needs at least one root");
    if (r < 0) throw std::invalid_argument("negative radius");
    std::vector<int> dist(s.size(), -1);
    std::deque<int> queue;
    for (int root : roots) {
        if (root < 0 || root >= s.size()) throw std::invalid_argument("root out of range");
        if (dist[root] < 0) {
            dist[root] = 0;
            queue.push_back(root);
        }
    }
    std::vector<int> out;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        out.push_back(v);
        if (dist[v] == r) continue;
        for (int u : s.adjacent(v))
            if (dist[u] < 0) {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Structure induced(const Structure& s, std::span<const int> elements) {
    std::vector<int> index(s.size(), -1);
    int next = 0;
    int prev = -1;
    for (int v : elements) {
        if (v < 0 || v >= s.size()) throw std::invalid_argument("element out of range");
        if (v <= prev) throw std::invalid_argument("element set must be sorted and duplicate-free");
        prev = v;
        index[v] = next++;
    }

    std::vector<std::vector<std::vector<int>>> tuples(s.signature().relations.size());
    for (std::size_t r = 0; r < tuples.size(); ++r) {
        for (const auto& t : s.tuples(static_cast<int>(r))) {
            std::vector<int> mapped;
            mapped.reserve(t.size());
            bool inside = true;
            for (int v : t) {
                if (index[v] < 0) {
                    inside = false;
                    break;
                }
                mapped.push_back(index[v]);
            }
            if (inside) tuples[r].push_back(std::move(mapped));
        }
    }

    std::vector<int> constants;
    constants.reserve(s.constant_values().size());
    for (std::size_t c = 0; c < s.constant_values().size(); ++c) {
        int v = s.constant_value(static_cast<int>(c));
        if (index[v] < 0)
            throw std::invalid_argument("constant " + s.signature().constants[c] +
                                        " falls outside the induced set");
        constants.push_back(index[v]);
    }

    std::vector<std::string> labels;
    if (!s.labels().empty()) {
        labels.reserve(elements.size());
        for (int v : elements) labels.push_back(s.labels()[v]);
    }
    return Structure(s.signature_ptr(), static_cast<int>(elements.size()), std::move(tuples),
                     std::move(constants), std::move(labels));
}

RootedBall ball(const Structure& s, std::span<const int> roots, int r) {
    std::vector<int> elements = neighborhood(s, roots, r);
    Structure sub = induced(s, elements);
    std::vector<int> mapped_roots;
    mapped_roots.reserve(roots.size());
    for (int root : roots) {
        auto it = std::lower_bound(elements.begin(), elements.end(), root);
        mapped_roots.push_back(static_cast<int>(it - elements.begin()));
    }
    return RootedBall{std::move(sub), std::move(mapped_roots), r};
}

int max_degree(const Structure& s) {
    int best = 0;
    for (int v = 0; v < s.size(); ++v) best = std::max(best, s.degree(v));
    return best;
}

Structure with_constants(const Structure& s, std::span<const int> values) {
    auto sig = std::make_shared<const Signature>(
        s.signature().with_constants(static_cast<int>(values.size())));
    std::vector<std::vector<std::vector<int>>> tuples;
    tuples.reserve(sig->relations.size());
    for (std::size_t r = 0; r < sig->relations.size(); ++r)
        tuples.push_back(s.tuples(static_cast<int>(r)));
    std::vector<int> constants = s.constant_values();
    for (int v : values) {
        if (v < 0 || v >= s.size()) throw std::invalid_argument("constant value out of range");
        constants.push_back(v);
    }
    std::vector<std::string> labels = s.labels();
    return Structure(std::move(sig), s.size(), std::move(tuples), std::move(constants),
                     std::move(labels));
}

Structure disjoint_union(const Structure& a, const Structure& b) {
    if (a.signature() != b.signature())
        throw std::invalid_argument("disjoint union needs matching signatures");
    if (!a.signature().constants.empty())
        throw std::invalid_argument("disjoint union is defined for constant-free signatures");
    int offset = a.size();
    std::vector<std::vector<std::vector<int>>> tuples;
    tuples.reserve(a.signature().relations.size());
    for (std::size_t r = 0; r < a.signature().relations.size(); ++r) {
        auto set = a.tuples(static_cast<int>(r));
        for (auto t : b.tuples(static_cast<int>(r))) {
            for (int& v : t) v += offset;
            set.push_back(std::move(t));
        }
        tuples.push_back(std::move(set));
    }
    return Structure(a.signature_ptr(), a.size() + b.size(), std::move(tuples));
}

Structure cycle_graph(int n) {
    if (n < 3) throw std::invalid_argument("cycle needs n >= 3");
    std::vector<std::pair<int, int>> edges;
    edges.reserve(n);
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    return Structure::graph(n, edges);
}

Structure path_graph(int n) {
    if (n < 1) throw std::invalid_argument("path needs n >= 1");
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return Structure::graph(n, edges);
}

Structure complete_graph(int n) {
    if (n < 1) throw std::invalid_argument("complete graph needs n >= 1");
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    return Structure::graph(n, edges);
}

Structure star_graph(int leaves) {
    if (leaves < 0) throw std::invalid_argument("negative leaf count");
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i <= leaves; ++i) edges.emplace_back(0, i);
    return Structure::graph(leaves + 1, edges);
}

Structure edgeless_graph(int n) {
    if (n < 0) throw std::invalid_argument("negative universe size");
    return Structure::graph(n, {});
}

Structure pendant_cycle_graph(int n) {
    if (n < 3) throw std::invalid_argument("cycle needs n >= 3");
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    edges.emplace_back(0, n);
    return Structure::graph(n + 1, edges);
}

}  // namespace structlim
