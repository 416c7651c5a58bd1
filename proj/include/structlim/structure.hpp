#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace structlim {

/// Relation symbols with arity >= 1 plus constant symbols. Names are unique
/// across both kinds.
struct Signature {
    struct Relation {
        std::string name;
        int arity = 0;
        bool operator==(const Relation&) const = default;
    };

    std::vector<Relation> relations;
    std::vector<std::string> constants;

    bool operator==(const Signature&) const = default;

    /// {adj/2}, no constants.
    static Signature graph();

    /// Copy with constants c1..cp appended. Throws on a name clash.
    Signature with_constants(int p) const;

    int relation_index(std::string_view name) const;  // -1 if absent
    int constant_index(std::string_view name) const;  // -1 if absent

    /// Unique names, positive arities. Throws std::invalid_argument.
    void validate() const;
};

/// Finite relational structure over universe [0, n). Immutable once built:
/// tuple sets are sorted and duplicate-free, the Gaifman adjacency is
/// precomputed, and every accessor is const. n = 0 is accepted here; the
/// density operations reject it.
class Structure {
public:
    Structure(std::shared_ptr<const Signature> sig, int n,
              std::vector<std::vector<std::vector<int>>> tuples,
              std::vector<int> constant_values = {},
              std::vector<std::string> labels = {});

    /// Graph over [0, n): edges are stored symmetric and irreflexive.
    static Structure graph(int n, const std::vector<std::pair<int, int>>& edges,
                           std::vector<std::string> labels = {});

    const Signature& signature() const { return *sig_; }
    const std::shared_ptr<const Signature>& signature_ptr() const { return sig_; }
    int size() const { return n_; }

    const std::vector<std::vector<int>>& tuples(int rel) const { return tuples_[rel]; }
    bool has_tuple(int rel, std::span<const int> t) const;
    int constant_value(int constant) const { return constants_[constant]; }
    const std::vector<int>& constant_values() const { return constants_; }

    /// Gaifman adjacency of v, sorted ascending.
    const std::vector<int>& adjacent(int v) const { return gaifman_[v]; }
    int degree(int v) const { return static_cast<int>(gaifman_[v].size()); }

    /// Display label of an element; defaults to its index.
    std::string label(int v) const;
    const std::vector<std::string>& labels() const { return labels_; }
    /// Index of the element with this label, or the label parsed as an index.
    /// Returns -1 if neither resolves.
    int element_by_label(std::string_view label) const;

    /// Ignores labels.
    bool operator==(const Structure& other) const;

private:
    std::shared_ptr<const Signature> sig_;
    int n_;
    std::vector<std::vector<std::vector<int>>> tuples_;
    std::vector<int> constants_;
    std::vector<std::vector<int>> gaifman_;
    std::vector<std::string> labels_;
};

/// Ball of radius `radius` around the ordered (possibly repeating) roots.
/// Every element of `structure` lies within `radius` of some root.
struct RootedBall {
    Structure structure;
    std::vector<int> roots;
    int radius = 0;
};

/// u ~ v iff u != v and they share a tuple in some relation.
Structure gaifman_graph(const Structure& s);

/// Closed r-neighborhood of the root set in the Gaifman graph, sorted.
std::vector<int> neighborhood(const Structure& s, std::span<const int> roots, int r);

/// Substructure on `elements` (sorted, duplicate-free), re-indexed to
/// [0, |elements|). Throws if a constant falls outside the set.
Structure induced(const Structure& s, std::span<const int> elements);

RootedBall ball(const Structure& s, std::span<const int> roots, int r);

int max_degree(const Structure& s);

/// (S, v̄): same relations, constants extended by c1..cp interpreted as values.
Structure with_constants(const Structure& s, std::span<const int> values);

/// Requires a constant-free signature shared by both arguments.
Structure disjoint_union(const Structure& a, const Structure& b);

// Small graph builders used by tests, demos, and the acceptance suite.
Structure cycle_graph(int n);
Structure path_graph(int n);
Structure complete_graph(int n);
Structure star_graph(int leaves);
Structure edgeless_graph(int n);
/// Cycle on n vertices with one extra pendant vertex attached to vertex 0.
Structure pendant_cycle_graph(int n);

}  // namespace structlim
