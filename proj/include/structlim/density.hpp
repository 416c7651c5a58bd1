#pragma once

#include "structlim/formula.hpp"
#include "structlim/rational.hpp"
#include "structlim/structure.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace structlim {

/// Density of a formula in a structure: the fraction of assignment tuples
/// that satisfy it. Exact values are rationals with denominator dividing
/// |S|^p; sampled values carry their Hoeffding radius and seed.
struct DensityValue {
    enum class Mode { Exact, Sampled };
    Mode mode = Mode::Exact;
    Rational value;
    std::int64_t samples = 0;   // sampled only
    double conf_radius = 0.0;   // sampled only, 95% two-sided
    std::uint64_t seed = 0;     // sampled only

    double estimate() const { return to_double(value); }
};

/// Compiled (structure, formula) pair. Resolves the formula's symbols against
/// the structure once; eval() is then cheap and reusable. Quantifiers range
/// over the universe in index order; distance-relativized quantifiers range
/// over the closed neighborhood of their anchors in BFS order.
class Evaluator {
public:
    Evaluator(const Structure& s, const Formula& f);

    /// values[i] interprets free_variables()[i]. Throws if too few.
    bool eval(std::span<const int> values);

private:
    bool eval_node(const FormulaNode& node);
    int term_value(const Term& t) const;

    const Structure& s_;
    const Formula& f_;
    std::unordered_map<const FormulaNode*, int> atom_rel_;
    std::unordered_map<std::string, int> constant_values_;
    std::vector<std::pair<const std::string*, int>> env_;
    std::vector<int> bfs_mark_;
    std::vector<int> touched_;
    std::vector<int> tuple_scratch_;
};

bool satisfies(const Structure& s, const Formula& f, std::span<const int> values);
bool satisfies(const Structure& s, const Formula& f,
               const std::vector<std::pair<std::string, int>>& assignment);

struct DensityOptions {
    std::uint64_t budget = 100'000'000;  // max assignments to enumerate
    int threads = 1;
    int pad_to = -1;  // evaluate in >= this many variables (padding)
};

/// Exact density by full enumeration of |S|^p assignments. Throws
/// budget_error when |S|^p exceeds the budget. Thread count never changes
/// the result.
DensityValue density_exact(const Structure& s, const Formula& f, const DensityOptions& opts = {});

/// Monte Carlo density over i.i.d. uniform assignment tuples. Deterministic
/// for a fixed seed: sample i draws from its own derived stream. The
/// confidence radius is the two-sided 95% Hoeffding bound
/// sqrt(ln(2/0.05) / (2 n)).
DensityValue density_sampled(const Structure& s, const Formula& f, std::int64_t samples,
                             std::uint64_t seed, int threads = 1);

/// Boolean combination over abstract letters 0..L-1, used to expand a
/// density through the indicator calculus (1_{a&b} = 1_a 1_b,
/// 1_{~a} = 1 - 1_a).
class BoolExpr {
public:
    enum class Kind { True, False, Letter, Not, And, Or };

    static BoolExpr t();
    static BoolExpr f();
    static BoolExpr letter(int index);

    Kind kind() const { return kind_; }
    int letter_index() const { return letter_; }
    const std::vector<BoolExpr>& children() const { return children_; }

    friend BoolExpr operator&&(BoolExpr a, BoolExpr b);
    friend BoolExpr operator||(BoolExpr a, BoolExpr b);
    friend BoolExpr operator!(BoolExpr a);

private:
    Kind kind_ = Kind::True;
    int letter_ = -1;
    std::vector<BoolExpr> children_;
};

/// Density of a Boolean combination from densities of conjunctions of its
/// letters. `conjunctions` maps sorted duplicate-free letter lists to the
/// density of their conjunction; the empty list is implicit with density 1.
/// Throws std::invalid_argument naming any conjunction that is missing.
Rational density_boolean_expansion(const BoolExpr& target,
                                   const std::map<std::vector<int>, Rational>& conjunctions);

/// Empirical check that f is r-local: on sampled tuples, satisfaction in S
/// must match satisfaction in the radius-r ball around the tuple.
struct LocalityAudit {
    struct Violation {
        int structure_index = 0;
        std::vector<int> tuple;
        bool full_value = false;
        bool ball_value = false;
    };
    int checked = 0;
    std::vector<Violation> violations;
};

LocalityAudit locality_audit(const Formula& f, int r, std::span<const Structure> structures,
                             int samples_per_structure, std::uint64_t seed);

}  // namespace structlim
