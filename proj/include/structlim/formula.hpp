#pragma once

#include "structlim/structure.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace structlim {

enum class FormulaKind { True, False, Atom, Equal, Not, And, Or, Exists, Forall };

/// Atom and anchor arguments: a variable occurrence or a signature constant.
struct Term {
    enum class Kind { Variable, Constant };
    Kind kind = Kind::Variable;
    std::string name;

    bool operator==(const Term&) const = default;
};

/// Immutable AST node, shared between formulas. `qrank` is cached at build
/// time. Quantifiers use `lhs` as their body; `radius < 0` means the
/// quantifier is not distance-relativized.
struct FormulaNode {
    FormulaKind kind = FormulaKind::True;

    std::string rel_name;  // Atom
    std::vector<Term> terms;  // Atom arguments; Equal holds exactly two

    std::shared_ptr<const FormulaNode> lhs, rhs;

    std::string var;  // Exists / Forall
    int radius = -1;
    std::vector<Term> anchors;

    int qrank = 0;
};

struct FragmentFlags {
    bool is_sentence = false;
    int free_var_count = 0;
    bool is_quantifier_free = false;
    /// Set when every quantifier is distance-relativized and each anchor
    /// chains back to a free variable or constant. Quantifier-free formulas
    /// get radius 0.
    std::optional<int> syntactic_local_radius;
};

/// First-order formula tied to the signature it was built against. Formulas
/// are immutable; combinators share subtrees.
class Formula {
public:
    Formula(std::shared_ptr<const FormulaNode> root, std::shared_ptr<const Signature> sig);

    const FormulaNode& root() const { return *root_; }
    const std::shared_ptr<const FormulaNode>& root_ptr() const { return root_; }
    const Signature& signature() const { return *sig_; }
    const std::shared_ptr<const Signature>& signature_ptr() const { return sig_; }

    int qrank() const { return root_->qrank; }
    /// Free variables in order of first appearance.
    const std::vector<std::string>& free_variables() const { return free_vars_; }
    int free_var_count() const { return static_cast<int>(free_vars_.size()); }

    /// Fully parenthesized text that reparses to a structurally equal AST.
    std::string to_string() const;

private:
    std::shared_ptr<const FormulaNode> root_;
    std::shared_ptr<const Signature> sig_;
    std::vector<std::string> free_vars_;
};

/// Grammar (precedence ~ > & > | > ->, quantifier body maximal):
///   f    := "true" | "false" | atom | "~" f | f "&" f | f "|" f | f "->" f
///         | ("E"|"A") var ["@<=" int "(" term{,term} ")"] "." f | "(" f ")"
///   atom := name "(" term{,term} ")" | term "=" term | term "~" term
/// `x ~ y` is sugar for adj(x, y) and needs adj/2 in the signature.
/// Implication is eliminated while parsing: a -> b becomes ~a | b.
/// Throws parse_error with a character offset.
Formula parse_formula(std::string_view text, std::shared_ptr<const Signature> sig);

FragmentFlags classify(const Formula& f);

/// Free variables x1..xp replaced by fresh constants c1..cp (first-appearance
/// order) over the extended signature. Bound variables that would collide
/// with the new constants are renamed.
Formula nu_p(const Formula& f);

// Connective combinators. Both sides must share a signature.
Formula land(const Formula& a, const Formula& b);
Formula lor(const Formula& a, const Formula& b);
Formula lnot(const Formula& a);
Formula limplies(const Formula& a, const Formula& b);  // ~a | b
Formula land_all(std::span<const Formula> fs);
Formula lor_all(std::span<const Formula> fs);

/// Structural AST equality (names, kinds, radii, anchors).
bool structurally_equal(const Formula& a, const Formula& b);

}  // namespace structlim
