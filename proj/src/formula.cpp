#include "structlim/formula.hpp"

#include "structlim/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace structlim {

namespace {

using NodePtr = std::shared_ptr<const FormulaNode>;

int child_qrank(const NodePtr& n) { return n ? n->qrank : 0; }

NodePtr make_node(FormulaNode node) {
    switch (node.kind) {
        case FormulaKind::True:
        case FormulaKind::False:
        case FormulaKind::Atom:
        case FormulaKind::Equal:
            node.qrank = 0;
            break;
        case FormulaKind::Not:
            node.qrank = child_qrank(node.lhs);
            break;
        case FormulaKind::And:
        case FormulaKind::Or:
            node.qrank = std::max(child_qrank(node.lhs), child_qrank(node.rhs));
            break;
        case FormulaKind::Exists:
        case FormulaKind::Forall:
            node.qrank = 1 + child_qrank(node.lhs);
            break;
    }
    return std::make_shared<const FormulaNode>(std::move(node));
}

// --- lexer ----------------------------------------------------------------

enum class Tok { Ident, Int, LParen, RParen, Dot, Comma, Eq, Tilde, Amp, Pipe, Arrow, AtLe, End };

struct Lexeme {
    Tok kind;
    std::string text;
    std::size_t pos;
};

std::vector<Lexeme> lex(std::string_view text) {
    std::vector<Lexeme> out;
    std::size_t i = 0;
    auto push = [&](Tok k, std::size_t start, std::size_t len) {
        out.push_back({k, std::string(text.substr(start, len)), start});
    };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = i;
            while (i < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
                ++i;
            push(Tok::Ident, start, i - start);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            push(Tok::Int, start, i - start);
            continue;
        }
        switch (c) {
            case '(': push(Tok::LParen, i, 1); ++i; break;
            case ')': push(Tok::RParen, i, 1); ++i; break;
            case '.': push(Tok::Dot, i, 1); ++i; break;
            case ',': push(Tok::Comma, i, 1); ++i; break;
            case '=': push(Tok::Eq, i, 1); ++i; break;
            case '~': push(Tok::Tilde, i, 1); ++i; break;
            case '&': push(Tok::Amp, i, 1); ++i; break;
            case '|': push(Tok::Pipe, i, 1); ++i; break;
            case '-':
                if (i + 1 < text.size() && text[i + 1] == '>') {
                    push(Tok::Arrow, i, 2);
                    i += 2;
                    break;
                }
                throw parse_error("stray '-' (expected '->')", i);
            case '@':
                if (i + 2 < text.size() && text[i + 1] == '<' && text[i + 2] == '=') {
                    push(Tok::AtLe, i, 3);
                    i += 3;
                    break;
                }
                throw parse_error("stray '@' (expected '@<=')", i);
            default:
                throw parse_error(std::string("unexpected character '") + c + "'", i);
        }
    }
    out.push_back({Tok::End, "", text.size()});
    return out;
}

// --- parser ---------------------------------------------------------------

class Parser {
public:
    Parser(std::string_view text, const Signature& sig) : tokens_(lex(text)), sig_(sig) {}

    NodePtr parse() {
        NodePtr f = formula();
        expect(Tok::End, "trailing input after formula");
        return f;
    }

private:
    std::vector<Lexeme> tokens_;
    const Signature& sig_;
    std::size_t pos_ = 0;

    const Lexeme& peek() const { return tokens_[pos_]; }
    const Lexeme& advance() { return tokens_[pos_++]; }
    bool match(Tok k) {
        if (peek().kind == k) {
            ++pos_;
            return true;
        }
        return false;
    }
    const Lexeme& expect(Tok k, const std::string& what) {
        if (peek().kind != k) throw parse_error(what, peek().pos);
        return tokens_[pos_++];
    }

    static bool is_keyword(const std::string& s) {
        return s == "true" || s == "false" || s == "E" || s == "A";
    }

    Term term() {
        const Lexeme& id = expect(Tok::Ident, "expected a variable or constant");
        if (is_keyword(id.text)) throw parse_error("'" + id.text + "' is reserved", id.pos);
        Term t;
        t.name = id.text;
        t.kind = sig_.constant_index(id.text) >= 0 ? Term::Kind::Constant : Term::Kind::Variable;
        return t;
    }

    // implies level; quantifier bodies restart here so they extend maximally.
    NodePtr formula() {
        NodePtr lhs = disjunction();
        if (match(Tok::Arrow)) {
            NodePtr rhs = formula();  // right associative
            FormulaNode neg;
            neg.kind = FormulaKind::Not;
            neg.lhs = std::move(lhs);
            FormulaNode node;
            node.kind = FormulaKind::Or;
            node.lhs = make_node(std::move(neg));
            node.rhs = std::move(rhs);
            return make_node(std::move(node));
        }
        return lhs;
    }

    NodePtr disjunction() {
        NodePtr lhs = conjunction();
        while (match(Tok::Pipe)) {
            FormulaNode node;
            node.kind = FormulaKind::Or;
            node.lhs = std::move(lhs);
            node.rhs = conjunction();
            lhs = make_node(std::move(node));
        }
        return lhs;
    }

    NodePtr conjunction() {
        NodePtr lhs = unary();
        while (match(Tok::Amp)) {
            FormulaNode node;
            node.kind = FormulaKind::And;
            node.lhs = std::move(lhs);
            node.rhs = unary();
            lhs = make_node(std::move(node));
        }
        return lhs;
    }

    NodePtr unary() {
        if (match(Tok::Tilde)) {
            FormulaNode node;
            node.kind = FormulaKind::Not;
            node.lhs = unary();
            return make_node(std::move(node));
        }
        return primary();
    }

    NodePtr primary() {
        const Lexeme& tok = peek();
        if (tok.kind == Tok::LParen) {
            ++pos_;
            NodePtr inner = formula();
            expect(Tok::RParen, "expected ')'");
            return inner;
        }
        if (tok.kind != Tok::Ident)
            throw parse_error("expected a formula", tok.pos);

        if (tok.text == "true" || tok.text == "false") {
            ++pos_;
            FormulaNode node;
            node.kind = tok.text == "true" ? FormulaKind::True : FormulaKind::False;
            return make_node(std::move(node));
        }
        if (tok.text == "E" || tok.text == "A") return quantifier();
        return atom();
    }

    NodePtr quantifier() {
        const Lexeme& q = advance();
        FormulaNode node;
        node.kind = q.text == "E" ? FormulaKind::Exists : FormulaKind::Forall;
        const Lexeme& var = expect(Tok::Ident, "expected a variable after the quantifier");
        if (is_keyword(var.text)) throw parse_error("'" + var.text + "' is reserved", var.pos);
        if (sig_.constant_index(var.text) >= 0)
            throw parse_error("cannot quantify over constant '" + var.text + "'", var.pos);
        node.var = var.text;
        if (match(Tok::AtLe)) {
            const Lexeme& radius = expect(Tok::Int, "expected a radius after '@<='");
            int r = 0;
            std::from_chars(radius.text.data(), radius.text.data() + radius.text.size(), r);
            node.radius = r;
            expect(Tok::LParen, "expected '(' before the anchor list");
            node.anchors.push_back(term());
            while (match(Tok::Comma)) node.anchors.push_back(term());
            expect(Tok::RParen, "expected ')' after the anchor list");
        }
        expect(Tok::Dot, "expected '.' after the quantified variable");
        node.lhs = formula();
        return make_node(std::move(node));
    }

    NodePtr atom() {
        const Lexeme& id = advance();
        if (peek().kind == Tok::LParen) {
            int rel = sig_.relation_index(id.text);
            if (rel < 0) throw parse_error("unknown relation '" + id.text + "'", id.pos);
            ++pos_;
            FormulaNode node;
            node.kind = FormulaKind::Atom;
            node.rel_name = id.text;
            node.terms.push_back(term());
            while (match(Tok::Comma)) node.terms.push_back(term());
            expect(Tok::RParen, "expected ')' after atom arguments");
            int arity = sig_.relations[rel].arity;
            if (static_cast<int>(node.terms.size()) != arity)
                throw parse_error("relation '" + id.text + "' expects " + std::to_string(arity) +
                                      " arguments",
                                  id.pos);
            return make_node(std::move(node));
        }

        Term first;
        first.name = id.text;
        first.kind =
            sig_.constant_index(id.text) >= 0 ? Term::Kind::Constant : Term::Kind::Variable;

        if (match(Tok::Eq)) {
            FormulaNode node;
            node.kind = FormulaKind::Equal;
            node.terms.push_back(std::move(first));
            node.terms.push_back(term());
            return make_node(std::move(node));
        }
        if (match(Tok::Tilde)) {
            int rel = sig_.relation_index("adj");
            if (rel < 0 || sig_.relations[rel].arity != 2)
                throw parse_error("'~' adjacency sugar needs adj/2 in the signature", id.pos);
            FormulaNode node;
            node.kind = FormulaKind::Atom;
            node.rel_name = "adj";
            node.terms.push_back(std::move(first));
            node.terms.push_back(term());
            return make_node(std::move(node));
        }
        throw parse_error("expected '(', '=' or '~' after '" + id.text + "'", id.pos);
    }
};

// --- free variables -------------------------------------------------------

void collect_free(const NodePtr& node, std::vector<std::string>& bound,
                  std::vector<std::string>& out) {
    if (!node) return;
    auto see = [&](const Term& t) {
        if (t.kind != Term::Kind::Variable) return;
        if (std::find(bound.rbegin(), bound.rend(), t.name) != bound.rend()) return;
        if (std::find(out.begin(), out.end(), t.name) == out.end()) out.push_back(t.name);
    };
    switch (node->kind) {
        case FormulaKind::True:
        case FormulaKind::False:
            return;
        case FormulaKind::Atom:
        case FormulaKind::Equal:
            for (const Term& t : node->terms) see(t);
            return;
        case FormulaKind::Not:
            collect_free(node->lhs, bound, out);
            return;
        case FormulaKind::And:
        case FormulaKind::Or:
            collect_free(node->lhs, bound, out);
            collect_free(node->rhs, bound, out);
            return;
        case FormulaKind::Exists:
        case FormulaKind::Forall:
            for (const Term& t : node->anchors) see(t);
            bound.push_back(node->var);
            collect_free(node->lhs, bound, out);
            bound.pop_back();
            return;
    }
}

// --- printing -------------------------------------------------------------

void print_node(const FormulaNode& node, std::string& out) {
    switch (node.kind) {
        case FormulaKind::True:
            out += "true";
            return;
        case FormulaKind::False:
            out += "false";
            return;
        case FormulaKind::Atom:
            out += node.rel_name;
            out += '(';
            for (std::size_t i = 0; i < node.terms.size(); ++i) {
                if (i) out += ',';
                out += node.terms[i].name;
            }
            out += ')';
            return;
        case FormulaKind::Equal:
            out += node.terms[0].name;
            out += '=';
            out += node.terms[1].name;
            return;
        case FormulaKind::Not: {
            out += '~';
            bool atomic = node.lhs->kind == FormulaKind::True ||
                          node.lhs->kind == FormulaKind::False ||
                          node.lhs->kind == FormulaKind::Atom;
            if (atomic) {
                print_node(*node.lhs, out);
            } else {
                out += '(';
                print_node(*node.lhs, out);
                out += ')';
            }
            return;
        }
        case FormulaKind::And:
        case FormulaKind::Or:
            out += '(';
            print_node(*node.lhs, out);
            out += node.kind == FormulaKind::And ? " & " : " | ";
            print_node(*node.rhs, out);
            out += ')';
            return;
        case FormulaKind::Exists:
        case FormulaKind::Forall:
            // Always parenthesized: a bare quantifier body is maximal when
            // reparsed and would swallow anything printed to its right.
            out += '(';
            out += node.kind == FormulaKind::Exists ? 'E' : 'A';
            out += ' ';
            out += node.var;
            if (node.radius >= 0) {
                out += " @<=";
                out += std::to_string(node.radius);
                out += '(';
                for (std::size_t i = 0; i < node.anchors.size(); ++i) {
                    if (i) out += ',';
                    out += node.anchors[i].name;
                }
                out += ')';
            }
            out += ". ";
            print_node(*node.lhs, out);
            out += ')';
            return;
    }
}

}  // namespace

Formula::Formula(std::shared_ptr<const FormulaNode> root, std::shared_ptr<const Signature> sig)
    : root_(std::move(root)), sig_(std::move(sig)) {
    if (!root_ || !sig_) throw std::invalid_argument("null formula");
    std::vector<std::string> bound;
    collect_free(root_, bound, free_vars_);
}

std::string Formula::to_string() const {
    std::string out;
    print_node(*root_, out);
    return out;
}

Formula parse_formula(std::string_view text, std::shared_ptr<const Signature> sig) {
    if (!sig) throw std::invalid_argument("null signature");
    Parser parser(text, *sig);
    return Formula(parser.parse(), std::move(sig));
}

FragmentFlags classify(const Formula& f) {
    FragmentFlags flags;
    flags.free_var_count = f.free_var_count();
    flags.is_sentence = flags.free_var_count == 0;
    flags.is_quantifier_free = f.qrank() == 0;

    // Reach of a term: 0 for free variables and constants; radius plus the
    // largest anchor reach for a relativized bound variable. The formula is
    // syntactically local when every quantifier is relativized, and its
    // radius is the largest reach of any bound variable.
    bool local = true;
    int radius = 0;
    std::vector<std::pair<std::string, int>> reach;
    std::function<void(const FormulaNode&)> walk = [&](const FormulaNode& node) {
        if (!local) return;
        switch (node.kind) {
            case FormulaKind::True:
            case FormulaKind::False:
            case FormulaKind::Atom:
            case FormulaKind::Equal:
                return;
            case FormulaKind::Not:
                walk(*node.lhs);
                return;
            case FormulaKind::And:
            case FormulaKind::Or:
                walk(*node.lhs);
                walk(*node.rhs);
                return;
            case FormulaKind::Exists:
            case FormulaKind::Forall: {
                if (node.radius < 0) {
                    local = false;
                    return;
                }
                int anchor_reach = 0;
                for (const Term& a : node.anchors) {
                    if (a.kind == Term::Kind::Constant) continue;  // reach 0
                    auto it = std::find_if(reach.rbegin(), reach.rend(),
                                           [&](const auto& p) { return p.first == a.name; });
                    if (it != reach.rend()) anchor_reach = std::max(anchor_reach, it->second);
                    // free variables have reach 0
                }
                int var_reach = node.radius + anchor_reach;
                radius = std::max(radius, var_reach);
                reach.emplace_back(node.var, var_reach);
                walk(*node.lhs);
                reach.pop_back();
                return;
            }
        }
    };
    walk(f.root());
    if (local) flags.syntactic_local_radius = flags.is_quantifier_free ? 0 : radius;
    return flags;
}

namespace {

NodePtr substitute(const NodePtr& node, const std::map<std::string, Term>& free_subst,
                   std::vector<std::pair<std::string, std::string>>& renames, int& fresh) {
    auto apply = [&](const Term& t) -> Term {
        if (t.kind != Term::Kind::Variable) return t;
        for (auto it = renames.rbegin(); it != renames.rend(); ++it)
            if (it->first == t.name) {
                Term r = t;
                r.name = it->second;
                return r;
            }
        auto sub = free_subst.find(t.name);
        if (sub != free_subst.end()) return sub->second;
        return t;
    };

    FormulaNode out = *node;
    switch (node->kind) {
        case FormulaKind::True:
        case FormulaKind::False:
            break;
        case FormulaKind::Atom:
        case FormulaKind::Equal:
            for (Term& t : out.terms) t = apply(t);
            break;
        case FormulaKind::Not:
            out.lhs = substitute(node->lhs, free_subst, renames, fresh);
            break;
        case FormulaKind::And:
        case FormulaKind::Or:
            out.lhs = substitute(node->lhs, free_subst, renames, fresh);
            out.rhs = substitute(node->rhs, free_subst, renames, fresh);
            break;
        case FormulaKind::Exists:
        case FormulaKind::Forall: {
            for (Term& t : out.anchors) t = apply(t);
            std::string bound_name = node->var;
            // A bound variable shadowing a substituted name, or clashing with
            // a new constant, gets a fresh name.
            bool clash = free_subst.count(bound_name) > 0;
            if (clash) {
                std::string candidate;
                do {
                    candidate = bound_name + "_" + std::to_string(fresh++);
                } while (free_subst.count(candidate) > 0);
                renames.emplace_back(bound_name, candidate);
                out.var = candidate;
            } else {
                renames.emplace_back(bound_name, bound_name);
            }
            out.lhs = substitute(node->lhs, free_subst, renames, fresh);
            renames.pop_back();
            break;
        }
    }
    return make_node(std::move(out));
}

}  // namespace

Formula nu_p(const Formula& f) {
    int p = f.free_var_count();
    auto ext = std::make_shared<const Signature>(f.signature().with_constants(p));
    std::map<std::string, Term> subst;
    for (int i = 0; i < p; ++i) {
        Term c;
        c.kind = Term::Kind::Constant;
        c.name = "c" + std::to_string(i + 1);
        subst.emplace(f.free_variables()[i], c);
        // Bound variables named like a new constant must move aside too.
        Term dummy;
        dummy.kind = Term::Kind::Variable;
        dummy.name = c.name;
        subst.emplace(c.name, dummy);  // no-op substitution, forces renaming
    }
    std::vector<std::pair<std::string, std::string>> renames;
    int fresh = 0;
    NodePtr root = substitute(f.root_ptr(), subst, renames, fresh);
    return Formula(std::move(root), std::move(ext));
}

namespace {

void check_same_signature(const Formula& a, const Formula& b) {
    if (a.signature() != b.signature())
        throw std::invalid_argument("cannot combine formulas over different signatures");
}

}  // namespace

Formula land(const Formula& a, const Formula& b) {
    check_same_signature(a, b);
    FormulaNode node;
    node.kind = FormulaKind::And;
    node.lhs = a.root_ptr();
    node.rhs = b.root_ptr();
    return Formula(make_node(std::move(node)), a.signature_ptr());
}

Formula lor(const Formula& a, const Formula& b) {
    check_same_signature(a, b);
    FormulaNode node;
    node.kind = FormulaKind::Or;
    node.lhs = a.root_ptr();
    node.rhs = b.root_ptr();
    return Formula(make_node(std::move(node)), a.signature_ptr());
}

Formula lnot(const Formula& a) {
    FormulaNode node;
    node.kind = FormulaKind::Not;
    node.lhs = a.root_ptr();
    return Formula(make_node(std::move(node)), a.signature_ptr());
}

Formula limplies(const Formula& a, const Formula& b) { return lor(lnot(a), b); }

Formula land_all(std::span<const Formula> fs) {
    if (fs.empty()) throw std::invalid_argument("empty conjunction");
    Formula acc = fs[0];
    for (std::size_t i = 1; i < fs.size(); ++i) acc = land(acc, fs[i]);
    return acc;
}

Formula lor_all(std::span<const Formula> fs) {
    if (fs.empty()) throw std::invalid_argument("empty disjunction");
    Formula acc = fs[0];
    for (std::size_t i = 1; i < fs.size(); ++i) acc = lor(acc, fs[i]);
    return acc;
}

namespace {

bool nodes_equal(const NodePtr& a, const NodePtr& b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind || a->rel_name != b->rel_name || a->terms != b->terms ||
        a->var != b->var || a->radius != b->radius || a->anchors != b->anchors)
        return false;
    return nodes_equal(a->lhs, b->lhs) && nodes_equal(a->rhs, b->rhs);
}

}  // namespace

bool structurally_equal(const Formula& a, const Formula& b) {
    return a.signature() == b.signature() && nodes_equal(a.root_ptr(), b.root_ptr());
}

}  // namespace structlim
