#include "structlim/density.hpp"

#include "structlim/errors.hpp"
#include "structlim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <stdexcept>
#include <thread>

namespace structlim {

namespace {

void check_nonempty(const Structure& s) {
    if (s.size() == 0) throw std::invalid_argument("density operations need a nonempty structure");
}

}  // namespace

Evaluator::Evaluator(const Structure& s, const Formula& f) : s_(s), f_(f) {
    check_nonempty(s);
    for (std::size_t c = 0; c < s.signature().constants.size(); ++c)
        constant_values_[s.signature().constants[c]] = s.constant_value(static_cast<int>(c));

    std::function<void(const FormulaNode&)> resolve = [&](const FormulaNode& node) {
        switch (node.kind) {
            case FormulaKind::Atom: {
                int rel = s.signature().relation_index(node.rel_name);
                if (rel < 0)
                    throw std::invalid_argument("structure has no relation '" + node.rel_name +
                                                "'");
                if (s.signature().relations[rel].arity != static_cast<int>(node.terms.size()))
                    throw std::invalid_argument("arity mismatch for relation '" + node.rel_name +
                                                "'");
                atom_rel_[&node] = rel;
                for (const Term& t : node.terms)
                    if (t.kind == Term::Kind::Constant && !constant_values_.count(t.name))
                        throw std::invalid_argument("structure has no constant '" + t.name + "'");
                return;
            }
            case FormulaKind::Equal:
                for (const Term& t : node.terms)
                    if (t.kind == Term::Kind::Constant && !constant_values_.count(t.name))
                        throw std::invalid_argument("structure has no constant '" + t.name + "'");
                return;
            case FormulaKind::Not:
                resolve(*node.lhs);
                return;
            case FormulaKind::And:
            case FormulaKind::Or:
                resolve(*node.lhs);
                resolve(*node.rhs);
                return;
            case FormulaKind::Exists:
            case FormulaKind::Forall:
                for (const Term& t : node.anchors)
                    if (t.kind == Term::Kind::Constant && !constant_values_.count(t.name))
                        throw std::invalid_argument("structure has no constant '" + t.name + "'");
                resolve(*node.lhs);
                return;
            default:
                return;
        }
    };
    resolve(f.root());
    bfs_mark_.assign(s.size(), -1);
}

int Evaluator::term_value(const Term& t) const {
    if (t.kind == Term::Kind::Constant) return constant_values_.at(t.name);
    for (auto it = env_.rbegin(); it != env_.rend(); ++it)
        if (*it->first == t.name) return it->second;
    throw std::invalid_argument("unassigned variable '" + t.name + "'");
}

bool Evaluator::eval(std::span<const int> values) {
    const auto& vars = f_.free_variables();
    if (values.size() < vars.size())
        throw std::invalid_argument("assignment covers too few variables");
    env_.clear();
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (values[i] < 0 || values[i] >= s_.size())
            throw std::invalid_argument("assignment value out of range");
        env_.emplace_back(&vars[i], values[i]);
    }
    return eval_node(f_.root());
}

bool Evaluator::eval_node(const FormulaNode& node) {
    switch (node.kind) {
        case FormulaKind::True:
            return true;
        case FormulaKind::False:
            return false;
        case FormulaKind::Atom: {
            tuple_scratch_.clear();
            for (const Term& t : node.terms) tuple_scratch_.push_back(term_value(t));
            return s_.has_tuple(atom_rel_.at(&node), tuple_scratch_);
        }
        case FormulaKind::Equal:
            return term_value(node.terms[0]) == term_value(node.terms[1]);
        case FormulaKind::Not:
            return !eval_node(*node.lhs);
        case FormulaKind::And:
            return eval_node(*node.lhs) && eval_node(*node.rhs);
        case FormulaKind::Or:
            return eval_node(*node.lhs) || eval_node(*node.rhs);
        case FormulaKind::Exists:
        case FormulaKind::Forall: {
            bool exists = node.kind == FormulaKind::Exists;
            if (node.radius < 0) {
                for (int v = 0; v < s_.size(); ++v) {
                    env_.emplace_back(&node.var, v);
                    bool hit = eval_node(*node.lhs);
                    env_.pop_back();
                    if (hit == exists) return exists;
                }
                return !exists;
            }
            // Closed neighborhood of the anchors, visited in BFS order. The
            // range is collected up front so nested quantifiers can reuse the
            // scratch marks.
            touched_.clear();
            std::deque<std::pair<int, int>> queue;
            for (const Term& a : node.anchors) {
                int v = term_value(a);
                if (bfs_mark_[v] < 0) {
                    bfs_mark_[v] = 0;
                    queue.emplace_back(v, 0);
                    touched_.push_back(v);
                }
            }
            std::vector<int> range;
            while (!queue.empty()) {
                auto [v, d] = queue.front();
                queue.pop_front();
                range.push_back(v);
                if (d == node.radius) continue;
                for (int u : s_.adjacent(v))
                    if (bfs_mark_[u] < 0) {
                        bfs_mark_[u] = d + 1;
                        queue.emplace_back(u, d + 1);
                        touched_.push_back(u);
                    }
            }
            for (int v : touched_) bfs_mark_[v] = -1;
            for (int v : range) {
                env_.emplace_back(&node.var, v);
                bool hit = eval_node(*node.lhs);
                env_.pop_back();
                if (hit == exists) return exists;
            }
            return !exists;
        }
    }
    return false;  // unreachable
}

bool satisfies(const Structure& s, const Formula& f, std::span<const int> values) {
    Evaluator ev(s, f);
    return ev.eval(values);
}

bool satisfies(const Structure& s, const Formula& f,
               const std::vector<std::pair<std::string, int>>& assignment) {
    std::vector<int> values;
    values.reserve(f.free_variables().size());
    for (const std::string& var : f.free_variables()) {
        auto it = std::find_if(assignment.begin(), assignment.end(),
                               [&](const auto& p) { return p.first == var; });
        if (it == assignment.end())
            throw std::invalid_argument("no assignment for variable '" + var + "'");
        values.push_back(it->second);
    }
    return satisfies(s, f, values);
}

DensityValue density_exact(const Structure& s, const Formula& f, const DensityOptions& opts) {
    check_nonempty(s);
    int p = f.free_var_count();
    int p_eff = std::max(p, opts.pad_to);
    BigInt n(s.size());
    BigInt total = 1;
    for (int i = 0; i < p_eff; ++i) total *= n;
    if (total > BigInt(opts.budget))
        throw budget_error("exact enumeration budget exceeded: |S|^p = " + total.str() +
                           " assignments; raise --budget or use --samples");

    std::uint64_t count_total = total.convert_to<std::uint64_t>();
    int threads = std::max(1, opts.threads);
    if (static_cast<std::uint64_t>(threads) > count_total)
        threads = static_cast<int>(std::max<std::uint64_t>(1, count_total));

    auto count_range = [&](std::uint64_t begin, std::uint64_t end) -> std::uint64_t {
        Evaluator ev(s, f);
        std::vector<int> values(p_eff, 0);
        std::uint64_t hits = 0;
        for (std::uint64_t index = begin; index < end; ++index) {
            std::uint64_t rest = index;
            for (int i = p_eff - 1; i >= 0; --i) {
                values[i] = static_cast<int>(rest % s.size());
                rest /= s.size();
            }
            if (ev.eval(values)) ++hits;
        }
        return hits;
    };

    std::uint64_t hits = 0;
    if (threads == 1) {
        hits = count_range(0, count_total);
    } else {
        std::vector<std::uint64_t> partial(threads, 0);
        std::vector<std::thread> pool;
        std::uint64_t chunk = count_total / threads;
        for (int t = 0; t < threads; ++t) {
            std::uint64_t begin = t * chunk;
            std::uint64_t end = t + 1 == threads ? count_total : begin + chunk;
            pool.emplace_back([&, t, begin, end] { partial[t] = count_range(begin, end); });
        }
        for (auto& th : pool) th.join();
        for (std::uint64_t h : partial) hits += h;
    }

    DensityValue out;
    out.mode = DensityValue::Mode::Exact;
    out.value = Rational(BigInt(hits), total);
    return out;
}

DensityValue density_sampled(const Structure& s, const Formula& f, std::int64_t samples,
                             std::uint64_t seed, int threads) {
    check_nonempty(s);
    if (samples < 1) throw std::invalid_argument("need at least one sample");
    int p = f.free_var_count();

    auto count_range = [&](std::int64_t begin, std::int64_t end) -> std::int64_t {
        Evaluator ev(s, f);
        std::vector<int> values(p, 0);
        std::int64_t hits = 0;
        for (std::int64_t i = begin; i < end; ++i) {
            Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
            for (int j = 0; j < p; ++j)
                values[j] = static_cast<int>(rng.below(static_cast<std::uint64_t>(s.size())));
            if (ev.eval(values)) ++hits;
        }
        return hits;
    };

    threads = std::max(1, threads);
    if (static_cast<std::int64_t>(threads) > samples) threads = static_cast<int>(samples);
    std::int64_t hits = 0;
    if (threads == 1) {
        hits = count_range(0, samples);
    } else {
        std::vector<std::int64_t> partial(threads, 0);
        std::vector<std::thread> pool;
        std::int64_t chunk = samples / threads;
        for (int t = 0; t < threads; ++t) {
            std::int64_t begin = t * chunk;
            std::int64_t end = t + 1 == threads ? samples : begin + chunk;
            pool.emplace_back([&, t, begin, end] { partial[t] = count_range(begin, end); });
        }
        for (auto& th : pool) th.join();
        for (std::int64_t h : partial) hits += h;
    }

    DensityValue out;
    out.mode = DensityValue::Mode::Sampled;
    out.value = Rational(BigInt(hits), BigInt(samples));
    out.samples = samples;
    out.conf_radius = std::sqrt(std::log(2.0 / 0.05) / (2.0 * static_cast<double>(samples)));
    out.seed = seed;
    return out;
}

BoolExpr BoolExpr::t() { return BoolExpr(); }

BoolExpr BoolExpr::f() {
    BoolExpr e;
    e.kind_ = Kind::False;
    return e;
}

BoolExpr BoolExpr::letter(int index) {
    if (index < 0) throw std::invalid_argument("negative letter index");
    BoolExpr e;
    e.kind_ = Kind::Letter;
    e.letter_ = index;
    return e;
}

BoolExpr operator&&(BoolExpr a, BoolExpr b) {
    BoolExpr e;
    e.kind_ = BoolExpr::Kind::And;
    e.children_.push_back(std::move(a));
    e.children_.push_back(std::move(b));
    return e;
}

BoolExpr operator||(BoolExpr a, BoolExpr b) {
    BoolExpr e;
    e.kind_ = BoolExpr::Kind::Or;
    e.children_.push_back(std::move(a));
    e.children_.push_back(std::move(b));
    return e;
}

BoolExpr operator!(BoolExpr a) {
    BoolExpr e;
    e.kind_ = BoolExpr::Kind::Not;
    e.children_.push_back(std::move(a));
    return e;
}

namespace {

// Indicator polynomial: finite sum of coefficient * 1_{conjunction of
// letters}, keyed by the sorted letter list. The empty key is the constant.
using Poly = std::map<std::vector<int>, Rational>;

void add_term(Poly& p, std::vector<int> key, const Rational& coeff) {
    if (coeff == 0) return;
    auto [it, fresh] = p.emplace(std::move(key), coeff);
    if (!fresh) {
        it->second += coeff;
        if (it->second == 0) p.erase(it);
    }
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ka, ca] : a)
        for (const auto& [kb, cb] : b) {
            std::vector<int> key;
            key.reserve(ka.size() + kb.size());
            std::set_union(ka.begin(), ka.end(), kb.begin(), kb.end(), std::back_inserter(key));
            add_term(out, std::move(key), ca * cb);
        }
    return out;
}

Poly poly_of(const BoolExpr& e) {
    switch (e.kind()) {
        case BoolExpr::Kind::True:
            return Poly{{{}, Rational(1)}};
        case BoolExpr::Kind::False:
            return Poly{};
        case BoolExpr::Kind::Letter:
            return Poly{{{e.letter_index()}, Rational(1)}};
        case BoolExpr::Kind::Not: {
            Poly out{{{}, Rational(1)}};
            for (const auto& [k, c] : poly_of(e.children()[0])) add_term(out, k, -c);
            return out;
        }
        case BoolExpr::Kind::And:
            return poly_mul(poly_of(e.children()[0]), poly_of(e.children()[1]));
        case BoolExpr::Kind::Or: {
            Poly a = poly_of(e.children()[0]);
            Poly b = poly_of(e.children()[1]);
            Poly out = a;
            for (const auto& [k, c] : b) add_term(out, k, c);
            for (const auto& [k, c] : poly_mul(a, b)) add_term(out, k, -c);
            return out;
        }
    }
    return Poly{};
}

}  // namespace

Rational density_boolean_expansion(const BoolExpr& target,
                                   const std::map<std::vector<int>, Rational>& conjunctions) {
    Rational out = 0;
    for (const auto& [key, coeff] : poly_of(target)) {
        if (key.empty()) {
            out += coeff;
            continue;
        }
        auto it = conjunctions.find(key);
        if (it == conjunctions.end()) {
            std::string names;
            for (int letter : key) names += (names.empty() ? "" : ",") + std::to_string(letter);
            throw std::invalid_argument("missing conjunction density for letters {" + names + "}");
        }
        out += coeff * it->second;
    }
    return out;
}

LocalityAudit locality_audit(const Formula& f, int r, std::span<const Structure> structures,
                             int samples_per_structure, std::uint64_t seed) {
    if (r < 0) throw std::invalid_argument("negative radius");
    int p = f.free_var_count();
    if (p < 1) throw std::invalid_argument("locality audit needs free variables");
    if (samples_per_structure < 1) throw std::invalid_argument("need at least one sample");

    LocalityAudit out;
    for (std::size_t si = 0; si < structures.size(); ++si) {
        const Structure& s = structures[si];
        check_nonempty(s);
        Evaluator full(s, f);
        std::vector<int> tuple(p, 0);
        for (int j = 0; j < samples_per_structure; ++j) {
            std::uint64_t index = static_cast<std::uint64_t>(si) *
                                      static_cast<std::uint64_t>(samples_per_structure) +
                                  static_cast<std::uint64_t>(j);
            Rng rng = Rng::stream(seed, index);
            for (int i = 0; i < p; ++i)
                tuple[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(s.size())));

            bool full_value = full.eval(tuple);
            RootedBall b = ball(s, tuple, r);
            bool ball_value = satisfies(b.structure, f, b.roots);
            ++out.checked;
            if (full_value != ball_value)
                out.violations.push_back(
                    {static_cast<int>(si), tuple, full_value, ball_value});
        }
    }
    return out;
}

}  // namespace structlim
