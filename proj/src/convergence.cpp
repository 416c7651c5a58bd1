#include "structlim/convergence.hpp"

#include "structlim/canonical.hpp"
#include "structlim/errors.hpp"

#include <algorithm>
#include <climits>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace structlim {

namespace {

// Per-structure lookup context for atomic types: constants plus bit-matrix
// membership tests for low-arity relations.
struct AtomContext {
    const Structure* s = nullptr;
    int n = 0;
    std::vector<int> consts;
    std::vector<std::vector<std::uint64_t>> fast1;
    std::vector<std::vector<std::uint64_t>> fast2;

    explicit AtomContext(const Structure& st) : s(&st), n(st.size()) {
        const Signature& sig = st.signature();
        for (std::size_t c = 0; c < sig.constants.size(); ++c) {
            consts.push_back(st.constant_value(static_cast<int>(c)));
        }
        fast1.resize(sig.relations.size());
        fast2.resize(sig.relations.size());
        for (std::size_t rel = 0; rel < sig.relations.size(); ++rel) {
            const int ar = sig.relations[rel].arity;
            const auto& tuples = st.tuples(static_cast<int>(rel));
            if (ar == 1) {
                fast1[rel].assign((n + 63) / 64, 0);
                for (const auto& t : tuples) {
                    fast1[rel][t[0] >> 6] |= 1ull << (t[0] & 63);
                }
            } else if (ar == 2 && static_cast<long long>(n) * n <= (64ll << 20)) {
                fast2[rel].assign((static_cast<long long>(n) * n + 63) / 64, 0);
                for (const auto& t : tuples) {
                    long long idx = static_cast<long long>(t[0]) * n + t[1];
                    fast2[rel][idx >> 6] |= 1ull << (idx & 63);
                }
            }
        }
    }

    bool holds(int rel, std::span<const int> args) const {
        if (args.size() == 1 && !fast1[rel].empty()) {
            return fast1[rel][args[0] >> 6] >> (args[0] & 63) & 1;
        }
        if (args.size() == 2 && !fast2[rel].empty()) {
            long long idx = static_cast<long long>(args[0]) * n + args[1];
            return fast2[rel][idx >> 6] >> (idx & 63) & 1;
        }
        return s->has_tuple(rel, args);
    }
};

std::string join_labels(std::span<const std::string> labels, int i, int j) {
    return labels[i] + " vs " + labels[j];
}

template <typename DistFn>
ConvergenceVerdict metric_window_verdict(int count, std::span<const std::string> labels,
                                         DistFn&& dist, const Rational& epsilon,
                                         int window) {
    if (window < 2) throw std::invalid_argument("window must cover at least two entries");
    if (count < window) throw std::invalid_argument("trace is shorter than its window");
    if (static_cast<int>(labels.size()) != count) {
        throw std::invalid_argument("label count does not match trace length");
    }
    if (epsilon <= 0) throw std::invalid_argument("epsilon must be positive");

    ConvergenceVerdict out;
    out.max_gap = Rational(-1);
    int bi = -1;
    int bj = -1;
    for (int i = count - window; i < count; ++i) {
        for (int j = i + 1; j < count; ++j) {
            Rational gap = dist(i, j);
            if (gap > out.max_gap) {
                out.max_gap = std::move(gap);
                bi = i;
                bj = j;
            }
        }
    }
    if (out.max_gap > 2 * epsilon) {
        out.status = VerdictStatus::Diverged;
    } else if (out.max_gap <= epsilon) {
        out.status = VerdictStatus::Converged;
    } else {
        out.status = VerdictStatus::Inconclusive;
    }
    out.witness = join_labels(labels, bi, bj) + ": gap " + rational_string(out.max_gap);
    return out;
}

VerdictStatus combine(VerdictStatus a, VerdictStatus b) {
    if (a == VerdictStatus::Diverged || b == VerdictStatus::Diverged) {
        return VerdictStatus::Diverged;
    }
    if (a == VerdictStatus::Converged && b == VerdictStatus::Converged) {
        return VerdictStatus::Converged;
    }
    return VerdictStatus::Inconclusive;
}

}  // namespace

bool ef_equivalent(const Structure& a, const Structure& b, int k) {
    if (a.signature() != b.signature()) {
        throw std::invalid_argument("back-and-forth comparison needs matching signatures");
    }
    if (k < 0) throw std::invalid_argument("round count must be non-negative");

    const AtomContext ca(a);
    const AtomContext cb(b);
    const Signature& sig = a.signature();
    const int C = static_cast<int>(ca.consts.size());
    const int m = C + k;

    // Shared scratch for atomic keys over (constants ++ tuple) elements.
    std::vector<int> elems(m);
    std::vector<int> args;
    std::vector<int> mapped;
    std::vector<std::uint64_t> key;
    auto build_key = [&](const AtomContext& ctx) {
        key.clear();
        int used = 0;
        auto push = [&](bool bit) {
            if ((used & 63) == 0) key.push_back(0);
            if (bit) key.back() |= 1ull << (used & 63);
            ++used;
        };
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) push(elems[i] == elems[j]);
        }
        for (std::size_t rel = 0; rel < sig.relations.size(); ++rel) {
            const int ar = sig.relations[rel].arity;
            if (ar > 0 && m == 0) continue;  // no argument tuples over zero elements
            args.assign(ar, 0);
            mapped.resize(ar);
            for (;;) {
                for (int i = 0; i < ar; ++i) mapped[i] = elems[args[i]];
                push(ctx.holds(static_cast<int>(rel), mapped));
                int pos = ar - 1;
                while (pos >= 0 && ++args[pos] == m) {
                    args[pos] = 0;
                    --pos;
                }
                if (pos < 0) break;
            }
        }
    };

    if (k == 0) {
        std::copy(ca.consts.begin(), ca.consts.end(), elems.begin());
        build_key(ca);
        std::vector<std::uint64_t> key_a = key;
        std::copy(cb.consts.begin(), cb.consts.end(), elems.begin());
        build_key(cb);
        return key_a == key;
    }

    {
        BigInt work(0);
        for (int n : {a.size(), b.size()}) {
            BigInt w(1);
            for (int i = 0; i < k; ++i) w *= n;
            work += w;
        }
        if (work > 4'000'000'000ll) {
            throw budget_error(
                "back-and-forth game too large; lower the rank or the structure size");
        }
    }

    long long bits = static_cast<long long>(m) * (m - 1) / 2;
    for (const auto& rel : sig.relations) {
        long long p = 1;
        for (int i = 0; i < rel.arity; ++i) {
            p *= m;
            if (p > 1'000'000) throw budget_error("atomic type too wide for this signature");
        }
        bits += p;
    }
    if (bits > 1'000'000) throw budget_error("atomic type too wide for this signature");
    const bool small_key = bits <= 64;

    // Leaf pass: rank-0 types of length-k tuples, folded immediately into the
    // level-(k-1) ids. A level-j id is the interned sorted set of level-(j+1)
    // ids of the tuple's one-point extensions; any member determines the
    // tuple's own atomic type, so sets alone are a complete invariant.
    std::unordered_map<std::uint64_t, std::int32_t> leaf_small;
    std::map<std::vector<std::uint64_t>, std::int32_t> leaf_big;
    auto intern_leaf = [&]() -> std::int32_t {
        if (small_key) {
            auto [it, inserted] = leaf_small.try_emplace(
                key.empty() ? 0 : key[0], static_cast<std::int32_t>(leaf_small.size()));
            return it->second;
        }
        auto [it, inserted] =
            leaf_big.try_emplace(key, static_cast<std::int32_t>(leaf_big.size()));
        return it->second;
    };

    using ListInterner = std::map<std::vector<std::int32_t>, std::int32_t>;
    auto intern_list = [](ListInterner& table,
                          const std::vector<std::int32_t>& list) -> std::int32_t {
        auto [it, inserted] =
            table.try_emplace(list, static_cast<std::int32_t>(table.size()));
        return it->second;
    };

    auto tuple_count = [](int n, int len) -> std::size_t {
        std::size_t count = 1;
        for (int i = 0; i < len; ++i) count *= static_cast<std::size_t>(n);
        return count;
    };

    ListInterner leaf_lists;
    auto leaf_ids = [&](const AtomContext& ctx) {
        const int n = ctx.n;
        const int len = k - 1;
        const std::size_t count = tuple_count(n, len);
        std::vector<std::int32_t> ids(count);
        std::copy(ctx.consts.begin(), ctx.consts.end(), elems.begin());
        std::vector<int> digits(len, 0);
        std::vector<std::int32_t> children;
        for (std::size_t t = 0; t < count; ++t) {
            for (int i = 0; i < len; ++i) elems[C + i] = digits[i];
            children.clear();
            for (int c = 0; c < n; ++c) {
                elems[C + len] = c;
                build_key(ctx);
                children.push_back(intern_leaf());
            }
            std::sort(children.begin(), children.end());
            children.erase(std::unique(children.begin(), children.end()), children.end());
            ids[t] = intern_list(leaf_lists, children);
            int pos = len - 1;
            while (pos >= 0 && ++digits[pos] == n) {
                digits[pos] = 0;
                --pos;
            }
        }
        return ids;
    };

    std::vector<std::int32_t> ids_a = leaf_ids(ca);
    std::vector<std::int32_t> ids_b = leaf_ids(cb);

    for (int j = k - 2; j >= 0; --j) {
        ListInterner level;
        auto shrink = [&](const AtomContext& ctx, const std::vector<std::int32_t>& prev) {
            const int n = ctx.n;
            const std::size_t count = tuple_count(n, j);
            std::vector<std::int32_t> ids(count);
            std::vector<std::int32_t> children;
            for (std::size_t t = 0; t < count; ++t) {
                children.clear();
                for (int c = 0; c < n; ++c) {
                    children.push_back(prev[t * static_cast<std::size_t>(n) + c]);
                }
                std::sort(children.begin(), children.end());
                children.erase(std::unique(children.begin(), children.end()),
                               children.end());
                ids[t] = intern_list(level, children);
            }
            return ids;
        };
        ids_a = shrink(ca, ids_a);
        ids_b = shrink(cb, ids_b);
    }
    return ids_a.at(0) == ids_b.at(0);
}

Rational ElementaryDistance::upper() const {
    switch (kind) {
        case Kind::Zero: return Rational(0);
        case Kind::Exact:
        case Kind::UpperBound: return Rational(1, pow2(static_cast<unsigned>(k)));
    }
    return Rational(0);
}

std::string ElementaryDistance::to_string() const {
    switch (kind) {
        case Kind::Zero: return "0";
        case Kind::Exact: return k == 0 ? "1" : "2^-" + std::to_string(k);
        case Kind::UpperBound: return "(0, 2^-" + std::to_string(k) + "]";
    }
    return "0";
}

ElementaryDistance elementary_distance(const Structure& a, const Structure& b, int kmax) {
    if (kmax < 0) throw std::invalid_argument("rank cap must be non-negative");
    if (a.size() == b.size() && isomorphic(a, b)) {
        return {ElementaryDistance::Kind::Zero, 0};
    }
    for (int k = 0; k <= kmax; ++k) {
        if (!ef_equivalent(a, b, k)) return {ElementaryDistance::Kind::Exact, k};
    }
    return {ElementaryDistance::Kind::UpperBound, kmax};
}

std::string verdict_name(VerdictStatus v) {
    switch (v) {
        case VerdictStatus::Converged: return "converged";
        case VerdictStatus::Diverged: return "diverged";
        case VerdictStatus::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

ConvergenceVerdict window_verdict(std::span<const Rational> values,
                                  std::span<const std::string> labels,
                                  const Rational& epsilon, int window) {
    return metric_window_verdict(
        static_cast<int>(values.size()), labels,
        [&](int i, int j) { return abs(values[i] - values[j]); }, epsilon, window);
}

DensityTrace density_trace(std::span<const Structure> seq,
                           std::span<const std::string> labels, const Formula& f,
                           const TraceOptions& opts) {
    if (seq.size() != labels.size()) {
        throw std::invalid_argument("label count does not match sequence length");
    }
    DensityTrace trace;
    trace.labels.assign(labels.begin(), labels.end());
    DensityOptions dopts;
    dopts.budget = opts.budget;
    dopts.threads = opts.threads;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        try {
            trace.values.push_back(density_exact(seq[i], f, dopts));
        } catch (const budget_error&) {
            if (!opts.allow_sampling) throw;
            trace.values.push_back(density_sampled(seq[i], f, opts.samples,
                                                   opts.seed + i, opts.threads));
        }
    }
    return trace;
}

ConvergenceVerdict trace_verdict(const DensityTrace& trace, const Rational& epsilon,
                                 int window) {
    return metric_window_verdict(
        static_cast<int>(trace.values.size()), trace.labels,
        [&](int i, int j) { return abs(trace.values[i].value - trace.values[j].value); },
        epsilon, window);
}

BsCheckReport bs_convergence_check(std::span<const Structure> seq,
                                   std::span<const std::string> labels, int r_max,
                                   const Rational& epsilon, int window, int threads) {
    if (seq.size() != labels.size()) {
        throw std::invalid_argument("label count does not match sequence length");
    }
    if (r_max < 0) throw std::invalid_argument("radius cap must be non-negative");
    const int count = static_cast<int>(seq.size());
    if (window < 2) throw std::invalid_argument("window must cover at least two entries");
    if (count < window) throw std::invalid_argument("trace is shorter than its window");

    BsCheckReport report;
    report.overall = VerdictStatus::Converged;
    for (int r = 0; r <= r_max; ++r) {
        std::vector<BallDistribution> dists;
        dists.reserve(count);
        for (const auto& s : seq) dists.push_back(ball_distribution(s, r, threads));

        BsRadiusResult result;
        result.radius = r;
        for (int i = 0; i + 1 < count; ++i) {
            result.consecutive_tv.push_back(tv_distance(dists[i], dists[i + 1]));
        }
        result.verdict = metric_window_verdict(
            count, labels, [&](int i, int j) { return tv_distance(dists[i], dists[j]); },
            epsilon, window);
        report.overall = combine(report.overall, result.verdict.status);
        report.per_radius.push_back(std::move(result));
    }

    std::vector<int> tail_degrees;
    for (int i = count - window; i < count; ++i) tail_degrees.push_back(max_degree(seq[i]));
    if (!std::all_of(tail_degrees.begin(), tail_degrees.end(),
                     [&](int d) { return d == tail_degrees.front(); })) {
        report.degree_warning = true;
        std::ostringstream note;
        note << "maximum degree varies across the window:";
        for (int i = 0; i < window; ++i) {
            note << ' ' << labels[count - window + i] << '=' << tail_degrees[i];
        }
        note << "; ball statistics assume a uniform degree bound";
        report.degree_note = note.str();
    }
    return report;
}

FoSplitReport fo_split_check(std::span<const Structure> seq,
                             std::span<const std::string> labels, int r_max, int kmax,
                             const Rational& epsilon, int window, int threads) {
    if (kmax < 0) throw std::invalid_argument("rank cap must be non-negative");
    FoSplitReport report;
    report.bs = bs_convergence_check(seq, labels, r_max, epsilon, window, threads);
    report.kmax = kmax;

    const int count = static_cast<int>(seq.size());
    int best_k = INT_MAX;
    int bi = -1;
    int bj = -1;
    for (int i = count - window; i < count && best_k > 0; ++i) {
        for (int j = i + 1; j < count && best_k > 0; ++j) {
            for (int k = 0; k <= kmax && k < best_k; ++k) {
                if (!ef_equivalent(seq[i], seq[j], k)) {
                    best_k = k;
                    bi = i;
                    bj = j;
                    break;
                }
            }
        }
    }
    if (best_k <= kmax) {
        report.elementary = VerdictStatus::Diverged;
        report.elementary_witness = join_labels(labels, bi, bj) +
                                    " separated at quantifier rank " +
                                    std::to_string(best_k);
    } else {
        report.elementary = VerdictStatus::Converged;
        report.elementary_witness =
            "all window pairs agree up to quantifier rank " + std::to_string(kmax);
    }
    report.fo = combine(report.bs.overall, report.elementary);
    return report;
}

}  // namespace structlim
