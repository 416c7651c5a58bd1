#pragma once

#include "structlim/density.hpp"
#include "structlim/formula.hpp"
#include "structlim/local_bs.hpp"
#include "structlim/rational.hpp"
#include "structlim/structure.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace structlim {

/// Whether Duplicator wins the k-round back-and-forth game, i.e. the two
/// structures satisfy the same sentences of quantifier rank at most k.
/// Decided by interning rank-(k-j) types of j-tuples bottom-up.
bool ef_equivalent(const Structure& a, const Structure& b, int k);

/// 2^-k for the least quantifier rank k of a separating sentence. Searched
/// up to rank kmax; past that the result is an interval, never a silent 0.
struct ElementaryDistance {
    enum class Kind { Zero, Exact, UpperBound };
    Kind kind = Kind::Zero;
    int k = 0;  // separating rank for Exact, the search cap for UpperBound

    Rational upper() const;
    std::string to_string() const;
};

ElementaryDistance elementary_distance(const Structure& a, const Structure& b, int kmax);

enum class VerdictStatus { Converged, Diverged, Inconclusive };

std::string verdict_name(VerdictStatus v);

/// Windowed Cauchy test: over the last `window` entries, converged when every
/// pairwise gap is at most epsilon, diverged when some gap exceeds 2*epsilon,
/// inconclusive in between. The witness names the widest pair.
struct ConvergenceVerdict {
    VerdictStatus status = VerdictStatus::Inconclusive;
    Rational max_gap;
    std::string witness;
};

ConvergenceVerdict window_verdict(std::span<const Rational> values,
                                  std::span<const std::string> labels,
                                  const Rational& epsilon, int window);

struct TraceOptions {
    std::uint64_t budget = 100'000'000;
    std::int64_t samples = 100'000;
    bool allow_sampling = true;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// Formula density along a sequence of structures. Exact where the budget
/// allows, sampled otherwise (when allowed).
struct DensityTrace {
    std::vector<std::string> labels;
    std::vector<DensityValue> values;
};

DensityTrace density_trace(std::span<const Structure> seq,
                           std::span<const std::string> labels, const Formula& f,
                           const TraceOptions& opts);

ConvergenceVerdict trace_verdict(const DensityTrace& trace, const Rational& epsilon,
                                 int window);

struct BsRadiusResult {
    int radius = 0;
    ConvergenceVerdict verdict;
    std::vector<Rational> consecutive_tv;  // step-to-step distances, full trace
};

/// Ball-statistics convergence: one windowed verdict per radius 0..r_max on
/// pairwise total variation distances, folded into an overall status. Flags
/// sequences whose maximum degree drifts inside the window, since unbounded
/// degree growth makes ball statistics incomparable across the sequence.
struct BsCheckReport {
    std::vector<BsRadiusResult> per_radius;
    VerdictStatus overall = VerdictStatus::Inconclusive;
    bool degree_warning = false;
    std::string degree_note;
};

BsCheckReport bs_convergence_check(std::span<const Structure> seq,
                                   std::span<const std::string> labels, int r_max,
                                   const Rational& epsilon, int window, int threads = 1);

/// Splits first-order convergence into its two halves: ball statistics for
/// local behaviour and elementary (back-and-forth) agreement for sentences.
/// The sequence converges in the full sense only when both halves do.
struct FoSplitReport {
    BsCheckReport bs;
    VerdictStatus elementary = VerdictStatus::Inconclusive;
    std::string elementary_witness;
    int kmax = 0;
    VerdictStatus fo = VerdictStatus::Inconclusive;
};

FoSplitReport fo_split_check(std::span<const Structure> seq,
                             std::span<const std::string> labels, int r_max, int kmax,
                             const Rational& epsilon, int window, int threads = 1);

}  // namespace structlim
