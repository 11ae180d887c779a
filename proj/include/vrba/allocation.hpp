// SPDX-License-Identifier: Apache-2.0
//
// Budget-feasible bit allocation space and the solvers over it: exhaustive
// search on the exact energy efficiency, the table-driven Q-search on the
// surrogate, and simulated annealing on the same surrogate.

#ifndef VRBA_ALLOCATION_HPP
#define VRBA_ALLOCATION_HPP

#include "vrba/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace vrba {

/// Lexicographically ordered B_set = {b in [1, N_b]^{N_s} : budget holds}.
/// Members are produced lazily; nothing is materialised.
class SolutionSpace
{
public:
    SolutionSpace(int num_streams, int num_bits, const PowerModel &pm)
        : Ns_(num_streams), Nb_(num_bits), budget_steps_(pm.budget_steps()), form_(pm.budget_form)
    {
        if (num_streams < 1 || num_bits < 1) {
            throw DomainError("SolutionSpace: N_s and N_b must be >= 1");
        }
        if (num_bits > 30) {
            throw DomainError("SolutionSpace: N_b above 30 bits is not supported");
        }
        if (static_cast<double>(num_streams) * 2.0 > budget_steps_) {
            const char *form = form_ == BudgetForm::Factor2 ? "2 c f_s sum 2^b_i" : "c f_s sum 2^b_i";
            throw InfeasibleError("SolutionSpace: P_ADC budget " + std::to_string(pm.P_ADC_budget)
                                  + " W admits no allocation (" + form + " <= P_ADC fails even at all b_i = 1)");
        }
    }

    int num_streams() const noexcept { return Ns_; }
    int num_bits() const noexcept { return Nb_; }
    double budget_steps() const noexcept { return budget_steps_; }
    BudgetForm budget_form() const noexcept { return form_; }

    /// N_b^{N_s}, the unfiltered grid size.
    std::uint64_t grid_size() const
    {
        std::uint64_t n = 1;
        for (int i = 0; i < Ns_; ++i) {
            n *= static_cast<std::uint64_t>(Nb_);
        }
        return n;
    }

    bool contains(const BitVector &b) const
    {
        if (static_cast<int>(b.size()) != Ns_) {
            return false;
        }
        for (int v : b.bits()) {
            if (v < 1 || v > Nb_) {
                return false;
            }
        }
        return static_cast<double>(b.step_sum()) <= budget_steps_;
    }

    bool feasible_bits(const std::vector<int> &bits) const
    {
        std::int64_t s = 0;
        for (int v : bits) {
            s += std::int64_t{1} << v;
        }
        return static_cast<double>(s) <= budget_steps_;
    }

    /// |B_set| by dynamic programming over the step sum.
    std::uint64_t cardinality() const
    {
        const std::int64_t full = static_cast<std::int64_t>(Ns_) << Nb_;
        if (static_cast<double>(full) <= budget_steps_) {
            return grid_size();
        }
        const auto cap = static_cast<std::int64_t>(std::floor(budget_steps_));
        std::vector<std::uint64_t> ways(static_cast<std::size_t>(cap) + 1, 0);
        ways[0] = 1;
        for (int i = 0; i < Ns_; ++i) {
            std::vector<std::uint64_t> next(ways.size(), 0);
            for (std::int64_t s = 0; s <= cap; ++s) {
                if (!ways[s]) {
                    continue;
                }
                for (int b = 1; b <= Nb_; ++b) {
                    const std::int64_t t = s + (std::int64_t{1} << b);
                    if (t <= cap) {
                        next[t] += ways[s];
                    }
                }
            }
            ways.swap(next);
        }
        std::uint64_t total = 0;
        for (auto w : ways) {
            total += w;
        }
        return total;
    }

    /// Grid vector of lexicographic rank r (first coordinate most significant).
    std::vector<int> decode(std::uint64_t rank) const
    {
        std::vector<int> bits(Ns_);
        for (int i = Ns_ - 1; i >= 0; --i) {
            bits[i] = static_cast<int>(rank % static_cast<std::uint64_t>(Nb_)) + 1;
            rank /= static_cast<std::uint64_t>(Nb_);
        }
        return bits;
    }

    /// Visits the feasible members with grid rank in [begin, end) in order.
    void for_each(std::uint64_t begin, std::uint64_t end,
                  const std::function<void(const std::vector<int> &, std::int64_t)> &visit) const
    {
        if (begin >= end) {
            return;
        }
        std::vector<int> bits = decode(begin);
        std::int64_t steps = 0;
        for (int v : bits) {
            steps += std::int64_t{1} << v;
        }
        for (std::uint64_t r = begin; r < end; ++r) {
            if (static_cast<double>(steps) <= budget_steps_) {
                visit(bits, steps);
            }
            // Odometer increment.
            for (int i = Ns_ - 1; i >= 0; --i) {
                steps -= std::int64_t{1} << bits[i];
                if (bits[i] < Nb_) {
                    ++bits[i];
                    steps += std::int64_t{1} << bits[i];
                    break;
                }
                bits[i] = 1;
                steps += 2;
            }
        }
    }

    void for_each(const std::function<void(const std::vector<int> &, std::int64_t)> &visit) const
    {
        for_each(0, grid_size(), visit);
    }

    /// Materialises the members; intended for small spaces and tests.
    std::vector<BitVector> members() const
    {
        std::vector<BitVector> out;
        for_each([&](const std::vector<int> &bits, std::int64_t) { out.emplace_back(bits, Nb_); });
        return out;
    }

private:
    int Ns_;
    int Nb_;
    double budget_steps_;
    BudgetForm form_;
};

/// Operation tallies under the complexity accounting conventions: each
/// objective evaluation is charged its nominal cost, not the instructions the
/// implementation happens to execute.
struct OpCounter
{
    std::uint64_t complex_mults = 0;
    std::uint64_t real_mults = 0;
    std::uint64_t complex_adds = 0;
    std::uint64_t real_adds = 0;
    std::uint64_t objective_evals = 0;

    OpCounter &operator+=(const OpCounter &o)
    {
        complex_mults += o.complex_mults;
        real_mults += o.real_mults;
        complex_adds += o.complex_adds;
        real_adds += o.real_adds;
        objective_evals += o.objective_evals;
        return *this;
    }
};

enum class Solver { Exhaustive, QSearch, SimulatedAnnealing, Fixed, MinCrlb };

inline std::string solver_name(Solver s)
{
    switch (s) {
    case Solver::Exhaustive:
        return "es";
    case Solver::QSearch:
        return "qsearch";
    case Solver::SimulatedAnnealing:
        return "sa";
    case Solver::Fixed:
        return "fixed";
    case Solver::MinCrlb:
        return "mincrlb";
    }
    return "unknown";
}

enum class QSearchMode { Exact, FixedPoint };

enum class SaObjective { Surrogate, ExactEe };

struct SaConfig
{
    /// Initial temperature; unset means the acceptance-calibrated default.
    std::optional<double> T0;
    double r = 0.9;
    int m = 16;
    std::uint64_t seed = 1;
    SaObjective objective = SaObjective::Surrogate;
    /// Multiplier applied to costs before the acceptance test; unset means
    /// calibrated so a typical worsening move has acceptance ~0.01 at t = 1.
    std::optional<double> cost_scale;
    bool record_trace = false;

    void validate() const
    {
        if (T0 && !(*T0 > 1.0)) {
            throw DomainError("SaConfig: T0 must exceed 1");
        }
        if (!(r > 0.0 && r < 1.0)) {
            throw DomainError("SaConfig: cooling factor r must lie in (0, 1)");
        }
        if (m < 1) {
            throw DomainError("SaConfig: m must be >= 1");
        }
        if (cost_scale && !(*cost_scale > 0.0)) {
            throw DomainError("SaConfig: cost_scale must be positive");
        }
    }
};

/// Initial worsening-move acceptance targeted by the default T0.
inline constexpr double kSaInitialAcceptance = 0.4;
/// Acceptance of a typical worsening move at the final temperature t = 1.
inline constexpr double kSaFinalAcceptance = 0.01;

/// T = r^{-N_s^{D-1}}, the temperature giving O(N_s^D) additive complexity.
inline double sa_temperature_for_degree(double r, int num_streams, double degree)
{
    if (!(r > 0.0 && r < 1.0) || num_streams < 1) {
        throw DomainError("sa_temperature_for_degree: need 0 < r < 1 and N_s >= 1");
    }
    return std::pow(r, -std::pow(static_cast<double>(num_streams), degree - 1.0));
}

/// Number of temperature levels, ceil(log(1/T) / log r).
inline int sa_levels(double T0, double r)
{
    return static_cast<int>(std::ceil(std::log(1.0 / T0) / std::log(r) - 1e-12));
}

/// Default T0 from the calibrated scale: a typical worsening move (scaled
/// delta -ln(1/kSaFinalAcceptance - 1)) is accepted with kSaInitialAcceptance.
inline double sa_default_T0()
{
    return std::log(1.0 / kSaFinalAcceptance - 1.0) / std::log(1.0 / kSaInitialAcceptance - 1.0);
}

/// Sigmoid acceptance probability 1 / (1 + exp(-delta / t)).
inline double sa_acceptance(double delta, double t)
{
    return 1.0 / (1.0 + std::exp(-delta / t));
}

struct SaTraceEntry
{
    std::uint64_t iteration = 0;
    double t = 0.0;
    double cost = 0.0; ///< current cost (unscaled)
    double best = 0.0; ///< incumbent cost (unscaled)
    bool accepted = false;
};

struct AllocationResult
{
    BitVector b_star;
    RateEnergyReport report;
    Solver solver = Solver::Exhaustive;
    OpCounter counters;
    double objective = 0.0; ///< the solver's own objective at b_star
    std::uint64_t evaluations = 0;
    std::vector<SaTraceEntry> trace;
    double T0 = 0.0;
    double cost_scale = 1.0;
    int levels = 0;
};

namespace detail {

/// Deterministic total order: higher key, then lower power, then lex smaller.
struct Candidate
{
    double key = -std::numeric_limits<double>::infinity();
    std::int64_t steps = 0;
    std::vector<int> bits;
    bool valid = false;

    bool beats(double k, std::int64_t s, const std::vector<int> &b) const
    {
        if (!valid) {
            return true;
        }
        if (k != key) {
            return k > key;
        }
        if (s != steps) {
            return s < steps;
        }
        return b < bits;
    }

    void offer(double k, std::int64_t s, const std::vector<int> &b)
    {
        if (beats(k, s, b)) {
            key = k;
            steps = s;
            bits = b;
            valid = true;
        }
    }

    void merge(const Candidate &o)
    {
        if (o.valid) {
            offer(o.key, o.steps, o.bits);
        }
    }
};

/// Partitioned argmax over the lexicographic grid. The reduction uses the
/// total order above, so the result does not depend on the thread count.
inline Candidate parallel_scan(const SolutionSpace &space, int threads,
                               const std::function<double(const std::vector<int> &, std::int64_t)> &key,
                               std::uint64_t &visited)
{
    const std::uint64_t total = space.grid_size();
    const int workers = static_cast<int>(std::max<std::uint64_t>(
        1, std::min<std::uint64_t>(static_cast<std::uint64_t>(std::max(1, threads)), total)));
    std::vector<Candidate> best(workers);
    std::vector<std::uint64_t> counts(workers, 0);
    auto work = [&](int w) {
        const std::uint64_t lo = total * w / workers;
        const std::uint64_t hi = total * (w + 1) / workers;
        space.for_each(lo, hi, [&](const std::vector<int> &b, std::int64_t steps) {
            best[w].offer(key(b, steps), steps, b);
            ++counts[w];
        });
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work, w);
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    Candidate out;
    visited = 0;
    for (int w = 0; w < workers; ++w) {
        out.merge(best[w]);
        visited += counts[w];
    }
    if (!out.valid) {
        throw InfeasibleError("solution space is empty");
    }
    return out;
}

inline double total_power_steps(std::int64_t steps, const PowerModel &pm)
{
    return pm.P_T() + pm.P_R() + 2.0 * pm.step_power() * static_cast<double>(steps);
}

/// Q16 fixed-point log2 via a 1024-entry mantissa table.
class Log2Table
{
public:
    static constexpr int kFracBits = 16;
    static constexpr int kIndexBits = 10;

    Log2Table()
    {
        for (int k = 0; k < (1 << kIndexBits); ++k) {
            table_[k] = static_cast<std::int64_t>(
                std::llround(std::log2(1.0 + static_cast<double>(k) / (1 << kIndexBits)) * (1 << kFracBits)));
        }
    }

    std::int64_t operator()(double x) const
    {
        int e = 0;
        const double mant = std::frexp(x, &e); // x = mant * 2^e, mant in [0.5, 1)
        const auto idx = static_cast<int>((2.0 * mant - 1.0) * (1 << kIndexBits));
        return (static_cast<std::int64_t>(e - 1) << kFracBits) + table_[std::min(idx, (1 << kIndexBits) - 1)];
    }

private:
    std::array<std::int64_t, (1 << kIndexBits)> table_{};
};

} // namespace detail

/// Per-member cost tallies charged by the solvers.
namespace accounting {

inline std::uint64_t es_complex_mults_per_eval(int Ns) { return static_cast<std::uint64_t>(Ns) * Ns + 2ull * Ns; }
inline std::uint64_t es_complex_adds_per_eval(int Ns)
{
    return static_cast<std::uint64_t>(Ns) * (Ns - 1) + static_cast<std::uint64_t>(Ns);
}
inline std::uint64_t l_setup_real_mults(int Ns) { return 3ull * Ns * Ns; }
inline std::uint64_t l_setup_real_adds(int Ns) { return 2ull * Ns * Ns + static_cast<std::uint64_t>(Ns) * (Ns - 1); }
inline std::uint64_t qtable_real_mults(int Ns, int Nb) { return 3ull * Ns * Ns + 3ull * Ns * Nb; }
inline std::uint64_t qtable_real_adds(int Ns, int Nb) { return 3ull * Ns * Ns + static_cast<std::uint64_t>(Ns) * Nb; }
inline std::uint64_t qsearch_real_adds_per_eval(int Ns) { return static_cast<std::uint64_t>(Ns) - 1; }
inline std::uint64_t sa_real_adds_per_eval(int Ns) { return 2ull * Ns + 5; }

} // namespace accounting

/// Exhaustive search over B_set maximising the exact R(b) / p(b).
inline AllocationResult solve_exhaustive(const SolutionSpace &space, const LinkContext &ctx, int threads = 1)
{
    const int Ns = space.num_streams();
    const int Nb = space.num_bits();
    if (Ns != ctx.num_streams()) {
        throw DimensionError("solve_exhaustive: space and context disagree on N_s");
    }

    AllocationResult res;
    res.solver = Solver::Exhaustive;
    std::uint64_t visited = 0;
    detail::Candidate best;
    if (ctx.simplified) {
        // CRLB_i depends on b_i only, so the per-stream rate terms are tabulated.
        RMatrix term(Nb, Ns);
        for (int i = 0; i < Ns; ++i) {
            for (int b = 1; b <= Nb; ++b) {
                const double crlb_ib = (ctx.sigma_n2 + gain(b, ctx.table) * ctx.l(i)) / ctx.sigma2(i);
                term(b - 1, i) = std::log2(1.0 / crlb_ib + 1.0 / ctx.p);
            }
        }
        const double base = Ns * std::log2(ctx.p);
        best = detail::parallel_scan(
            space, threads,
            [&](const std::vector<int> &b, std::int64_t steps) {
                double r = base;
                for (int i = 0; i < Ns; ++i) {
                    r += term(b[i] - 1, i);
                }
                return r / detail::total_power_steps(steps, ctx.power);
            },
            visited);
    } else {
        best = detail::parallel_scan(
            space, 1,
            [&](const std::vector<int> &b, std::int64_t) { return energy_efficiency(BitVector(b, Nb), ctx).ee; },
            visited);
    }

    res.b_star = BitVector(best.bits, Nb);
    res.report = energy_efficiency(res.b_star, ctx);
    res.objective = res.report.ee;
    res.evaluations = visited;
    res.counters.objective_evals = visited;
    res.counters.complex_mults = visited * accounting::es_complex_mults_per_eval(Ns);
    res.counters.complex_adds = visited * accounting::es_complex_adds_per_eval(Ns);
    res.counters.real_mults = accounting::l_setup_real_mults(Ns);
    return res;
}

struct QSearchOptions
{
    QSearchMode mode = QSearchMode::Exact;
    int threads = 1;
};

/// Table-driven scan maximising sum_i Q(b_i, i) / p(b).
inline AllocationResult solve_qsearch(const SolutionSpace &space, const QTable &qt, const LinkContext &ctx,
                                      QSearchOptions opts = {})
{
    const int Ns = space.num_streams();
    const int Nb = space.num_bits();
    if (qt.num_streams() != Ns || qt.num_bits() < Nb) {
        throw DimensionError("solve_qsearch: Q table does not cover the solution space");
    }
    const PowerModel &pm = ctx.power;
    const double unit = 2.0 * pm.step_power();

    AllocationResult res;
    res.solver = Solver::QSearch;
    std::uint64_t visited = 0;
    detail::Candidate best;
    if (opts.mode == QSearchMode::Exact) {
        // m / p(b) is the exponentiated log2(m) + ptot; comparing it directly
        // keeps the argmax bit-identical to surrogate_objective().
        best = detail::parallel_scan(
            space, opts.threads,
            [&](const std::vector<int> &b, std::int64_t steps) {
                double m = 0.0;
                for (int i = 0; i < Ns; ++i) {
                    m += qt(b[i], i);
                }
                return m / detail::total_power_steps(steps, pm);
            },
            visited);
    } else {
        static const detail::Log2Table log2q16;
        const double offset = unit > 0.0 ? (pm.P_T() + pm.P_R()) / unit : 0.0;
        best = detail::parallel_scan(
            space, opts.threads,
            [&](const std::vector<int> &b, std::int64_t steps) {
                double m = 0.0;
                for (int i = 0; i < Ns; ++i) {
                    m += qt(b[i], i);
                }
                if (!(m > 0.0)) {
                    return -std::numeric_limits<double>::infinity();
                }
                // The common -log2(2 c f_s) term is dropped; it does not move the argmax.
                const double den = unit > 0.0 ? offset + static_cast<double>(steps) : pm.P_T() + pm.P_R();
                return static_cast<double>(log2q16(m) - log2q16(den));
            },
            visited);
    }

    res.b_star = BitVector(best.bits, Nb);
    res.report = energy_efficiency(res.b_star, ctx);
    res.objective = std::log2(qt.sum(res.b_star)) - std::log2(total_power(res.b_star, pm));
    res.evaluations = visited;
    res.counters.objective_evals = visited;
    res.counters.real_mults = accounting::qtable_real_mults(Ns, Nb);
    res.counters.real_adds = accounting::qtable_real_adds(Ns, Nb) + visited * accounting::qsearch_real_adds_per_eval(Ns);
    return res;
}

/// Uniform draw over the single-coordinate +-1 moves that stay in the space;
/// the input is returned unchanged only when no such move exists.
template <typename Rng>
BitVector neighbor(const BitVector &b, const SolutionSpace &space, Rng &rng)
{
    const int Ns = static_cast<int>(b.size());
    std::vector<int> bits = b.bits();
    std::vector<std::pair<int, int>> moves;
    moves.reserve(2 * static_cast<std::size_t>(Ns));
    for (int i = 0; i < Ns; ++i) {
        for (int d : {-1, 1}) {
            const int v = bits[i] + d;
            if (v < 1 || v > space.num_bits()) {
                continue;
            }
            const int old = bits[i];
            bits[i] = v;
            if (space.feasible_bits(bits)) {
                moves.emplace_back(i, v);
            }
            bits[i] = old;
        }
    }
    if (moves.empty()) {
        return b;
    }
    std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
    const auto [i, v] = moves[pick(rng)];
    bits[i] = v;
    return BitVector(bits, b.max_bits());
}

/// Uniform draw from B_set by rejection; falls back to the all-ones member.
template <typename Rng>
BitVector random_member(const SolutionSpace &space, Rng &rng)
{
    std::uniform_int_distribution<int> pick(1, space.num_bits());
    std::vector<int> bits(space.num_streams());
    for (int attempt = 0; attempt < 256; ++attempt) {
        for (int &v : bits) {
            v = pick(rng);
        }
        if (space.feasible_bits(bits)) {
            return BitVector(bits, space.num_bits());
        }
    }
    return BitVector::uniform(static_cast<std::size_t>(space.num_streams()), 1, space.num_bits());
}

/// Simulated annealing with sigmoid acceptance 1 / (1 + exp(-delta / t)).
inline AllocationResult solve_sa(const SolutionSpace &space, const QTable &qt, const LinkContext &ctx,
                                 const SaConfig &cfg)
{
    cfg.validate();
    const int Ns = space.num_streams();
    const int Nb = space.num_bits();
    if (qt.num_streams() != Ns || qt.num_bits() < Nb) {
        throw DimensionError("solve_sa: Q table does not cover the solution space");
    }
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x5341));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    AllocationResult res;
    res.solver = Solver::SimulatedAnnealing;
    std::uint64_t evals = 0;
    auto cost_of = [&](const BitVector &b) {
        ++evals;
        if (cfg.objective == SaObjective::ExactEe) {
            return energy_efficiency(b, ctx).ee;
        }
        return qt.sum(b) / total_power(b, ctx.power);
    };

    // Scale calibration from random moves; the samples count as evaluations.
    double scale = 1.0;
    if (cfg.cost_scale) {
        scale = *cfg.cost_scale;
    } else {
        std::mt19937_64 crng(derive_seed(cfg.seed, 0x63616c));
        double sum = 0.0;
        int n = 0;
        for (int k = 0; k < 8 * Ns; ++k) {
            const BitVector a = random_member(space, crng);
            const BitVector c = neighbor(a, space, crng);
            const double d = std::abs(cost_of(c) - cost_of(a));
            if (d > 0.0) {
                sum += d;
                ++n;
            }
        }
        if (n > 0) {
            scale = std::log(1.0 / kSaFinalAcceptance - 1.0) / (sum / n);
        }
    }
    res.cost_scale = scale;
    res.T0 = cfg.T0.value_or(sa_default_T0());
    res.levels = sa_levels(res.T0, cfg.r);

    BitVector current = random_member(space, rng);
    double cost = cost_of(current);
    BitVector best = current;
    double best_cost = cost;
    std::uint64_t iteration = 0;
    if (cfg.record_trace) {
        res.trace.push_back({iteration, res.T0, cost, best_cost, true});
    }

    double t = res.T0;
    while (t > 1.0) {
        for (int k = 0; k < cfg.m; ++k) {
            const BitVector cand = neighbor(current, space, rng);
            const double c_new = cost_of(cand);
            const double delta = (c_new - cost) * scale;
            const double pa = sa_acceptance(delta, t);
            const bool accept = uniform(rng) <= pa;
            if (accept) {
                current = cand;
                cost = c_new;
                if (c_new > best_cost) {
                    best_cost = c_new;
                    best = cand;
                }
            }
            ++iteration;
            if (cfg.record_trace) {
                res.trace.push_back({iteration, t, cost, best_cost, accept});
            }
        }
        t *= cfg.r;
    }

    res.b_star = best;
    res.report = energy_efficiency(best, ctx);
    res.objective = best_cost;
    res.evaluations = evals;
    res.counters.objective_evals = evals;
    res.counters.real_mults = accounting::qtable_real_mults(Ns, Nb);
    res.counters.real_adds = accounting::l_setup_real_adds(Ns) + evals * accounting::sa_real_adds_per_eval(Ns);
    return res;
}

/// Reference allocation with every path at the same resolution.
inline AllocationResult evaluate_fixed(int bits, const LinkContext &ctx, int max_bits)
{
    AllocationResult res;
    res.solver = Solver::Fixed;
    res.b_star = BitVector::uniform(static_cast<std::size_t>(ctx.num_streams()), bits, max_bits);
    res.report = energy_efficiency(res.b_star, ctx);
    res.objective = res.report.ee;
    res.evaluations = 1;
    res.counters.objective_evals = 1;
    return res;
}

/// argmin over B_set of the summed per-stream CRLB (the MSE criterion).
inline AllocationResult solve_min_crlb(const SolutionSpace &space, const LinkContext &ctx)
{
    const int Ns = space.num_streams();
    const int Nb = space.num_bits();
    RMatrix term(Nb, Ns);
    for (int i = 0; i < Ns; ++i) {
        for (int b = 1; b <= Nb; ++b) {
            term(b - 1, i) = (ctx.sigma_n2 + gain(b, ctx.table) * ctx.l(i)) / ctx.sigma2(i);
        }
    }
    std::uint64_t visited = 0;
    const detail::Candidate best = detail::parallel_scan(
        space, 1,
        [&](const std::vector<int> &b, std::int64_t) {
            double s = 0.0;
            for (int i = 0; i < Ns; ++i) {
                s += term(b[i] - 1, i);
            }
            return -s;
        },
        visited);
    AllocationResult res;
    res.solver = Solver::MinCrlb;
    res.b_star = BitVector(best.bits, Nb);
    res.report = energy_efficiency(res.b_star, ctx);
    res.objective = -best.key;
    res.evaluations = visited;
    res.counters.objective_evals = visited;
    return res;
}

/// One complexity row: measured counters next to the closed-form predictions.
struct CountRow
{
    std::string solver;
    int N_s = 0;
    int N_b = 0;
    std::uint64_t cardinality = 0;
    OpCounter measured;
    OpCounter predicted;
    std::string note;
};

/// Closed forms: ES gamma (N_s^2 + 2 N_s) complex mults and gamma N_s^2 complex
/// adds; Q-search 3 N_s^2 + 3 N_s N_b real mults and 3 N_s^2 + N_s N_b +
/// mu (N_s - 1) real adds; SA m (mu + 1)(2 N_s + 5) real adds.
inline CountRow count_report(const AllocationResult &res, const SolutionSpace &space, const SaConfig *sa = nullptr)
{
    const int Ns = space.num_streams();
    const int Nb = space.num_bits();
    CountRow row;
    row.solver = solver_name(res.solver);
    row.N_s = Ns;
    row.N_b = Nb;
    row.cardinality = res.solver == Solver::SimulatedAnnealing ? 0 : res.evaluations;
    row.measured = res.counters;
    const std::uint64_t gamma = res.evaluations;
    switch (res.solver) {
    case Solver::Exhaustive:
        row.predicted.complex_mults = gamma * accounting::es_complex_mults_per_eval(Ns);
        row.predicted.complex_adds = gamma * accounting::es_complex_adds_per_eval(Ns);
        row.predicted.real_mults = accounting::l_setup_real_mults(Ns);
        row.predicted.objective_evals = gamma;
        break;
    case Solver::QSearch:
        row.predicted.real_mults = accounting::qtable_real_mults(Ns, Nb);
        row.predicted.real_adds = accounting::qtable_real_adds(Ns, Nb) + gamma * accounting::qsearch_real_adds_per_eval(Ns);
        row.predicted.objective_evals = gamma;
        break;
    case Solver::SimulatedAnnealing: {
        row.predicted.real_mults = accounting::qtable_real_mults(Ns, Nb);
        if (sa) {
            const auto mu = static_cast<std::uint64_t>(sa_levels(res.T0, sa->r));
            const auto m = static_cast<std::uint64_t>(sa->m);
            row.predicted.real_adds = m * (mu + 1) * accounting::sa_real_adds_per_eval(Ns);
            row.predicted.objective_evals = m * mu + 1;
            row.note = "measured adds include l setup and scale calibration";
        }
        break;
    }
    default:
        break;
    }
    return row;
}

} // namespace vrba

#endif // VRBA_ALLOCATION_HPP
