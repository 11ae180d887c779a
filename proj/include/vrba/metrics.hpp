// SPDX-License-Identifier: Apache-2.0
//
// Power model, information rate, energy efficiency and the piecewise
// surrogate objective maximised by the bit allocation solvers.

#ifndef VRBA_METRICS_HPP
#define VRBA_METRICS_HPP

#include "vrba/transceiver.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace vrba {

/// Which expression bounds the ADC power: 2 sum c f_s 2^{b_i} (the one used
/// in the total power) or sum c f_s 2^{b_i}.
enum class BudgetForm { Factor2, Eq24 };

struct PowerModel
{
    double c = 1432e-15; ///< J per conversion step
    double f_s = 400e6; ///< Hz
    double P_out = 1.0; ///< W
    double eta_PA = 0.4;
    double P_CIR = 10.0; ///< W
    double P_PS = 50e-3; ///< W
    double P_LNA = 70e-3; ///< W
    double P_VCO = 15e-3; ///< W
    int N_r = 128;
    int N_s = 8;
    double P_ADC_budget = std::numeric_limits<double>::infinity(); ///< W
    BudgetForm budget_form = BudgetForm::Factor2;

    void validate() const
    {
        for (double v : {c, f_s, P_out, P_CIR, P_PS, P_LNA, P_VCO}) {
            if (!(v >= 0.0)) {
                throw DomainError("PowerModel: powers and constants must be >= 0");
            }
        }
        if (!(eta_PA > 0.0 && eta_PA <= 1.0)) {
            throw DomainError("PowerModel: eta_PA must lie in (0, 1]");
        }
        if (N_r < 1 || N_s < 1) {
            throw DomainError("PowerModel: N_r and N_s must be >= 1");
        }
        if (!(P_ADC_budget >= 0.0)) {
            throw DomainError("PowerModel: P_ADC budget must be >= 0");
        }
    }

    double P_T() const { return P_out / eta_PA + P_CIR; }
    double P_R() const { return N_r * N_s * P_PS + N_r * P_LNA + N_s * P_VCO; }
    /// Cost of one conversion step on one rail, c f_s.
    double step_power() const { return c * f_s; }
    double adc_power(const BitVector &b) const { return 2.0 * step_power() * static_cast<double>(b.step_sum()); }

    /// ADC power as counted against the budget under the selected form.
    double budget_power(const BitVector &b) const
    {
        const double k = budget_form == BudgetForm::Factor2 ? 2.0 : 1.0;
        return k * step_power() * static_cast<double>(b.step_sum());
    }

    /// Largest admissible sum of 2^{b_i} under the budget.
    double budget_steps() const
    {
        const double k = budget_form == BudgetForm::Factor2 ? 2.0 : 1.0;
        const double unit = k * step_power();
        if (unit <= 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        return P_ADC_budget / unit * (1.0 + 1e-12);
    }

    bool within_budget(const BitVector &b) const { return static_cast<double>(b.step_sum()) <= budget_steps(); }
};

/// p(b) = P_T + P_R + 2 sum_i c f_s 2^{b_i}.
inline double total_power(const BitVector &b, const PowerModel &pm)
{
    return pm.P_T() + pm.P_R() + pm.adc_power(b);
}

/// q(b_i) = p sigma_i^2 / (sigma_n^2 + g(b_i) l_i).
inline double q_statistic(double p, double sigma_n2, double sigma_i2, double g_l)
{
    const double den = sigma_n2 + g_l;
    if (!(den > 0.0)) {
        throw SingularityError("q_statistic: sigma_n^2 + g(b_i) l_i must be positive");
    }
    return p * sigma_i2 / den;
}

/// Surrogate branch: q for q < 1, 1 - 1/q for q >= 1.
inline double surrogate_term(double q)
{
    return q < 1.0 ? q : 1.0 - 1.0 / q;
}

/// log2(1 + q) ~ q / ln 2 on [0, 1).
inline double lemma1_approx(double q)
{
    if (!(q >= 0.0 && q < 1.0)) {
        throw DomainError("lemma1_approx: q must lie in [0, 1)");
    }
    return q / kLn2;
}

/// b-dependent part (1 - 1/q) / ln 2 of log2(1 + q) for q >= 1.
inline double lemma2_approx(double q)
{
    if (!(q >= 1.0) || !std::isfinite(q)) {
        throw DomainError("lemma2_approx: q must be finite and >= 1");
    }
    return (1.0 - 1.0 / q) / kLn2;
}

/// Bound on |[log2(1+q)]_{q1}^{q2} - [lemma2_approx]_{q1}^{q2}| for 1 <= q1 <= q2.
/// With u = 1 - 1/q, ln(1+q) = u + R(u) + ln(1 + 1/q) where the first-order
/// Taylor remainder R(u) = -ln(1-u) - u lies in [u^2/2, u^2 / (2(1-u))].
inline double lemma2_remainder_bound(double q1, double q2)
{
    if (!(q1 >= 1.0 && q2 >= q1) || !std::isfinite(q2)) {
        throw DomainError("lemma2_remainder_bound: need 1 <= q1 <= q2 < inf");
    }
    const double u1 = 1.0 - 1.0 / q1;
    const double u2 = 1.0 - 1.0 / q2;
    const double r_spread = u2 * u2 * q2 / 2.0 - u1 * u1 / 2.0; // max R(u2) - min R(u1)
    const double offset_spread = std::log1p(1.0 / q1) - std::log1p(1.0 / q2);
    return (r_spread + offset_spread) / kLn2;
}

/// R = N_s log2 p + sum_i log2(1/crlb_i + 1/p).
inline double information_rate(const RVector &crlb_entries, double p)
{
    if (crlb_entries.size() == 0 || !(crlb_entries.minCoeff() > 0.0) || !(p > 0.0)) {
        throw DomainError("information_rate: CRLB entries and p must be positive");
    }
    double r = static_cast<double>(crlb_entries.size()) * std::log2(p);
    for (Eigen::Index i = 0; i < crlb_entries.size(); ++i) {
        r += std::log2(1.0 / crlb_entries(i) + 1.0 / p);
    }
    return r;
}

inline double information_rate(const CrlbDiagonal &c, double p) { return information_rate(c.entries, p); }

/// sum_i log2(1 + q_i), algebraically equal to information_rate.
inline double sum_log_rate(std::span<const double> q)
{
    double r = 0.0;
    for (double v : q) {
        r += std::log2(1.0 + v);
    }
    return r;
}

/// log2 det(p K K^H Phi^{-1} + I) from the link matrices.
inline double information_rate_logdet(const LinkMatrices &lm, double p)
{
    const auto n = lm.K.rows();
    const CMatrix M = p * lm.K * lm.K.adjoint() * lm.Phi.inverse() + CMatrix::Identity(n, n);
    Eigen::PartialPivLU<CMatrix> lu(M);
    // log|det| via the LU diagonal to stay finite for large N_s.
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += std::log2(std::abs(lu.matrixLU()(i, i)));
    }
    return acc;
}

/// (1/p(b)) * sum_i branch(q_i).
inline double surrogate_objective(const BitVector &b, std::span<const double> q, const PowerModel &pm)
{
    if (q.size() != b.size()) {
        throw DimensionError("surrogate_objective: one q value per stream required");
    }
    double m = 0.0;
    for (double v : q) {
        m += surrogate_term(v);
    }
    return m / total_power(b, pm);
}

struct RateEnergyReport
{
    double rate_bits = 0.0; ///< R(b), bits per channel use
    double sum_log_rate = 0.0; ///< sum_i log2(1 + q_i)
    double total_power = 0.0; ///< p(b), W
    double ee = 0.0; ///< R / p(b), bits/Hz/J
    double surrogate = 0.0;
    bool simplified = true;
    std::vector<double> q;
};

/// Per-(channel, combiner, power) quantities that do not depend on b.
struct LinkContext
{
    const ChannelRealization *chan = nullptr;
    const HybridCombiner *combiner = nullptr;
    PowerModel power;
    double p = 1.0; ///< symbol power
    double sigma_n2 = 1.0;
    DistortionTable table = DistortionTable::lloyd_max();

    RVector sigma2;
    RVector l;
    bool simplified = true;

    LinkContext(const ChannelRealization &c, const HybridCombiner &hc, PowerModel pm, double symbol_power,
                double noise_power, DistortionTable t = DistortionTable::lloyd_max())
        : chan(&c), combiner(&hc), power(pm), p(symbol_power), sigma_n2(noise_power), table(std::move(t))
    {
        if (!(p > 0.0) || !(sigma_n2 >= 0.0)) {
            throw DomainError("LinkContext: p must be positive and sigma_n^2 non-negative");
        }
        power.validate();
        sigma2 = c.sigma2();
        l = l_terms(c, hc);
        simplified = hc.identity_holds();
    }

    int num_streams() const { return chan->num_streams; }

    double q(int stream, int bits) const
    {
        return q_statistic(p, sigma_n2, sigma2(stream), gain(bits, table) * l(stream));
    }
};

/// Exact EE of one allocation; the surrogate uses the same q_i.
inline RateEnergyReport energy_efficiency(const BitVector &b, const LinkContext &ctx)
{
    RateEnergyReport rep;
    rep.total_power = total_power(b, ctx.power);
    rep.q.resize(b.size());
    if (ctx.simplified) {
        const CrlbDiagonal c = crlb(*ctx.chan, *ctx.combiner, b, ctx.sigma_n2, ctx.table);
        for (std::size_t i = 0; i < b.size(); ++i) {
            rep.q[i] = ctx.p / c.entries(static_cast<Eigen::Index>(i));
        }
        rep.rate_bits = information_rate(c, ctx.p);
        rep.sum_log_rate = sum_log_rate(rep.q);
    } else {
        rep.simplified = false;
        for (std::size_t i = 0; i < b.size(); ++i) {
            rep.q[i] = ctx.q(static_cast<int>(i), b[i]);
        }
        const LinkMatrices lm = link_matrices(*ctx.chan, *ctx.combiner, b, ctx.sigma_n2, ctx.table);
        rep.rate_bits = information_rate_logdet(lm, ctx.p);
        rep.sum_log_rate = sum_log_rate(rep.q);
    }
    rep.ee = rep.rate_bits / rep.total_power;
    rep.surrogate = surrogate_objective(b, rep.q, ctx.power);
    return rep;
}

/// Q(b, i) table of surrogate terms, rows b = 1..N_b, columns streams.
class QTable
{
public:
    QTable() = default;

    QTable(const LinkContext &ctx, int num_bits) : num_bits_(num_bits)
    {
        if (num_bits < 1) {
            throw DomainError("QTable: N_b must be >= 1");
        }
        const int Ns = ctx.num_streams();
        values_.resize(num_bits, Ns);
        q_.resize(num_bits, Ns);
        for (int i = 0; i < Ns; ++i) {
            for (int b = 1; b <= num_bits; ++b) {
                const double q = ctx.q(i, b);
                q_(b - 1, i) = q;
                values_(b - 1, i) = surrogate_term(q);
            }
        }
    }

    int num_bits() const noexcept { return num_bits_; }
    int num_streams() const noexcept { return static_cast<int>(values_.cols()); }
    double operator()(int bits, int stream) const { return values_(bits - 1, stream); }
    double q(int bits, int stream) const { return q_(bits - 1, stream); }
    const RMatrix &values() const noexcept { return values_; }

    double sum(const BitVector &b) const
    {
        double m = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            m += values_(b[i] - 1, static_cast<Eigen::Index>(i));
        }
        return m;
    }

private:
    int num_bits_ = 0;
    RMatrix values_;
    RMatrix q_;
};

} // namespace vrba

#endif // VRBA_METRICS_HPP
