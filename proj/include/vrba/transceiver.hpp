// SPDX-License-Identifier: Apache-2.0
//
// Hybrid combiner design, the quantized receive chain, and the analytic MSE /
// CRLB of the combined and quantized symbols.
//
// Two digital stages appear in the chain:
//   * the hybrid correction W_D^H, which together with the phase-shifter
//     combiner W~_A realises the analog combiner W_A^H = W_D W~_A^H ~ U^H;
//   * the post-ADC equalizer W_E^H = (W_alpha W_A^H U Sigma)^{-1}, which makes
//     the end-to-end gain K = W_E^H W_alpha W_A^H U Sigma the identity.
// The MSE, noise covariance Phi and Monte-Carlo chain are all stated for the
// equalized output y = W_E^H y~.

#ifndef VRBA_TRANSCEIVER_HPP
#define VRBA_TRANSCEIVER_HPP

#include "vrba/channel.hpp"
#include "vrba/quantization.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace vrba {

/// ||W_A^H U - I|| limit under which the diagonal CRLB/MSE forms are used.
inline constexpr double kCombinerIdentityTol = 1e-3;

struct HybridCombiner
{
    CMatrix W_A_H; ///< unconstrained target U^H, N_s x N_r
    CMatrix W_A_tilde; ///< phase-shifter combiner, N_r x N_s, |entries| = 1/sqrt(N_r)
    CMatrix W_D_H; ///< hybrid digital correction, N_s x N_s
    CMatrix W_A_H_eff; ///< W_D W~_A^H, the analog combiner applied to r
    double residual = 0.0; ///< ||U - W~_A W_D^H||_F
    std::vector<double> residual_history;
    int iterations = 0;
    double identity_error = 0.0; ///< ||W_A_H_eff U - I||_F
    std::string warning;

    bool identity_holds() const { return identity_error <= kCombinerIdentityTol; }
};

struct CombinerDesignOptions
{
    int max_iters = 200;
    double tol = 1e-8;
};

namespace detail {

inline CMatrix unit_modulus(const CMatrix &m, double magnitude)
{
    CMatrix out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double a = std::abs(m(i, j));
            out(i, j) = a > 0.0 ? m(i, j) * (magnitude / a) : cplx(magnitude, 0.0);
        }
    }
    return out;
}

} // namespace detail

/// Alternating minimisation of ||U - W~_A W_D^H||_F over constant-modulus W~_A
/// and ||W~_A W_D^H||_F^2 = N_s.
inline HybridCombiner design_combiner(const ChannelRealization &chan, CombinerDesignOptions opts = {})
{
    const Eigen::Index Nr = chan.U.rows();
    const Eigen::Index Ns = chan.U.cols();
    const double magnitude = 1.0 / std::sqrt(static_cast<double>(Nr));

    HybridCombiner hc;
    hc.W_A_H = chan.U.adjoint();
    hc.W_D_H = CMatrix::Identity(Ns, Ns);

    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iters; ++it) {
        CMatrix wa = detail::unit_modulus(chan.U * hc.W_D_H.adjoint(), magnitude);
        // Least squares given the analog stage, then the power normalisation.
        CMatrix wd = (wa.adjoint() * wa).ldlt().solve(wa.adjoint() * chan.U);
        const double power = (wa * wd).norm();
        if (power > 0.0) {
            wd *= std::sqrt(static_cast<double>(Ns)) / power;
        }
        const double res = (chan.U - wa * wd).norm();
        // The normalisation can undo the descent; keep the last accepted iterate.
        if (it > 0 && res > prev) {
            break;
        }
        hc.W_A_tilde = std::move(wa);
        hc.W_D_H = std::move(wd);
        hc.residual = res;
        hc.residual_history.push_back(res);
        hc.iterations = it + 1;
        if (res < 1e-13 * std::sqrt(static_cast<double>(Ns)) || std::abs(prev - res) < opts.tol * prev) {
            break;
        }
        prev = res;
    }

    hc.W_A_H_eff = hc.W_D_H.adjoint() * hc.W_A_tilde.adjoint();
    hc.identity_error = (hc.W_A_H_eff * chan.U - CMatrix::Identity(Ns, Ns)).norm();
    if (!hc.identity_holds()) {
        hc.warning = "combiner identity ||W_A^H U - I|| = " + std::to_string(hc.identity_error)
                     + " exceeds 1e-3; exact matrix CRLB in use";
    }
    return hc;
}

/// Matrices of the linear model y = K x + n_1 for one bit allocation.
struct LinkMatrices
{
    QuantizerModel quant;
    CMatrix W_E_H; ///< post-ADC equalizer
    CMatrix G; ///< W_E^H W_alpha W_A^H, N_s x N_r
    CMatrix K; ///< G U Sigma
    CMatrix Phi; ///< sigma_n^2 G G^H + W_E^H D_q^2 W_E
};

inline LinkMatrices link_matrices(const ChannelRealization &chan, const HybridCombiner &hc, const BitVector &b,
                                  double sigma_n2, const DistortionTable &table = DistortionTable::lloyd_max())
{
    if (static_cast<int>(b.size()) != chan.num_streams) {
        throw DimensionError("link_matrices: bit vector length differs from the stream count");
    }
    LinkMatrices lm;
    lm.quant = build_quantizer_model(b, hc.W_A_H_eff * chan.H, table);
    const CMatrix A = lm.quant.w_alpha.asDiagonal() * hc.W_A_H_eff; // W_alpha W_A^H
    const CMatrix pre = A * chan.U * chan.sigma.asDiagonal();
    Eigen::PartialPivLU<CMatrix> lu(pre);
    if (!(std::abs(lu.determinant()) > 0.0)) {
        throw SingularityError("link_matrices: W_alpha W_A^H U Sigma is singular");
    }
    lm.W_E_H = lu.inverse();
    lm.G = lm.W_E_H * A;
    lm.K = lm.W_E_H * pre;
    lm.Phi = sigma_n2 * lm.G * lm.G.adjoint()
             + lm.W_E_H * lm.quant.dq2.cast<cplx>().asDiagonal() * lm.W_E_H.adjoint();
    return lm;
}

/// Per-stream MSE of the equalized output. Uses sigma_n^2 Sigma^{-2} + W_E^H D_q^2 W_E
/// when the combiner identity holds, otherwise the full
/// p (K - I)(K - I)^H + sigma_n^2 G G^H + W_E^H D_q^2 W_E.
inline RVector analytic_mse(const ChannelRealization &chan, const HybridCombiner &hc, const BitVector &b, double p,
                            double sigma_n2, const DistortionTable &table = DistortionTable::lloyd_max())
{
    const LinkMatrices lm = link_matrices(chan, hc, b, sigma_n2, table);
    const auto Ns = static_cast<Eigen::Index>(chan.num_streams);
    const CMatrix quant = lm.W_E_H * lm.quant.dq2.cast<cplx>().asDiagonal() * lm.W_E_H.adjoint();
    if (hc.identity_holds()) {
        const RVector noise = sigma_n2 * chan.sigma2().cwiseInverse();
        return noise + quant.diagonal().real();
    }
    const CMatrix bias = lm.K - CMatrix::Identity(Ns, Ns);
    const CMatrix full = p * bias * bias.adjoint() + sigma_n2 * lm.G * lm.G.adjoint() + quant;
    return full.diagonal().real();
}

struct CrlbDiagonal
{
    RVector entries; ///< CRLB_i
    RVector sigma2; ///< sigma_i^2
    RVector l; ///< l_i = [I + W_D^H Sigma^2 W_D]_ii
    RVector quant_terms; ///< g(b_i) l_i
    double noise_power = 0.0;
    /// False when the combiner identity failed and entries come from the matrix form.
    bool simplified = true;
};

/// l_i = [I + W_D^H Sigma^2 W_D]_ii for the hybrid correction stage.
inline RVector l_terms(const ChannelRealization &chan, const HybridCombiner &hc)
{
    const CMatrix m = hc.W_D_H * chan.sigma2().cast<cplx>().asDiagonal() * hc.W_D_H.adjoint();
    return (m.diagonal().real().array() + 1.0).matrix();
}

/// CRLB in its matrix form sigma_n^2 Sigma^{-2} + K^{-1} W_E^H D_q^2 W_E K^{-H}.
inline CMatrix crlb_matrix(const ChannelRealization &chan, const HybridCombiner &hc, const BitVector &b,
                           double sigma_n2, const DistortionTable &table = DistortionTable::lloyd_max())
{
    const LinkMatrices lm = link_matrices(chan, hc, b, sigma_n2, table);
    const CMatrix Kinv = lm.K.inverse();
    const CMatrix quant = lm.W_E_H * lm.quant.dq2.cast<cplx>().asDiagonal() * lm.W_E_H.adjoint();
    CMatrix out = Kinv * quant * Kinv.adjoint();
    out.diagonal() += (sigma_n2 * chan.sigma2().cwiseInverse()).cast<cplx>();
    return out;
}

/// Diagonal CRLB, (sigma_n^2 + g(b_i) l_i) / sigma_i^2.
inline CrlbDiagonal crlb(const ChannelRealization &chan, const HybridCombiner &hc, const BitVector &b,
                         double sigma_n2, const DistortionTable &table = DistortionTable::lloyd_max())
{
    if (static_cast<int>(b.size()) != chan.num_streams) {
        throw DimensionError("crlb: bit vector length differs from the stream count");
    }
    if (chan.sigma.size() == 0 || chan.sigma.minCoeff() < 1e-12 * chan.sigma(0)) {
        throw SingularityError("crlb: singular value below rank tolerance");
    }
    CrlbDiagonal out;
    out.noise_power = sigma_n2;
    out.sigma2 = chan.sigma2();
    out.l = l_terms(chan, hc);
    const auto n = static_cast<Eigen::Index>(b.size());
    out.quant_terms.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.quant_terms(i) = gain(b[static_cast<std::size_t>(i)], table) * out.l(i);
    }
    if (hc.identity_holds()) {
        out.entries = ((sigma_n2 + out.quant_terms.array()) / out.sigma2.array()).matrix();
    } else {
        out.simplified = false;
        out.entries = crlb_matrix(chan, hc, b, sigma_n2, table).diagonal().real();
    }
    return out;
}

enum class ChainMode { Aqnm, RealQuantizer };

struct SignalChainSample
{
    CVector x; ///< transmit symbols, E[x x^H] = p I
    CVector x_tilde; ///< precoded, F_opt x
    CVector r; ///< received
    CVector z; ///< analog combined
    CVector y_tilde; ///< quantized
    CVector y; ///< equalized output
    CVector n; ///< receiver noise
    CVector n_q; ///< quantization noise (y~ - W_alpha z in real-quantizer mode)
};

struct SignalChainOptions
{
    ChainMode mode = ChainMode::Aqnm;
    DistortionTable table = DistortionTable::lloyd_max();
    Loading loading;
};

/// Samples per independently seeded block; block k draws from derive_seed(seed, k).
inline constexpr std::size_t kChainBlock = 4096;

/// Streams `num_samples` realisations of the chain to `sink` in sample order.
inline void run_signal_chain(const ChannelRealization &chan, const HybridCombiner &hc, const BitVector &b, double p,
                             double sigma_n2, std::size_t num_samples, std::uint64_t seed,
                             const SignalChainOptions &opts, const std::function<void(const SignalChainSample &)> &sink)
{
    const LinkMatrices lm = link_matrices(chan, hc, b, sigma_n2, opts.table);
    const auto Nr = chan.num_rx();
    const auto Ns = static_cast<Eigen::Index>(chan.num_streams);

    // Rail RMS of z for the real quantizer, from E|z_i|^2.
    const CMatrix WAH_H_F = hc.W_A_H_eff * chan.H * chan.F_opt;
    RVector rail_rms(Ns);
    for (Eigen::Index i = 0; i < Ns; ++i) {
        const double power = p * WAH_H_F.row(i).squaredNorm() + sigma_n2 * hc.W_A_H_eff.row(i).squaredNorm();
        rail_rms(i) = std::sqrt(power / 2.0);
    }

    SignalChainSample s;
    for (std::size_t start = 0; start < num_samples; start += kChainBlock) {
        std::mt19937_64 rng(derive_seed(seed, start / kChainBlock));
        std::normal_distribution<double> unit(0.0, 1.0);
        const std::size_t stop = std::min(num_samples, start + kChainBlock);
        for (std::size_t k = start; k < stop; ++k) {
            s.x.resize(Ns);
            for (Eigen::Index i = 0; i < Ns; ++i) {
                s.x(i) = cn_draw(rng, unit, p);
            }
            s.n.resize(Nr);
            for (Eigen::Index i = 0; i < Nr; ++i) {
                s.n(i) = cn_draw(rng, unit, sigma_n2);
            }
            s.x_tilde = chan.F_opt * s.x;
            s.r = chan.H * s.x_tilde + s.n;
            s.z = hc.W_A_H_eff * s.r;
            if (opts.mode == ChainMode::Aqnm) {
                s.n_q.resize(Ns);
                for (Eigen::Index i = 0; i < Ns; ++i) {
                    s.n_q(i) = cn_draw(rng, unit, lm.quant.dq2(i));
                }
                s.y_tilde = lm.quant.w_alpha.cast<cplx>().cwiseProduct(s.z) + s.n_q;
            } else {
                s.y_tilde = quantize_uniform(s.z, b, rail_rms, opts.loading, opts.table);
                s.n_q = s.y_tilde - lm.quant.w_alpha.cast<cplx>().cwiseProduct(s.z);
            }
            s.y = lm.W_E_H * s.y_tilde;
            sink(s);
        }
    }
}

struct ChainStatistics
{
    RVector mse; ///< E|y_i - x_i|^2
    CMatrix output_cov; ///< E[y y^H]
    CMatrix predicted_cov; ///< p K K^H + Phi
    std::size_t samples = 0;
};

inline ChainStatistics chain_statistics(const ChannelRealization &chan, const HybridCombiner &hc, const BitVector &b,
                                        double p, double sigma_n2, std::size_t num_samples, std::uint64_t seed,
                                        const SignalChainOptions &opts = {})
{
    const auto Ns = static_cast<Eigen::Index>(chan.num_streams);
    ChainStatistics st;
    st.mse = RVector::Zero(Ns);
    st.output_cov = CMatrix::Zero(Ns, Ns);
    run_signal_chain(chan, hc, b, p, sigma_n2, num_samples, seed, opts, [&](const SignalChainSample &s) {
        st.mse += (s.y - s.x).cwiseAbs2();
        st.output_cov.noalias() += s.y * s.y.adjoint();
    });
    const double inv = 1.0 / static_cast<double>(num_samples);
    st.mse *= inv;
    st.output_cov *= inv;
    st.samples = num_samples;
    const LinkMatrices lm = link_matrices(chan, hc, b, sigma_n2, opts.table);
    st.predicted_cov = p * lm.K * lm.K.adjoint() + lm.Phi;
    return st;
}

struct PseudoCovarianceReport
{
    CVector mean; ///< E[n_1]
    CMatrix pseudo_cov; ///< E[n_1 n_1^T]
    CMatrix cov; ///< E[n_1 n_1^H]
    CMatrix phi; ///< analytic Phi
    double max_pseudo_ratio = 0.0; ///< max |E[n_1 n_1^T]_ij| / (4 se_ij)
    double max_pseudo_entry = 0.0;
    double cov_rel_error = 0.0; ///< ||cov - Phi||_F / ||Phi||_F
    bool pseudo_ok = false;
    bool cov_ok = false;
    std::size_t samples = 0;
};

/// Empirical circular-symmetry check of n_1 = G n + W_E^H n_q under the AQNM.
inline PseudoCovarianceReport pseudo_covariance_test(const ChannelRealization &chan, const HybridCombiner &hc,
                                                     const BitVector &b, double sigma_n2, std::size_t num_samples,
                                                     std::uint64_t seed,
                                                     const DistortionTable &table = DistortionTable::lloyd_max())
{
    const LinkMatrices lm = link_matrices(chan, hc, b, sigma_n2, table);
    const auto Nr = chan.num_rx();
    const auto Ns = static_cast<Eigen::Index>(chan.num_streams);

    PseudoCovarianceReport rep;
    rep.mean = CVector::Zero(Ns);
    rep.pseudo_cov = CMatrix::Zero(Ns, Ns);
    rep.cov = CMatrix::Zero(Ns, Ns);
    rep.phi = lm.Phi;

    CVector n(Nr);
    CVector nq(Ns);
    for (std::size_t start = 0; start < num_samples; start += kChainBlock) {
        std::mt19937_64 rng(derive_seed(seed ^ 0x7073u, start / kChainBlock));
        std::normal_distribution<double> unit(0.0, 1.0);
        const std::size_t stop = std::min(num_samples, start + kChainBlock);
        for (std::size_t k = start; k < stop; ++k) {
            for (Eigen::Index i = 0; i < Nr; ++i) {
                n(i) = cn_draw(rng, unit, sigma_n2);
            }
            for (Eigen::Index i = 0; i < Ns; ++i) {
                nq(i) = cn_draw(rng, unit, lm.quant.dq2(i));
            }
            const CVector n1 = lm.G * n + lm.W_E_H * nq;
            rep.mean += n1;
            rep.pseudo_cov.noalias() += n1 * n1.transpose();
            rep.cov.noalias() += n1 * n1.adjoint();
        }
    }
    const double inv = 1.0 / static_cast<double>(num_samples);
    rep.mean *= inv;
    rep.pseudo_cov *= inv;
    rep.cov *= inv;
    rep.samples = num_samples;

    // Standard error of one entry of the sample pseudo-covariance of a CSCG vector.
    const double root_n = std::sqrt(static_cast<double>(num_samples));
    for (Eigen::Index i = 0; i < Ns; ++i) {
        for (Eigen::Index j = 0; j < Ns; ++j) {
            const double var = rep.phi(i, i).real() * rep.phi(j, j).real() + std::norm(rep.phi(i, j));
            const double se = std::sqrt(var) / root_n;
            rep.max_pseudo_ratio = std::max(rep.max_pseudo_ratio, std::abs(rep.pseudo_cov(i, j)) / (4.0 * se));
            rep.max_pseudo_entry = std::max(rep.max_pseudo_entry, std::abs(rep.pseudo_cov(i, j)));
        }
    }
    rep.pseudo_ok = rep.max_pseudo_ratio <= 1.0;
    rep.cov_rel_error = (rep.cov - rep.phi).norm() / rep.phi.norm();
    rep.cov_ok = rep.cov_rel_error <= 0.03;
    return rep;
}

} // namespace vrba

#endif // VRBA_TRANSCEIVER_HPP
