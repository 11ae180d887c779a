// SPDX-License-Identifier: Apache-2.0
//
// Additive quantization noise model (AQNM) of a variable-resolution ADC bank
// and a uniform mid-rise quantizer for Monte-Carlo cross-checks.

#ifndef VRBA_QUANTIZATION_HPP
#define VRBA_QUANTIZATION_HPP

#include "vrba/core.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace vrba {

/// Normalised MSE f(b) of a b-bit quantizer driven by a unit-variance Gaussian.
/// Tabulated for small b; the high-resolution form (pi*sqrt(3)/2) 2^{-2b}
/// applies above the table.
class DistortionTable
{
public:
    static constexpr int kDefaultMaxBits = 16;

    /// Entries are (b, f(b)) pairs covering b = 1..K contiguously.
    explicit DistortionTable(std::vector<std::pair<int, double>> entries, int max_bits = kDefaultMaxBits)
        : max_bits_(max_bits)
    {
        std::sort(entries.begin(), entries.end());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].first != static_cast<int>(i) + 1) {
                throw DomainError("DistortionTable: entries must cover b = 1..K without gaps");
            }
            values_.push_back(entries[i].second);
        }
        if (values_.empty()) {
            throw DomainError("DistortionTable: at least one entry is required");
        }
        if (max_bits_ < static_cast<int>(values_.size())) {
            max_bits_ = static_cast<int>(values_.size());
        }
        double prev = 1.0;
        for (int b = 1; b <= max_bits_; ++b) {
            const double f = (*this)(b);
            if (!(f > 0.0 && f < 1.0)) {
                throw DomainError("DistortionTable: f(b) must lie in (0, 1)");
            }
            if (!(f < prev)) {
                throw DomainError("DistortionTable: f(b) must be strictly decreasing in b");
            }
            prev = f;
        }
    }

    /// Optimal (Lloyd-Max) Gaussian quantizer distortion, the usual AQNM constants.
    static DistortionTable lloyd_max()
    {
        return DistortionTable({{1, 0.3634}, {2, 0.1175}, {3, 0.03454}, {4, 0.009497}, {5, 0.002499}});
    }

    /// MSE-optimal *uniform* quantizer distortion for a Gaussian input; pairs
    /// with quantize_uniform() under optimal loading.
    static DistortionTable uniform_gaussian()
    {
        return DistortionTable({{1, 0.3633802},
                                {2, 0.1188461},
                                {3, 0.03743966},
                                {4, 0.01154288},
                                {5, 0.003495211},
                                {6, 0.001040045},
                                {7, 3.043328e-4},
                                {8, 8.768619e-5}});
    }

    static double high_resolution(int b)
    {
        return std::numbers::pi * std::sqrt(3.0) / 2.0 * std::exp2(-2.0 * b);
    }

    int max_bits() const noexcept { return max_bits_; }
    int tabulated() const noexcept { return static_cast<int>(values_.size()); }
    const std::vector<double> &values() const noexcept { return values_; }

    double operator()(int b) const
    {
        if (b < 1 || b > max_bits_) {
            throw DomainError("distortion_factor: b = " + std::to_string(b) + " outside [1, "
                              + std::to_string(max_bits_) + "]");
        }
        if (b <= tabulated()) {
            return values_[b - 1];
        }
        return high_resolution(b);
    }

private:
    std::vector<double> values_;
    int max_bits_;
};

inline double distortion_factor(int b, const DistortionTable &table = DistortionTable::lloyd_max())
{
    return table(b);
}

/// g(b) = f(b) / (1 - f(b)).
inline double gain(int b, const DistortionTable &table = DistortionTable::lloyd_max())
{
    const double f = table(b);
    return f / (1.0 - f);
}

/// Diagonal AQNM matrices for a bit allocation. Stored as vectors of the
/// diagonal entries.
struct QuantizerModel
{
    RVector w_alpha; ///< 1 - f(b_i)
    RVector w_one_minus_alpha; ///< f(b_i)
    RVector dq2; ///< quantization-noise variances

    RMatrix W_alpha() const { return w_alpha.asDiagonal(); }
    RMatrix W_one_minus_alpha() const { return w_one_minus_alpha.asDiagonal(); }
    RMatrix Dq2() const { return dq2.asDiagonal(); }
};

/// D_q^2 = W_alpha W_{1-alpha} diag[A A^H + I] with A = W_A^H H (N_s x N_t).
inline QuantizerModel build_quantizer_model(const BitVector &b, const CMatrix &WAH_H,
                                            const DistortionTable &table = DistortionTable::lloyd_max())
{
    if (static_cast<Eigen::Index>(b.size()) != WAH_H.rows()) {
        throw DimensionError("build_quantizer_model: bit vector length differs from combiner rows");
    }
    const auto n = static_cast<Eigen::Index>(b.size());
    QuantizerModel m;
    m.w_alpha.resize(n);
    m.w_one_minus_alpha.resize(n);
    m.dq2.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double f = table(b[static_cast<std::size_t>(i)]);
        m.w_alpha(i) = 1.0 - f;
        m.w_one_minus_alpha(i) = f;
        m.dq2(i) = (1.0 - f) * f * (WAH_H.row(i).squaredNorm() + 1.0);
    }
    return m;
}

/// Full-scale / per-rail RMS of the MSE-optimal uniform quantizer for a
/// Gaussian input (2^{b-1} times the optimal step).
inline double optimal_loading(int b)
{
    static constexpr double kLoading[] = {1.5957691, 1.9913734, 2.3440778, 2.6816049,
                                          3.0102206, 3.3300163, 3.6395310, 3.9375856};
    if (b < 1) {
        throw DomainError("optimal_loading: b must be >= 1");
    }
    if (b <= 8) {
        return kLoading[b - 1];
    }
    // Linear extension with the last tabulated increment.
    return kLoading[7] + 0.29 * (b - 8);
}

/// Full-scale policy of the uniform quantizer: a fixed multiple of the rail
/// RMS, or the per-resolution MSE-optimal value when unset.
struct Loading
{
    std::optional<double> factor;

    double for_bits(int b) const
    {
        if (factor) {
            return *factor;
        }
        return optimal_loading(b);
    }
};

namespace detail {

inline double quantize_rail(double x, int bits, double full_scale)
{
    const double levels = std::exp2(bits);
    const double step = 2.0 * full_scale / levels;
    double idx = std::floor(x / step);
    idx = std::clamp(idx, -levels / 2.0, levels / 2.0 - 1.0);
    return (idx + 0.5) * step;
}

inline void check_bits(const BitVector &b, const DistortionTable &table)
{
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b[i] < 1 || b[i] > table.max_bits()) {
            throw DomainError("quantize_uniform: b_i outside the distortion table");
        }
    }
}

} // namespace detail

/// Quantizes each I/Q rail of entry i with 2^{b_i} uniform mid-rise levels.
/// Full scale is loading * rail_rms(i).
inline CVector quantize_uniform(const CVector &z, const BitVector &b, const RVector &rail_rms,
                                Loading loading = {},
                                const DistortionTable &table = DistortionTable::lloyd_max())
{
    if (static_cast<Eigen::Index>(b.size()) != z.size() || rail_rms.size() != z.size()) {
        throw DimensionError("quantize_uniform: size mismatch");
    }
    detail::check_bits(b, table);
    if (loading.factor && !(*loading.factor > 0.0)) {
        throw DomainError("quantize_uniform: loading must be positive");
    }
    CVector out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const int bits = b[static_cast<std::size_t>(i)];
        const double fs = loading.for_bits(bits) * rail_rms(i);
        out(i) = {detail::quantize_rail(z(i).real(), bits, fs), detail::quantize_rail(z(i).imag(), bits, fs)};
    }
    return out;
}

/// Block form: row i of `z` holds the samples of RF path i; the rail RMS is
/// measured per row over the block.
inline CMatrix quantize_uniform(const CMatrix &z, const BitVector &b, Loading loading = {},
                                const DistortionTable &table = DistortionTable::lloyd_max())
{
    if (static_cast<Eigen::Index>(b.size()) != z.rows() || z.cols() == 0) {
        throw DimensionError("quantize_uniform: block must have one row per bit entry");
    }
    RVector rms(z.rows());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        rms(i) = std::sqrt(z.row(i).squaredNorm() / (2.0 * static_cast<double>(z.cols())));
    }
    CMatrix out(z.rows(), z.cols());
    for (Eigen::Index s = 0; s < z.cols(); ++s) {
        out.col(s) = quantize_uniform(CVector(z.col(s)), b, rms, loading, table);
    }
    return out;
}

} // namespace vrba

#endif // VRBA_QUANTIZATION_HPP
