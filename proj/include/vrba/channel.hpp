// SPDX-License-Identifier: Apache-2.0
//
// Line-of-sight clustered mmWave channel for uniform linear arrays and its
// truncated SVD.

#ifndef VRBA_CHANNEL_HPP
#define VRBA_CHANNEL_HPP

#include "vrba/core.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace vrba {

struct ArrayConfig
{
    int num_tx_antennas = 64;
    int num_rx_antennas = 128;
    double element_spacing = 0.5; ///< wavelengths
    double carrier_frequency = 28e9; ///< Hz
    double tx_rx_separation = 100.0; ///< metres
    int num_streams = 8; ///< N_s = N_rs

    void validate() const
    {
        if (num_tx_antennas < 1 || num_rx_antennas < 1) {
            throw DomainError("ArrayConfig: antenna counts must be >= 1");
        }
        if (!(element_spacing > 0.0) || !(carrier_frequency > 0.0)) {
            throw DomainError("ArrayConfig: element spacing and carrier frequency must be positive");
        }
        if (!(tx_rx_separation > 0.0)) {
            throw DomainError("ArrayConfig: tx/rx separation must be positive");
        }
        if (num_streams < 1) {
            throw DomainError("ArrayConfig: num_streams must be >= 1");
        }
    }
};

enum class GainModel { Rayleigh, UnitModulus };

struct ScattererScenario
{
    int num_dominant_scatterers = 2;
    GainModel gain_model = GainModel::Rayleigh;
    /// Mean power of the second dominant path relative to the LOS path.
    double secondary_power_db = -10.0;
    /// Weak diffuse paths that fill the remaining spatial streams.
    int num_diffuse_paths = 16;
    double diffuse_power_db = -20.0; ///< per path, relative to LOS
    /// Optional fixed departure/arrival angles (radians) of the dominant paths.
    std::vector<double> dominant_aod;
    std::vector<double> dominant_aoa;
    double pathloss_exponent = 2.0;
    /// Snap path angles to the arrays' orthogonal DFT grids.
    bool grid_aligned = true;

    void validate() const
    {
        if (num_dominant_scatterers != 1 && num_dominant_scatterers != 2) {
            throw DomainError("ScattererScenario: num_dominant_scatterers must be 1 or 2");
        }
        if (num_diffuse_paths < 0) {
            throw DomainError("ScattererScenario: num_diffuse_paths must be >= 0");
        }
        auto check_angles = [this](const std::vector<double> &angles) {
            if (!angles.empty() && static_cast<int>(angles.size()) != num_dominant_scatterers) {
                throw DomainError("ScattererScenario: one angle per dominant scatterer required");
            }
            for (double a : angles) {
                if (a < -std::numbers::pi / 2 || a > std::numbers::pi / 2) {
                    throw DomainError("ScattererScenario: angles must lie in [-pi/2, pi/2]");
                }
            }
        };
        check_angles(dominant_aod);
        check_angles(dominant_aoa);
        if (!(pathloss_exponent > 0.0)) {
            throw DomainError("ScattererScenario: path-loss exponent must be positive");
        }
    }
};

struct ChannelRealization
{
    CMatrix H; ///< N_r x N_t
    CMatrix U; ///< N_r x N_s
    RVector sigma; ///< N_s singular values, descending
    CMatrix F_opt; ///< N_t x N_s
    int num_streams = 0;
    std::uint64_t seed = 0;
    double pathloss_db = 0.0; ///< informational; H is normalised

    int num_rx() const { return static_cast<int>(H.rows()); }
    int num_tx() const { return static_cast<int>(H.cols()); }
    RVector sigma2() const { return sigma.array().square(); }
    RMatrix Sigma() const { return sigma.asDiagonal(); }
};

/// ULA response exp(j 2 pi d n sin(theta)), n = 0..N-1, with |a|^2 = N.
inline CVector steering_vector(int num_elements, double spacing, double angle)
{
    CVector a(num_elements);
    const double phase = 2.0 * std::numbers::pi * spacing * std::sin(angle);
    for (int n = 0; n < num_elements; ++n) {
        a(n) = std::polar(1.0, phase * n);
    }
    return a;
}

/// Free-space reference at 1 m plus exponent-scaled distance loss, in dB.
inline double pathloss_db(const ArrayConfig &cfg, double exponent)
{
    constexpr double c0 = 299792458.0;
    const double fspl_1m = 20.0 * std::log10(4.0 * std::numbers::pi * cfg.carrier_frequency / c0);
    return fspl_1m + 10.0 * exponent * std::log10(cfg.tx_rx_separation);
}

/// Truncated SVD H ~ U diag(sigma) F_opt^H keeping num_streams components.
inline ChannelRealization svd_factors(const CMatrix &H, int num_streams)
{
    if (num_streams < 1) {
        throw DomainError("svd_factors: num_streams must be >= 1");
    }
    if (num_streams > std::min(H.rows(), H.cols())) {
        throw DimensionError("svd_factors: num_streams exceeds min(N_r, N_t)");
    }
    Eigen::BDCSVD<CMatrix> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector &s = svd.singularValues();
    if (!(s(0) > 0.0) || s(num_streams - 1) < 1e-12 * s(0)) {
        throw RankError("svd_factors: singular value " + std::to_string(num_streams)
                        + " is below 1e-12 * sigma_1; channel rank is too low for the stream count");
    }

    ChannelRealization out;
    out.H = H;
    out.num_streams = num_streams;
    out.sigma = s.head(num_streams);
    out.U = svd.matrixU().leftCols(num_streams);
    out.F_opt = svd.matrixV().leftCols(num_streams);

    // Fix the per-column phase: largest-magnitude entry of each F_opt column real positive.
    for (int k = 0; k < num_streams; ++k) {
        Eigen::Index idx = 0;
        out.F_opt.col(k).cwiseAbs().maxCoeff(&idx);
        const cplx ref = out.F_opt(idx, k);
        if (std::abs(ref) > 0.0) {
            const cplx rot = std::conj(ref) / std::abs(ref);
            out.F_opt.col(k) *= rot;
            out.U.col(k) *= rot;
        }
    }
    return out;
}

namespace detail {

/// Index set {k : |k| <= N d, k in [-N/2, N/2)} of orthogonal beams sin(theta) = k / (N d).
inline std::vector<int> dft_grid(int num_elements, double spacing)
{
    std::vector<int> grid;
    const int lo = -num_elements / 2;
    const int hi = num_elements - num_elements / 2;
    for (int k = lo; k < hi; ++k) {
        if (std::abs(k) <= num_elements * spacing + 1e-12) {
            grid.push_back(k);
        }
    }
    return grid;
}

inline double grid_angle(int k, int num_elements, double spacing)
{
    return std::asin(std::clamp(k / (num_elements * spacing), -1.0, 1.0));
}

/// Picks a free grid index closest to the requested angle.
inline int snap_to_grid(double angle, int num_elements, double spacing, std::set<int> &used)
{
    const std::vector<int> grid = dft_grid(num_elements, spacing);
    const double target = std::sin(angle) * num_elements * spacing;
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int k : grid) {
        const double d = std::abs(k - target);
        if (!used.count(k) && d < best_dist) {
            best = k;
            best_dist = d;
        }
    }
    if (!std::isfinite(best_dist)) {
        throw DimensionError("generate_channel: more paths than orthogonal beams in the array");
    }
    used.insert(best);
    return best;
}

} // namespace detail

/// Seeded clustered LOS channel: sum of rank-one ULA steering-vector outer
/// products. Expected Frobenius power is N_t * N_r.
inline ChannelRealization generate_channel(const ArrayConfig &cfg, const ScattererScenario &scenario,
                                           std::uint64_t seed)
{
    cfg.validate();
    scenario.validate();
    const int Nt = cfg.num_tx_antennas;
    const int Nr = cfg.num_rx_antennas;
    if (cfg.num_streams > std::min(Nt, Nr)) {
        throw DimensionError("generate_channel: num_streams exceeds min(N_t, N_r)");
    }
    const int num_paths = scenario.num_dominant_scatterers + scenario.num_diffuse_paths;
    if (cfg.num_streams > num_paths) {
        throw DimensionError("generate_channel: num_streams exceeds the number of propagation paths");
    }

    std::vector<double> power(num_paths);
    power[0] = 1.0;
    if (scenario.num_dominant_scatterers == 2) {
        power[1] = std::pow(10.0, scenario.secondary_power_db / 10.0);
    }
    for (int k = scenario.num_dominant_scatterers; k < num_paths; ++k) {
        power[k] = std::pow(10.0, scenario.diffuse_power_db / 10.0);
    }
    double total = 0.0;
    for (double p : power) {
        total += p;
    }
    for (double &p : power) {
        p /= total;
    }

    std::mt19937_64 rng(derive_seed(seed, 0x636861));
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> uangle(-std::numbers::pi / 2, std::numbers::pi / 2);
    std::uniform_real_distribution<double> uphase(0.0, 2.0 * std::numbers::pi);

    std::set<int> used_tx;
    std::set<int> used_rx;
    CMatrix H = CMatrix::Zero(Nr, Nt);
    for (int k = 0; k < num_paths; ++k) {
        const bool dominant = k < scenario.num_dominant_scatterers;
        double aod = (dominant && !scenario.dominant_aod.empty()) ? scenario.dominant_aod[k] : uangle(rng);
        double aoa = (dominant && !scenario.dominant_aoa.empty()) ? scenario.dominant_aoa[k] : uangle(rng);
        if (scenario.grid_aligned) {
            aod = detail::grid_angle(detail::snap_to_grid(aod, Nt, cfg.element_spacing, used_tx), Nt,
                                     cfg.element_spacing);
            aoa = detail::grid_angle(detail::snap_to_grid(aoa, Nr, cfg.element_spacing, used_rx), Nr,
                                     cfg.element_spacing);
        }
        cplx gain;
        if (scenario.gain_model == GainModel::Rayleigh) {
            gain = cn_draw(rng, unit, power[k]);
        } else {
            gain = std::polar(std::sqrt(power[k]), uphase(rng));
        }
        H += gain * steering_vector(Nr, cfg.element_spacing, aoa)
                        * steering_vector(Nt, cfg.element_spacing, aod).adjoint();
    }

    ChannelRealization out = svd_factors(H, cfg.num_streams);
    out.seed = seed;
    out.pathloss_db = pathloss_db(cfg, scenario.pathloss_exponent);
    return out;
}

} // namespace vrba

#endif // VRBA_CHANNEL_HPP
