// SPDX-License-Identifier: Apache-2.0
//
// Common aliases, error types, bit vectors and seeding helpers shared by the
// variable-resolution ADC bit allocation library.

#ifndef VRBA_CORE_HPP
#define VRBA_CORE_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vrba {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

class Error : public std::runtime_error
{
public:
    Error(std::string kind, const std::string &what)
        : std::runtime_error(what), kind_(std::move(kind))
    {
    }

    const std::string &kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Argument outside the domain of a table or formula.
class DomainError : public Error
{
public:
    explicit DomainError(const std::string &what) : Error("domain", what) {}
};

class DimensionError : public Error
{
public:
    explicit DimensionError(const std::string &what) : Error("dimension", what) {}

protected:
    DimensionError(std::string kind, const std::string &what) : Error(std::move(kind), what) {}
};

/// Requested stream count exceeds the numerical rank of a channel.
class RankError : public DimensionError
{
public:
    explicit RankError(const std::string &what) : DimensionError("rank", what) {}
};

class SingularityError : public Error
{
public:
    explicit SingularityError(const std::string &what) : Error("singularity", what) {}
};

/// No bit vector satisfies the ADC power budget.
class InfeasibleError : public Error
{
public:
    explicit InfeasibleError(const std::string &what) : Error("infeasible", what) {}
};

class ConfigError : public Error
{
public:
    ConfigError(std::string field, const std::string &what)
        : Error("config", what), field_(std::move(field))
    {
    }

    const std::string &field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Per-path ADC resolutions b_i in [1, max_bits] (bits per I/Q rail).
class BitVector
{
public:
    BitVector() = default;

    BitVector(std::vector<int> bits, int max_bits) : bits_(std::move(bits)), max_bits_(max_bits)
    {
        if (max_bits_ < 1) {
            throw DomainError("BitVector: max_bits must be >= 1");
        }
        for (int b : bits_) {
            if (b < 1 || b > max_bits_) {
                std::ostringstream os;
                os << "BitVector: entry " << b << " outside [1, " << max_bits_ << "]";
                throw DomainError(os.str());
            }
        }
    }

    static BitVector uniform(std::size_t size, int bits, int max_bits)
    {
        return BitVector(std::vector<int>(size, bits), max_bits);
    }

    std::size_t size() const noexcept { return bits_.size(); }
    int max_bits() const noexcept { return max_bits_; }
    int operator[](std::size_t i) const { return bits_[i]; }
    const std::vector<int> &bits() const noexcept { return bits_; }

    /// Sum of 2^{b_i}, the ADC conversion-step count in units of c*f_s.
    std::int64_t step_sum() const noexcept
    {
        std::int64_t s = 0;
        for (int b : bits_) {
            s += std::int64_t{1} << b;
        }
        return s;
    }

    std::string to_string() const
    {
        std::string out = "[";
        for (std::size_t i = 0; i < bits_.size(); ++i) {
            if (i) {
                out += ' ';
            }
            out += std::to_string(bits_[i]);
        }
        return out + "]";
    }

    friend bool operator==(const BitVector &a, const BitVector &b)
    {
        return a.bits_ == b.bits_ && a.max_bits_ == b.max_bits_;
    }

    friend bool operator<(const BitVector &a, const BitVector &b) { return a.bits_ < b.bits_; }

private:
    std::vector<int> bits_;
    int max_bits_ = 1;
};

inline constexpr double kLn2 = std::numbers::ln2;

/// splitmix64 finaliser; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Circularly-symmetric complex Gaussian draw with E|z|^2 = variance.
template <typename Rng>
cplx cn_draw(Rng &rng, std::normal_distribution<double> &unit, double variance)
{
    const double s = std::sqrt(variance / 2.0);
    const double re = unit(rng);
    const double im = unit(rng);
    return {s * re, s * im};
}

inline double max_abs(const CMatrix &m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

} // namespace vrba

#endif // VRBA_CORE_HPP
