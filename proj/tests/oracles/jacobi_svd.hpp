// One-sided (Hestenes) Jacobi SVD on plain std::vector storage. Slow and
// simple on purpose: it shares no code with the library's decomposition.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

struct Svd
{
    int rows = 0;
    int cols = 0;
    std::vector<double> sigma; // descending, length cols
    std::vector<std::vector<cd>> u; // u[k] = k-th left singular vector (rows)
    std::vector<std::vector<cd>> v; // v[k] = k-th right singular vector (cols)
};

/// `a` is row-major rows x cols with rows >= cols.
inline Svd jacobi_svd(const std::vector<cd> &a, int rows, int cols, int sweeps = 60)
{
    std::vector<std::vector<cd>> col(cols, std::vector<cd>(rows));
    std::vector<std::vector<cd>> vv(cols, std::vector<cd>(cols, 0.0));
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            col[j][i] = a[static_cast<std::size_t>(i) * cols + j];
        }
        vv[j][j] = 1.0;
    }
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < cols - 1; ++p) {
            for (int q = p + 1; q < cols; ++q) {
                double alpha = 0.0, beta = 0.0;
                cd gamma = 0.0;
                for (int i = 0; i < rows; ++i) {
                    alpha += std::norm(col[p][i]);
                    beta += std::norm(col[q][i]);
                    gamma += std::conj(col[p][i]) * col[q][i];
                }
                const double g = std::abs(gamma);
                if (g <= 1e-15 * std::sqrt(alpha * beta) || g == 0.0) {
                    continue;
                }
                off = std::max(off, g / std::sqrt(alpha * beta));
                // Rotate column q so that the inner product is real positive.
                const cd phase = std::conj(gamma) / g;
                for (int i = 0; i < rows; ++i) {
                    col[q][i] *= phase;
                }
                for (int i = 0; i < cols; ++i) {
                    vv[q][i] *= phase;
                }
                const double zeta = (beta - alpha) / (2.0 * g);
                const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < rows; ++i) {
                    const cd xp = col[p][i];
                    const cd xq = col[q][i];
                    col[p][i] = c * xp - s * xq;
                    col[q][i] = s * xp + c * xq;
                }
                for (int i = 0; i < cols; ++i) {
                    const cd xp = vv[p][i];
                    const cd xq = vv[q][i];
                    vv[p][i] = c * xp - s * xq;
                    vv[q][i] = s * xp + c * xq;
                }
            }
        }
        if (off < 1e-15) {
            break;
        }
    }
    std::vector<double> norms(cols);
    for (int j = 0; j < cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < rows; ++i) {
            s += std::norm(col[j][i]);
        }
        norms[j] = std::sqrt(s);
    }
    std::vector<int> order(cols);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) { return norms[x] > norms[y]; });

    Svd out;
    out.rows = rows;
    out.cols = cols;
    for (int k : order) {
        out.sigma.push_back(norms[k]);
        std::vector<cd> uk(rows);
        for (int i = 0; i < rows; ++i) {
            uk[i] = norms[k] > 0 ? col[k][i] / norms[k] : cd(0.0);
        }
        out.u.push_back(uk);
        out.v.push_back(vv[k]);
    }
    return out;
}

} // namespace oracle
