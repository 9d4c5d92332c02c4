#include "tbss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tbss/errors.hpp"

namespace tbss {

std::vector<std::size_t> solve_assignment(const Matrix& weights) {
    if (weights.rows() != weights.cols())
        throw DimensionError("assignment needs a square weight matrix");
    const auto n = static_cast<std::size_t>(weights.rows());
    // Shortest augmenting path with potentials, minimising -weights. 1-based
    // internally; index 0 is the virtual source.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t row = 1; row <= n; ++row) {
        match[0] = row;
        std::size_t col0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[col0] = 1;
            const std::size_t r0 = match[col0];
            double delta = inf;
            std::size_t col1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cost = -weights(static_cast<Eigen::Index>(r0 - 1),
                                             static_cast<Eigen::Index>(j - 1));
                const double cur = cost - u[r0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = col0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
        } while (match[col0] != 0);
        do {
            const std::size_t col1 = way[col0];
            match[col0] = match[col1];
            col0 = col1;
        } while (col0);
    }
    std::vector<std::size_t> out(n);
    for (std::size_t j = 1; j <= n; ++j) out[j - 1] = match[j] - 1;
    return out;
}

MdiResult mdi_of_gain(const Matrix& gain, std::size_t n) {
    if (gain.rows() != gain.cols())
        throw DimensionError("MDI needs a square gain matrix");
    const Eigen::Index p = gain.rows();
    if (p < 2) throw DimensionError("MDI is undefined for p = 1");
    const Vector row_norm_sq = gain.rowwise().squaredNorm();
    for (Eigen::Index i = 0; i < p; ++i)
        if (!(row_norm_sq(i) > 0.0))
            throw DimensionError("gain matrix row " + std::to_string(i + 1) + " is zero");
    Matrix w(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) w(i, j) = gain(i, j) * gain(i, j) / row_norm_sq(i);

    MdiResult out;
    out.gain = gain;
    out.assignment = solve_assignment(w);
    // Residual of each placed row is its off-position energy over its norm;
    // summing that directly (rather than p - sum w) keeps tiny indices exact.
    double residual = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto i = static_cast<Eigen::Index>(out.assignment[static_cast<std::size_t>(j)]);
        double off = 0.0;
        for (Eigen::Index k = 0; k < p; ++k)
            if (k != j) off += gain(i, k) * gain(i, k);
        residual += off / row_norm_sq(i);
    }
    const double dsq = std::clamp(residual / static_cast<double>(p - 1), 0.0, 1.0);
    out.d = std::sqrt(dsq);
    out.transformed = static_cast<double>(n) * static_cast<double>(p - 1) * dsq;
    return out;
}

MdiResult mdi(const Matrix& gamma_hat, const Matrix& omega, std::size_t n) {
    if (gamma_hat.rows() != gamma_hat.cols() || omega.rows() != omega.cols() ||
        gamma_hat.cols() != omega.rows())
        throw DimensionError("MDI needs square matrices of equal size, got " +
                             std::to_string(gamma_hat.rows()) + "x" +
                             std::to_string(gamma_hat.cols()) + " and " +
                             std::to_string(omega.rows()) + "x" + std::to_string(omega.cols()));
    return mdi_of_gain(gamma_hat * omega, n);
}

MdiResult kron_mdi(std::span<const Matrix> gammas, std::span<const Matrix> omegas, std::size_t n) {
    if (gammas.size() != omegas.size() || gammas.empty())
        throw DimensionError("kron_mdi needs one omega per gamma");
    std::size_t p = 1;
    for (std::size_t m = 0; m < gammas.size(); ++m) {
        if (gammas[m].rows() != omegas[m].rows() || gammas[m].cols() != omegas[m].cols())
            throw DimensionError("kron_mdi: mode " + std::to_string(m + 1) + " sizes differ");
        p *= static_cast<std::size_t>(gammas[m].rows());
    }
    if (p > kMaxKronDim)
        throw DimensionError("kron_mdi: product dimension " + std::to_string(p) +
                             " exceeds the cap of " + std::to_string(kMaxKronDim));
    // (G_1 (x) G_2)(O_1 (x) O_2) = G_1 O_1 (x) G_2 O_2, so only the gains are multiplied out.
    std::vector<Matrix> gains;
    for (std::size_t m = 0; m < gammas.size(); ++m) gains.push_back(gammas[m] * omegas[m]);
    return mdi_of_gain(kronecker(gains), n);
}

double kron_transformed_approximation(std::span<const double> per_mode_transformed,
                                      const Dims& dims) {
    if (per_mode_transformed.size() != dims.size())
        throw DimensionError("one transformed index per mode expected");
    const double p = static_cast<double>(dims_product(dims));
    double total = 0.0;
    for (std::size_t m = 0; m < dims.size(); ++m)
        total += p / static_cast<double>(dims[m]) * per_mode_transformed[m];
    return total;
}

double comparable_scale(std::size_t n, std::size_t q1, std::size_t q2, double d1) {
    return static_cast<double>(n) * static_cast<double>(q2) * static_cast<double>(q1 - 1) * d1 * d1;
}

}  // namespace tbss
