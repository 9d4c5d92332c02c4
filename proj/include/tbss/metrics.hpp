#pragma once

// Minimum distance index
//
//     D(Gamma, Omega) = (p - 1)^{-1/2} inf_{C = PJD} || C Gamma Omega - I ||_F.
//
// With G = Gamma Omega, row j of C G is a signed, scaled copy of some row g of
// G. For a fixed assignment, the optimal scale for row g placed at position j
// leaves a residual 1 - g_j^2 / ||g||^2, so the infimum is
//
//     p - max_sigma sum_j g_{sigma(j), j}^2 / ||g_{sigma(j)}||^2,
//
// a linear assignment problem solved exactly with the Hungarian method.

#include <cstddef>
#include <span>
#include <vector>

#include "tbss/tensor.hpp"

namespace tbss {

struct MdiResult {
    double d = 0.0;
    /// n (p - 1) d^2; zero when no sample size was given.
    double transformed = 0.0;
    Matrix gain;
    /// assignment[j] is the 0-based row of the gain matrix placed at position j.
    std::vector<std::size_t> assignment;
};

/// Largest product dimension kron_mdi accepts.
inline constexpr std::size_t kMaxKronDim = 4096;

MdiResult mdi(const Matrix& gamma_hat, const Matrix& omega, std::size_t n = 0);
MdiResult mdi_of_gain(const Matrix& gain, std::size_t n = 0);

/// MDI of Gamma_1 (x) ... (x) Gamma_r against Omega_1 (x) ... (x) Omega_r,
/// the order matching the last-index-fastest vectorization.
MdiResult kron_mdi(std::span<const Matrix> gammas, std::span<const Matrix> omegas,
                   std::size_t n = 0);

/// Sum_m (p / p_m) t_m: the large-n value of the transformed Kronecker index
/// given the per-mode transformed indices t_m.
double kron_transformed_approximation(std::span<const double> per_mode_transformed,
                                      const Dims& dims);

/// n q2 (q1 - 1) D1^2: puts a transformed index of a q1 x q1 problem on the
/// scale of a q2 x q2 one.
double comparable_scale(std::size_t n, std::size_t q1, std::size_t q2, double d1);

/// Maximum-weight perfect matching on a square matrix. Returns, for each
/// column j, the row matched to it.
std::vector<std::size_t> solve_assignment(const Matrix& weights);

}  // namespace tbss
