#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "tbss/tensor.hpp"

namespace tbss {

/// Third, fourth and sixth-moment summary of a grid of independent,
/// standardized source cells (row-major, last index fastest).
struct MomentProfile {
    Dims dims;
    /// E z^4 per cell.
    std::vector<double> beta;
    /// E z^3 per cell.
    std::vector<double> gamma3;
    /// var(z^3) = E z^6 - (E z^3)^2 per cell.
    std::vector<double> omega;

    std::size_t order() const noexcept { return dims.size(); }
    std::size_t cells() const noexcept { return beta.size(); }

    /// Throws DimensionError on size mismatches and std::invalid_argument on
    /// beta < 1, omega < 0 or non-finite entries.
    void validate() const;
};

/// Builds a profile from per-cell E z^3, E z^4 and E z^6.
MomentProfile profile_from_moments(const Dims& dims, std::vector<double> gamma3,
                                   std::vector<double> beta, std::span<const double> sixth);

/// p_m x rho_m matrices of the beta and omega grids unfolded along `mode`.
struct UnfoldedProfile {
    Matrix beta;
    Matrix omega;
};
UnfoldedProfile unfold_profile(const MomentProfile& profile, std::size_t mode);

/// Asymptotic variances of sqrt(n)(Gamma_hat - I) for one mode.
struct AsvTable {
    std::size_t mode = 1;
    /// asv(k, k') = ASV(gamma_hat_kk').
    Matrix asv;
    /// Sum of the off-diagonal variances: the limiting mean of n (p_m - 1) D_m^2.
    double e = 0.0;

    Eigen::Index dim() const { return asv.rows(); }
};

/// Classical FOBI on the vectorized profile (all cells as one p-vector).
AsvTable fobi_asv(const MomentProfile& profile);

/// Matrix FOBI on a p x q profile; mode 1 is the left rotation, mode 2 the
/// right one (the grid transposed). variant is N in {0, 1}.
AsvTable mfobi_asv(const MomentProfile& profile, int variant, std::size_t mode = 1);

/// Tensor FOBI, mode m: the grid unfolded along m is treated as a
/// p_m x rho_m matrix model. Order-1 profiles fall back to fobi_asv.
AsvTable tfobi_asv(const MomentProfile& profile, std::size_t mode, int variant);

/// ASV table of the left rotation for one p x q grid of beta and omega
/// values; `mode` only labels the table and error messages.
AsvTable matrix_asv(const Matrix& beta, const Matrix& omega, int variant, std::size_t mode = 1);

/// Constant b_N multiplying the off-diagonal covariance term in the
/// linearization of the left MFOBI estimate: 2q + p - 1 (N = 0), qp + 1 (N = 1).
double mfobi_b_constant(std::size_t p, std::size_t q, int variant);

/// The additive constant c_N of the off-diagonal ASV numerator, with
/// `others` = sum of the row means beta_m. over m != k, k'.
double mfobi_c_constant(std::size_t p, std::size_t q, int variant, double others);

enum class Superiority { n1_better, n0_better, equivalent };

std::string_view to_string(Superiority s);

/// Which normalization gives the smaller ASV of gamma_hat_kk' in `mode`
/// (k, k' are 1-based). Modes of length two, or with nothing to the side
/// (rho_m = 1), make the two choices equivalent.
Superiority variant_superiority(const MomentProfile& profile, std::size_t mode, std::size_t k,
                                std::size_t k2);

/// Sum_m (p / p_m) E_m over one table per mode of `dims`. A single table with
/// dims = {p} gives E_1 itself (the FOBI value).
double expected_limit_mdi(std::span<const AsvTable> tables, const Dims& dims);

/// The TFOBI limit for every mode with one variant per mode (empty = all N = 0).
double tfobi_limit(const MomentProfile& profile, std::span<const int> variants = {});

/// E_1 of classical FOBI on the vectorized profile.
double fobi_limit(const MomentProfile& profile);

}  // namespace tbss
