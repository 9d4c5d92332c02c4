#pragma once

#include <limits>

#include "tbss/tensor.hpp"

namespace tbss {

/// Eigenvalues in descending order with matching eigenvector columns. Each
/// column's largest-magnitude entry is positive (first one wins on exact ties).
struct EigenSystem {
    Vector values;
    Matrix vectors;

    Eigen::Index dim() const { return values.size(); }
};

/// Smallest eigenvalue must exceed this fraction of the largest one.
inline constexpr double kPositiveDefiniteRatio = 1e-10;
/// Consecutive B-matrix eigenvalue gaps below this fraction of the spectral range are ties.
inline constexpr double kTieRatio = 1e-6;

/// Symmetric eigendecomposition. The input is symmetrised after checking that
/// it is symmetric to 1e-9 (relative to its largest entry).
EigenSystem sym_eigen(const Matrix& s);

/// The symmetric inverse square root U D^{-1/2} U^T of an SPD matrix.
/// Throws SingularCovarianceError when the PD threshold is not met.
Matrix sym_inv_sqrt(const Matrix& s);

/// Smallest gap between consecutive (sorted) eigenvalues; +inf for fewer than two.
double tie_gap(const Vector& eigenvalues);

/// True when tie_gap falls below kTieRatio times the spectral range.
bool has_near_tie(const Vector& eigenvalues, double ratio = kTieRatio);

}  // namespace tbss
