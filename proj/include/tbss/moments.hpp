#pragma once

#include <cstddef>
#include <vector>

#include "tbss/tensor.hpp"

namespace tbss {

/// How the per-mode whitening matrices are chosen.
enum class Whitening {
    /// Every mode uses the symmetric inverse square root of its covariance
    /// conditional on the other modes' whiteners; iterated to the fixed point
    /// where all m-mode covariances of the standardized sample are identity.
    joint,
    /// One pass: G_m = cov_m(X)^{-1/2} computed on the raw centered sample.
    single_pass,
};

/// m-mode covariance (1 / (n rho_m)) sum_i X_i (.)_{-m} X_i of a centered sample.
/// Needs n >= 2.
Matrix m_mode_covariance(const TensorSample& centered, std::size_t mode);

/// Centered sample multiplied along every mode by its whitening matrix.
/// Only `standardize` creates one, so the FOBI functionals below can never be
/// evaluated on raw data.
class StandardizedSample {
public:
    const TensorSample& data() const noexcept { return data_; }
    const DataTensor& mean() const noexcept { return mean_; }
    /// G_m, symmetric, one per mode.
    const std::vector<Matrix>& whiteners() const noexcept { return whiteners_; }
    /// The covariance each G_m inverts: G_m C_m G_m = I.
    const std::vector<Matrix>& covariances() const noexcept { return covariances_; }
    Whitening scheme() const noexcept { return scheme_; }
    std::size_t sweeps() const noexcept { return sweeps_; }

private:
    friend StandardizedSample standardize(const TensorSample&, Whitening);

    StandardizedSample(TensorSample data, DataTensor mean)
        : data_(std::move(data)), mean_(std::move(mean)) {}

    TensorSample data_;
    DataTensor mean_;
    std::vector<Matrix> whiteners_;
    std::vector<Matrix> covariances_;
    Whitening scheme_ = Whitening::joint;
    std::size_t sweeps_ = 0;
};

/// Centers and whitens every mode. Throws SingularCovarianceError on a
/// rank-deficient mode and ConvergenceError if the joint fixed point is not
/// reached.
StandardizedSample standardize(const TensorSample& sample, Whitening scheme = Whitening::joint);

/// (1 / (n rho_m)) sum_i (X_i (.)_{-m} X_i)^2.
Matrix m_mode_fobi0(const StandardizedSample& sample, std::size_t mode);
/// (1 / (n rho_m)) sum_i ||X_i||_F^2 (X_i (.)_{-m} X_i).
Matrix m_mode_fobi1(const StandardizedSample& sample, std::size_t mode);
/// Dispatches on variant (0 or 1).
Matrix m_mode_fobi(const StandardizedSample& sample, std::size_t mode, int variant);

struct MomentSet {
    std::size_t mode = 1;
    Matrix cov;
    Matrix b0;
    Matrix b1;
    std::size_t n = 0;
    std::size_t rho = 1;
};

/// Covariance and both FOBI matrices of one mode, from a single pass over the data.
MomentSet moment_set(const StandardizedSample& sample, std::size_t mode);

}  // namespace tbss
