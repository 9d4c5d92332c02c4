#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tbss/moments.hpp"
#include "tbss/tensor.hpp"

namespace tbss {

/// Per-mode unmixing matrices Gamma_m = W_m^T S_m^{-1/2} and everything needed
/// to map new observations onto the recovered sources.
struct UnmixingModel {
    Dims dims;
    std::size_t n = 0;
    std::vector<Matrix> gammas;
    /// Descending B-matrix eigenvalues per mode (estimates of a_N + mean kurtosis of each face).
    std::vector<Vector> eigenvalues;
    /// The covariance each mode's whitener inverts; gammas[m] * covariances[m] * gammas[m]^T = I.
    std::vector<Matrix> covariances;
    DataTensor mean{Dims{1}};
    std::vector<int> variants;
    /// Recovered sources are (X - mean) x_1 Gamma_1 ... x_r Gamma_r times this factor.
    double scale = 1.0;
    Whitening whitening = Whitening::joint;
    std::vector<std::string> warnings;

    std::size_t order() const noexcept { return dims.size(); }
};

/// TFOBI on a sample of order-r tensors. `variants` holds N in {0, 1} per mode;
/// empty means N = 0 everywhere, a single entry applies to every mode.
UnmixingModel tfobi_fit(const TensorSample& sample, std::span<const int> variants = {},
                        Whitening whitening = Whitening::joint);

/// MFOBI: TFOBI on matrix data, left = mode 1, right = mode 2.
UnmixingModel mfobi_fit(const TensorSample& sample, int left_variant = 0, int right_variant = 0,
                        Whitening whitening = Whitening::joint);

/// Classical FOBI on the vectorized observations.
UnmixingModel fobi_fit(const TensorSample& sample);

/// Rotation step on an already standardized sample, using precomputed
/// B-matrices (one per mode). Lets several variant combinations share the
/// whitening and moment passes.
UnmixingModel fit_from_standardized(const StandardizedSample& standardized,
                                    std::span<const Matrix> b_matrices,
                                    std::span<const int> variants);

/// (X_i - mean) x_1 Gamma_1 ... x_r Gamma_r, times model.scale.
TensorSample recover_sources(const UnmixingModel& model, const TensorSample& sample);

/// Per-cell sample kurtosis m4 / m2^2 (moments about the cell mean). Needs n >= 4.
DataTensor component_kurtosis(const TensorSample& sources);

/// 1-based multi-indices of the k_low lowest (ascending) then the k_high
/// highest (descending) kurtosis cells.
std::vector<Dims> select_extreme_components(const DataTensor& kurtosis, std::size_t k_low,
                                            std::size_t k_high);

}  // namespace tbss
