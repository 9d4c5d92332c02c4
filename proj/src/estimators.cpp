#include "tbss/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tbss/errors.hpp"
#include "tbss/spectra.hpp"

namespace tbss {

namespace {

std::vector<int> expand_variants(std::span<const int> variants, std::size_t order) {
    std::vector<int> out;
    if (variants.empty())
        out.assign(order, 0);
    else if (variants.size() == 1)
        out.assign(order, variants[0]);
    else if (variants.size() == order)
        out.assign(variants.begin(), variants.end());
    else
        throw DimensionError("expected " + std::to_string(order) + " variant flags, got " +
                             std::to_string(variants.size()));
    for (int v : out)
        if (v != 0 && v != 1)
            throw std::invalid_argument("FOBI variant must be 0 or 1, got " + std::to_string(v));
    return out;
}

std::vector<std::size_t> unravel(std::size_t offset, const Dims& dims) {
    std::vector<std::size_t> idx(dims.size());
    for (std::size_t m = dims.size(); m-- > 0;) {
        idx[m] = offset % dims[m] + 1;
        offset /= dims[m];
    }
    return idx;
}

}  // namespace

UnmixingModel fit_from_standardized(const StandardizedSample& standardized,
                                    std::span<const Matrix> b_matrices,
                                    std::span<const int> variants) {
    const TensorSample& y = standardized.data();
    const std::size_t r = y.order();
    if (b_matrices.size() != r)
        throw DimensionError("expected one B-matrix per mode");
    UnmixingModel model;
    model.dims = y.dims();
    model.n = y.size();
    model.mean = standardized.mean();
    model.variants = expand_variants(variants, r);
    model.whitening = standardized.scheme();
    model.covariances = standardized.covariances();

    for (std::size_t m = 0; m < r; ++m) {
        const EigenSystem es = sym_eigen(b_matrices[m]);
        if (has_near_tie(es.values)) {
            std::ostringstream w;
            w << "mode " << (m + 1) << ": near-tied B-matrix eigenvalues (gap " << tie_gap(es.values)
              << "); kurtosis face means may not be distinct and the rotation is not identified";
            model.warnings.push_back(w.str());
        }
        model.gammas.push_back(es.vectors.transpose() * standardized.whiteners()[m]);
        model.eigenvalues.push_back(es.values);
    }

    // The rotations are orthogonal, so the recovered sources have the same
    // total energy as the standardized sample.
    double energy = 0.0;
    for (double v : y.values()) energy += v * v;
    const double mean_var = energy / (static_cast<double>(y.size()) * static_cast<double>(y.cells()));
    if (!(mean_var > 0.0)) throw SingularCovarianceError("standardized sample has zero variance", 0.0);
    model.scale = 1.0 / std::sqrt(mean_var);
    return model;
}

UnmixingModel tfobi_fit(const TensorSample& sample, std::span<const int> variants,
                        Whitening whitening) {
    const std::vector<int> v = expand_variants(variants, sample.order());
    const StandardizedSample st = standardize(sample, whitening);
    std::vector<Matrix> bs;
    bs.reserve(sample.order());
    for (std::size_t m = 1; m <= sample.order(); ++m) bs.push_back(m_mode_fobi(st, m, v[m - 1]));
    return fit_from_standardized(st, bs, v);
}

UnmixingModel mfobi_fit(const TensorSample& sample, int left_variant, int right_variant,
                        Whitening whitening) {
    if (sample.order() != 2)
        throw DimensionError("MFOBI needs matrix observations, got order " +
                             std::to_string(sample.order()));
    const int v[2] = {left_variant, right_variant};
    return tfobi_fit(sample, v, whitening);
}

UnmixingModel fobi_fit(const TensorSample& sample) {
    return tfobi_fit(sample.order() == 1 ? sample : vectorize(sample));
}

TensorSample recover_sources(const UnmixingModel& model, const TensorSample& sample) {
    if (sample.dims() != model.dims)
        throw DimensionError("sample dims do not match the fitted model");
    TensorSample centered = sample;
    const auto mean = model.mean.values();
    for (std::size_t i = 0; i < centered.size(); ++i) {
        auto obs = centered.observation(i);
        for (std::size_t k = 0; k < obs.size(); ++k) obs[k] -= mean[k];
    }
    TensorSample out = multi_mode_product(centered, model.gammas);
    for (double& v : out.values()) v *= model.scale;
    return out;
}

DataTensor component_kurtosis(const TensorSample& sources) {
    const std::size_t n = sources.size();
    if (n < 4)
        throw DimensionError("kurtosis needs at least 4 observations, got " + std::to_string(n));
    const std::size_t c = sources.cells();
    std::vector<double> mean(c, 0.0), m2(c, 0.0), m4(c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto obs = sources.observation(i);
        for (std::size_t k = 0; k < c; ++k) mean[k] += obs[k];
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto obs = sources.observation(i);
        for (std::size_t k = 0; k < c; ++k) {
            const double d = obs[k] - mean[k];
            const double d2 = d * d;
            m2[k] += d2;
            m4[k] += d2 * d2;
        }
    }
    std::vector<double> kurt(c);
    for (std::size_t k = 0; k < c; ++k) {
        if (!(m2[k] > 0.0)) {
            std::ostringstream msg;
            msg << "cell " << (k + 1) << " has zero sample variance";
            throw SingularCovarianceError(msg.str(), 0.0);
        }
        const double v = m2[k] / static_cast<double>(n);
        kurt[k] = (m4[k] / static_cast<double>(n)) / (v * v);
    }
    return DataTensor(sources.dims(), std::move(kurt));
}

std::vector<Dims> select_extreme_components(const DataTensor& kurtosis, std::size_t k_low,
                                            std::size_t k_high) {
    const std::size_t c = kurtosis.size();
    if (k_low + k_high > c)
        throw DimensionError("cannot select " + std::to_string(k_low + k_high) + " of " +
                             std::to_string(c) + " components");
    const auto k = kurtosis.values();
    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return k[a] < k[b]; });
    std::vector<Dims> out;
    for (std::size_t i = 0; i < k_low; ++i) out.push_back(unravel(order[i], kurtosis.dims()));
    for (std::size_t i = 0; i < k_high; ++i) out.push_back(unravel(order[c - 1 - i], kurtosis.dims()));
    return out;
}

}  // namespace tbss
