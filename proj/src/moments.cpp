#include "tbss/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tbss/errors.hpp"
#include "tbss/spectra.hpp"

namespace tbss {

namespace {

// Per-chunk partial sums are folded into the total in a fixed order, which
// keeps rounding drift down for large n and the result deterministic.
constexpr std::size_t kChunk = 4096;

constexpr std::size_t kMaxSweeps = 200;
// Up to this many cells the sweeps run on the covariance of vec(X) instead
// of re-transforming the whole sample each time.
constexpr std::size_t kMaxGramCells = 512;
constexpr double kSweepTolerance = 1e-12;
constexpr double kAcceptTolerance = 1e-9;

Eigen::Index as_index(std::size_t v) { return static_cast<Eigen::Index>(v); }

void require_mode(const TensorSample& s, std::size_t mode) { check_mode(s.dims(), mode); }

double max_identity_deviation(const TensorSample& y) {
    double dev = 0.0;
    for (std::size_t m = 1; m <= y.order(); ++m) {
        const Matrix c = m_mode_covariance(y, m);
        dev = std::max(dev, (c - Matrix::Identity(c.rows(), c.cols())).cwiseAbs().maxCoeff());
    }
    return dev;
}

// The joint fixed point only pins down the whiteners up to factors c_m with
// prod c_m = 1. Fix them so every G_m has the same geometric-mean eigenvalue;
// this makes the result independent of the sweep order (e.g. transposing
// matrix data swaps the two whiteners exactly).
void balance_scales(std::vector<Matrix>& g, std::vector<Matrix>& cov) {
    const std::size_t r = g.size();
    std::vector<double> log_gm(r);
    double target = 0.0;
    for (std::size_t m = 0; m < r; ++m) {
        const Eigen::LLT<Matrix> llt(g[m]);
        log_gm[m] = 2.0 * llt.matrixLLT().diagonal().array().log().sum() / static_cast<double>(g[m].rows());
        target += log_gm[m] / static_cast<double>(r);
    }
    for (std::size_t m = 0; m < r; ++m) {
        const double c = std::exp(target - log_gm[m]);
        g[m] *= c;
        cov[m] /= c * c;
    }
}

// (1/n) sum_i vec(X_i) vec(X_i)^T.
Matrix vec_covariance(const TensorSample& centered) {
    const Eigen::Index c = as_index(centered.cells());
    Matrix total = Matrix::Zero(c, c), part = Matrix::Zero(c, c);
    const std::size_t n = centered.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto obs = centered.observation(i);
        const Eigen::Map<const Vector> x(obs.data(), c);
        part.selfadjointView<Eigen::Lower>().rankUpdate(x);
        if ((i + 1) % kChunk == 0 || i + 1 == n) {
            total += part;
            part.setZero();
        }
    }
    total = total.selfadjointView<Eigen::Lower>();
    return total / static_cast<double>(n);
}

// m-mode covariance of X x_j g_j (j != skip; all j if skip == 0) from the
// covariance of vec(X): a partial trace of K S K^T with K = g_1 (x) ... (x) g_r.
Matrix mode_cov_from_vec(const Matrix& vcov, const Dims& dims, const std::vector<Matrix>& g,
                         std::size_t mode, std::size_t skip) {
    std::vector<Matrix> factors;
    for (std::size_t j = 0; j < dims.size(); ++j)
        factors.push_back(j + 1 == skip ? Matrix::Identity(as_index(dims[j]), as_index(dims[j])) : g[j]);
    const Matrix k = kronecker(factors);
    const Matrix t = k * vcov * k.transpose();
    const std::size_t p = dims[mode - 1];
    std::size_t inner = 1;
    for (std::size_t s = mode; s < dims.size(); ++s) inner *= dims[s];
    const std::size_t outer = vcov.rows() / as_index(p * inner);
    Matrix out = Matrix::Zero(as_index(p), as_index(p));
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i)
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = 0; b < p; ++b)
                    out(as_index(a), as_index(b)) +=
                        t(as_index((o * p + a) * inner + i), as_index((o * p + b) * inner + i));
    out /= static_cast<double>(outer * inner);
    return 0.5 * (out + out.transpose());
}

// Gathers the observation's m-unfolding (column order irrelevant here).
void gather_unfolding(std::span<const double> obs, const Dims& dims, std::size_t mode, Matrix& m) {
    const std::size_t m0 = mode - 1;
    const std::size_t p = dims[m0];
    std::size_t inner = 1;
    for (std::size_t s = m0 + 1; s < dims.size(); ++s) inner *= dims[s];
    const std::size_t outer = obs.size() / (p * inner);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t k = 0; k < p; ++k)
            for (std::size_t i = 0; i < inner; ++i)
                m(as_index(k), as_index(o * inner + i)) = obs[(o * p + k) * inner + i];
}

struct FobiPair {
    Matrix b0;
    Matrix b1;
};

FobiPair fobi_pair(const StandardizedSample& sample, std::size_t mode, bool want0, bool want1) {
    const TensorSample& y = sample.data();
    require_mode(y, mode);
    const std::size_t n = y.size();
    const std::size_t p = y.dims()[mode - 1];
    const std::size_t r = y.cells() / p;
    const Eigen::Index pi = as_index(p);
    // For p > rho the rank-rho form M (M^T M) M^T is cheaper than squaring C.
    const bool thin = p > r;

    Matrix total0 = Matrix::Zero(pi, pi), total1 = Matrix::Zero(pi, pi);
    Matrix part0 = Matrix::Zero(pi, pi), part1 = Matrix::Zero(pi, pi);
    Matrix c(pi, pi);
    Matrix unf(pi, as_index(r));
    for (std::size_t i = 0; i < n; ++i) {
        const auto obs = y.observation(i);
        if (thin) {
            gather_unfolding(obs, y.dims(), mode, unf);
            const Matrix gram = unf.transpose() * unf;
            if (want0) part0.noalias() += (unf * gram) * unf.transpose();
            if (want1) part1.noalias() += gram.trace() * (unf * unf.transpose());
        } else {
            c.setZero();
            accumulate_self_product(obs, y.dims(), mode, c);
            if (want0) part0.noalias() += c * c;
            if (want1) part1.noalias() += c.trace() * c;
        }
        if ((i + 1) % kChunk == 0 || i + 1 == n) {
            total0 += part0;
            total1 += part1;
            part0.setZero();
            part1.setZero();
        }
    }
    const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(r));
    FobiPair out{norm * total0, norm * total1};
    out.b0 = 0.5 * (out.b0 + out.b0.transpose()).eval();
    out.b1 = 0.5 * (out.b1 + out.b1.transpose()).eval();
    return out;
}

}  // namespace

Matrix m_mode_covariance(const TensorSample& centered, std::size_t mode) {
    require_mode(centered, mode);
    const std::size_t n = centered.size();
    if (n < 2)
        throw DimensionError("m-mode covariance needs at least 2 observations, got " +
                             std::to_string(n));
    const std::size_t p = centered.dims()[mode - 1];
    const Eigen::Index pi = as_index(p);
    Matrix total = Matrix::Zero(pi, pi), part = Matrix::Zero(pi, pi);
    for (std::size_t i = 0; i < n; ++i) {
        accumulate_self_product(centered.observation(i), centered.dims(), mode, part);
        if ((i + 1) % kChunk == 0 || i + 1 == n) {
            total += part;
            part.setZero();
        }
    }
    const double rho_m = static_cast<double>(centered.cells() / p);
    total /= static_cast<double>(n) * rho_m;
    return 0.5 * (total + total.transpose());
}

StandardizedSample standardize(const TensorSample& sample, Whitening scheme) {
    if (sample.size() < 2)
        throw DimensionError("standardization needs at least 2 observations, got " +
                             std::to_string(sample.size()));
    CenteredSample cs = center_sample(sample);
    const std::size_t r = sample.order();
    std::vector<Matrix> g(r), cov(r);
    for (std::size_t m = 0; m < r; ++m) g[m] = Matrix::Identity(as_index(sample.dims()[m]),
                                                                as_index(sample.dims()[m]));

    std::size_t sweeps = 0;
    if (scheme == Whitening::single_pass || r == 1) {
        for (std::size_t m = 0; m < r; ++m) {
            cov[m] = m_mode_covariance(cs.centered, m + 1);
            g[m] = sym_inv_sqrt(cov[m]);
        }
        sweeps = 1;
    } else {
        // The sweeps run on a sample already whitened mode by mode, so their
        // accuracy does not degrade with an ill-conditioned mixing.
        std::vector<Matrix> g0(r), h(r), c(r);
        for (std::size_t m = 0; m < r; ++m) {
            cov[m] = m_mode_covariance(cs.centered, m + 1);
            g0[m] = sym_inv_sqrt(cov[m]);
            h[m] = Matrix::Identity(g0[m].rows(), g0[m].cols());
        }
        const TensorSample y = multi_mode_product(cs.centered, g0);
        const Dims& dims = sample.dims();
        const bool gram = sample.cells() <= kMaxGramCells;
        const Matrix vcov = gram ? vec_covariance(y) : Matrix();
        double dev = std::numeric_limits<double>::infinity();
        while (sweeps < kMaxSweeps && dev > kSweepTolerance) {
            for (std::size_t m = 0; m < r; ++m) {
                if (gram) {
                    c[m] = mode_cov_from_vec(vcov, dims, h, m + 1, m + 1);
                } else {
                    std::vector<Matrix> others = h;
                    others[m] = Matrix();
                    c[m] = m_mode_covariance(multi_mode_product(y, others), m + 1);
                }
                h[m] = sym_inv_sqrt(c[m]);
            }
            ++sweeps;
            dev = 0.0;
            if (gram) {
                for (std::size_t m = 0; m < r; ++m) {
                    const Matrix w = mode_cov_from_vec(vcov, dims, h, m + 1, 0);
                    dev = std::max(dev, (w - Matrix::Identity(w.rows(), w.cols())).cwiseAbs().maxCoeff());
                }
            } else {
                dev = max_identity_deviation(multi_mode_product(y, h));
            }
        }
        if (dev > kAcceptTolerance)
            throw ConvergenceError("joint whitening did not reach identity m-mode covariances "
                                   "after " + std::to_string(sweeps) + " sweeps",
                                   dev);
        // Back to the original coordinates: cov_m = g0_m^{-1} c_m g0_m^{-1}.
        // Orthogonal factors on the other modes leave a mode's covariance
        // unchanged, so the symmetric whiteners of these are still a fixed point.
        for (std::size_t m = 0; m < r; ++m) {
            const Matrix root = cov[m] * g0[m];  // g0_m^{-1}
            cov[m] = root * c[m] * root.transpose();
            cov[m] = 0.5 * (cov[m] + cov[m].transpose()).eval();
            g[m] = sym_inv_sqrt(cov[m]);
        }
        balance_scales(g, cov);
    }

    StandardizedSample out(multi_mode_product(cs.centered, g), std::move(cs.mean));
    out.whiteners_ = std::move(g);
    out.covariances_ = std::move(cov);
    out.scheme_ = scheme;
    out.sweeps_ = sweeps;
    return out;
}

Matrix m_mode_fobi0(const StandardizedSample& sample, std::size_t mode) {
    return fobi_pair(sample, mode, true, false).b0;
}

Matrix m_mode_fobi1(const StandardizedSample& sample, std::size_t mode) {
    return fobi_pair(sample, mode, false, true).b1;
}

Matrix m_mode_fobi(const StandardizedSample& sample, std::size_t mode, int variant) {
    if (variant != 0 && variant != 1)
        throw std::invalid_argument("FOBI variant must be 0 or 1, got " + std::to_string(variant));
    return variant == 0 ? m_mode_fobi0(sample, mode) : m_mode_fobi1(sample, mode);
}

MomentSet moment_set(const StandardizedSample& sample, std::size_t mode) {
    FobiPair b = fobi_pair(sample, mode, true, true);
    MomentSet ms;
    ms.mode = mode;
    ms.cov = m_mode_covariance(sample.data(), mode);
    ms.b0 = std::move(b.b0);
    ms.b1 = std::move(b.b1);
    ms.n = sample.data().size();
    ms.rho = sample.data().cells() / sample.data().dims()[mode - 1];
    return ms;
}

}  // namespace tbss
