#include "tbss/simulation.hpp"

#include <stdexcept>

#include "tbss/errors.hpp"

namespace tbss {

SourceGrid SourceGrid::from_names(Dims dims, const std::vector<std::string>& names) {
    if (names.size() != dims_product(dims))
        throw DimensionError("source grid needs " + std::to_string(dims_product(dims)) +
                             " distribution names, got " + std::to_string(names.size()));
    SourceGrid g;
    g.dims = std::move(dims);
    for (const auto& n : names) g.cells.push_back(&find_distribution(n));
    return g;
}

SourceGrid SourceGrid::uniform_grid(Dims dims, std::string_view name) {
    const std::size_t c = dims_product(dims);
    return from_names(std::move(dims), std::vector<std::string>(c, std::string(name)));
}

MomentProfile SourceGrid::profile() const {
    MomentProfile p;
    p.dims = dims;
    for (const auto* d : cells) {
        p.beta.push_back(d->beta);
        p.gamma3.push_back(d->gamma3);
        p.omega.push_back(d->omega());
    }
    p.validate();
    return p;
}

std::vector<std::string> SourceGrid::names() const {
    std::vector<std::string> out;
    for (const auto* d : cells) out.push_back(d->name);
    return out;
}

SourceGrid separation_grid() {
    return SourceGrid::from_names({3, 4}, {"uniform", "t10", "chisq3", "chisq1.5",
                                           "triangular", "gamma3", "gamma1.2", "chisq1.2",
                                           "normal", "laplace", "exp", "invgauss"});
}

SourceGrid variant_setting_grid(int setting) {
    std::string corner, rest;
    if (setting == 1) {
        corner = "normal";
        rest = "bernoulli";
    } else if (setting == 2) {
        corner = "bernoulli";
        rest = "normal";
    } else {
        throw std::invalid_argument("variant setting must be 1 or 2, got " + std::to_string(setting));
    }
    std::vector<std::string> names(9, rest);
    names[0] = corner;
    names[4] = "uniform";
    return SourceGrid::from_names({3, 3}, names);
}

std::string_view to_string(MixingRegime r) {
    switch (r) {
        case MixingRegime::identity: return "identity";
        case MixingRegime::gaussian: return "gaussian";
        case MixingRegime::uniform: return "uniform";
        case MixingRegime::haar: return "haar";
    }
    return "identity";
}

MixingRegime parse_regime(std::string_view s) {
    if (s == "identity" || s == "none") return MixingRegime::identity;
    if (s == "gaussian" || s == "normal") return MixingRegime::gaussian;
    if (s == "uniform") return MixingRegime::uniform;
    if (s == "haar" || s == "orthogonal") return MixingRegime::haar;
    throw std::invalid_argument("unknown mixing regime '" + std::string(s) + "'");
}

Matrix haar_orthogonal(Eigen::Index p, Rng& rng) {
    std::normal_distribution<double> nd;
    for (int attempt = 0; attempt < 100; ++attempt) {
        Matrix a(p, p);
        for (Eigen::Index j = 0; j < p; ++j)
            for (Eigen::Index i = 0; i < p; ++i) a(i, j) = nd(rng);
        Eigen::HouseholderQR<Matrix> qr(a);
        const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        if (r.diagonal().cwiseAbs().minCoeff() < 1e-12) continue;
        Matrix q = qr.householderQ() * Matrix::Identity(p, p);
        // Q diag(sign(r_ii)) is Haar distributed; plain Q is not.
        for (Eigen::Index j = 0; j < p; ++j)
            if (r(j, j) < 0.0) q.col(j) = -q.col(j);
        return q;
    }
    throw ConvergenceError("could not draw a full-rank matrix for the Haar construction", 0.0);
}

MixingSpec gen_mixing(MixingRegime regime, const Dims& dims, std::uint64_t seed) {
    MixingSpec spec;
    spec.regime = regime;
    Rng rng = make_rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    for (std::size_t m = 0; m < dims.size(); ++m) {
        const auto p = static_cast<Eigen::Index>(dims[m]);
        if (regime == MixingRegime::identity) {
            spec.omegas.push_back(Matrix::Identity(p, p));
            continue;
        }
        if (regime == MixingRegime::haar) {
            spec.omegas.push_back(haar_orthogonal(p, rng));
            continue;
        }
        bool done = false;
        for (int attempt = 0; attempt < 100 && !done; ++attempt) {
            Matrix a(p, p);
            for (Eigen::Index j = 0; j < p; ++j)
                for (Eigen::Index i = 0; i < p; ++i)
                    a(i, j) = regime == MixingRegime::gaussian ? nd(rng) : ud(rng);
            Eigen::FullPivLU<Matrix> lu(a);
            lu.setThreshold(1e-10);
            if (lu.rank() == p) {
                spec.omegas.push_back(std::move(a));
                done = true;
            }
        }
        if (!done)
            throw ConvergenceError("no full-rank mixing matrix for mode " + std::to_string(m + 1) +
                                   " after 100 draws", 0.0);
    }
    return spec;
}

TensorSample sample_sources(const SourceGrid& grid, std::size_t n, std::uint64_t seed) {
    if (grid.cells.size() != dims_product(grid.dims))
        throw DimensionError("source grid cell count does not match its dims");
    Rng rng = make_rng(seed);
    std::vector<CellSampler> samplers;
    samplers.reserve(grid.cells.size());
    for (const auto* d : grid.cells) samplers.emplace_back(*d);
    TensorSample z(grid.dims, n);
    for (std::size_t i = 0; i < n; ++i) {
        auto obs = z.observation(i);
        for (std::size_t k = 0; k < obs.size(); ++k) obs[k] = samplers[k](rng);
    }
    return z;
}

TensorSample sample_ic(const SourceGrid& grid, const MixingSpec& mixing, std::size_t n,
                       std::uint64_t seed) {
    if (mixing.omegas.size() != grid.dims.size())
        throw DimensionError("mixing spec has " + std::to_string(mixing.omegas.size()) +
                             " matrices for an order-" + std::to_string(grid.dims.size()) + " grid");
    TensorSample z = sample_sources(grid, n, seed);
    if (mixing.regime == MixingRegime::identity) return z;
    return multi_mode_product(z, mixing.omegas);
}

}  // namespace tbss
