#include "tbss/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tbss/errors.hpp"

namespace tbss {

namespace {

void check_variant(int variant) {
    if (variant != 0 && variant != 1)
        throw std::invalid_argument("FOBI variant must be 0 or 1, got " + std::to_string(variant));
}

// Relative tolerance under which two kurtosis means count as tied.
constexpr double kTieTolerance = 1e-12;

void require_distinct(const Vector& means, std::size_t mode) {
    for (Eigen::Index k = 0; k < means.size(); ++k)
        for (Eigen::Index k2 = k + 1; k2 < means.size(); ++k2) {
            const double scale = std::max({1.0, std::abs(means(k)), std::abs(means(k2))});
            if (std::abs(means(k) - means(k2)) <= kTieTolerance * scale) {
                std::ostringstream msg;
                msg << "mode " << mode << ": components " << (k + 1) << " and " << (k2 + 1)
                    << " share the mean kurtosis " << means(k) << "; the rotation is not identifiable";
                throw IdentifiabilityError(msg.str());
            }
        }
}

}  // namespace

void MomentProfile::validate() const {
    if (dims.empty()) throw DimensionError("moment profile needs at least one mode");
    const std::size_t c = dims_product(dims);
    if (beta.size() != c || gamma3.size() != c || omega.size() != c)
        throw DimensionError("moment profile has " + std::to_string(beta.size()) + "/" +
                             std::to_string(gamma3.size()) + "/" + std::to_string(omega.size()) +
                             " entries for " + std::to_string(c) + " cells");
    for (std::size_t i = 0; i < c; ++i) {
        if (!std::isfinite(beta[i]) || !std::isfinite(gamma3[i]) || !std::isfinite(omega[i]))
            throw std::invalid_argument("moment profile cell " + std::to_string(i + 1) +
                                        " is not finite");
        if (beta[i] < 1.0 - 1e-12)
            throw std::invalid_argument("moment profile cell " + std::to_string(i + 1) +
                                        " has kurtosis below 1");
        if (omega[i] < -1e-12)
            throw std::invalid_argument("moment profile cell " + std::to_string(i + 1) +
                                        " has negative omega");
    }
}

MomentProfile profile_from_moments(const Dims& dims, std::vector<double> gamma3,
                                   std::vector<double> beta, std::span<const double> sixth) {
    if (sixth.size() != gamma3.size())
        throw DimensionError("sixth moments and third moments differ in length");
    MomentProfile p;
    p.dims = dims;
    p.omega.resize(sixth.size());
    for (std::size_t i = 0; i < sixth.size(); ++i) p.omega[i] = sixth[i] - gamma3[i] * gamma3[i];
    p.gamma3 = std::move(gamma3);
    p.beta = std::move(beta);
    p.validate();
    return p;
}

UnfoldedProfile unfold_profile(const MomentProfile& profile, std::size_t mode) {
    profile.validate();
    check_mode(profile.dims, mode);
    const DataTensor b(profile.dims, profile.beta);
    const DataTensor w(profile.dims, profile.omega);
    return {unfold(b, mode), unfold(w, mode)};
}

double mfobi_b_constant(std::size_t p, std::size_t q, int variant) {
    check_variant(variant);
    const auto pd = static_cast<double>(p), qd = static_cast<double>(q);
    return variant == 0 ? 2.0 * qd + pd - 1.0 : qd * pd + 1.0;
}

double mfobi_c_constant(std::size_t p, std::size_t q, int variant, double others) {
    check_variant(variant);
    const auto pd = static_cast<double>(p), qd = static_cast<double>(q);
    return variant == 0 ? others + pd * qd - 2.0 * pd - 4.0 * qd + 15.0
                        : qd * others - pd * qd + 11.0;
}

AsvTable matrix_asv(const Matrix& beta, const Matrix& omega, int variant, std::size_t mode) {
    check_variant(variant);
    if (beta.rows() != omega.rows() || beta.cols() != omega.cols())
        throw DimensionError("beta and omega grids differ in shape");
    const Eigen::Index p = beta.rows();
    const Eigen::Index q = beta.cols();
    const double qd = static_cast<double>(q);
    const Vector bbar = beta.rowwise().mean();
    const Vector wbar = omega.rowwise().mean();
    require_distinct(bbar, mode);
    const double total = bbar.sum();

    AsvTable t;
    t.mode = mode;
    t.asv = Matrix::Zero(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
        t.asv(k, k) = (bbar(k) - 1.0) / (4.0 * qd);
        for (Eigen::Index k2 = 0; k2 < p; ++k2) {
            if (k2 == k) continue;
            // Covariance of the two rows' kurtoses across columns.
            const double delta = beta.row(k).dot(beta.row(k2)) / qd - bbar(k) * bbar(k2);
            const double others = total - bbar(k) - bbar(k2);
            const double c = mfobi_c_constant(static_cast<std::size_t>(p),
                                              static_cast<std::size_t>(q), variant, others);
            const double num = wbar(k) + wbar(k2) - bbar(k) * bbar(k) + 2.0 * delta +
                               (qd - 1.0) * bbar(k) + (qd - 7.0) * bbar(k2) + c;
            const double gap = bbar(k) - bbar(k2);
            t.asv(k, k2) = num / (qd * gap * gap);
            t.e += t.asv(k, k2);
        }
    }
    return t;
}

AsvTable fobi_asv(const MomentProfile& profile) {
    profile.validate();
    const auto p = static_cast<Eigen::Index>(profile.cells());
    if (p < 2) throw DimensionError("FOBI needs at least two components");
    const Vector beta = Eigen::Map<const Vector>(profile.beta.data(), p);
    const Vector omega = Eigen::Map<const Vector>(profile.omega.data(), p);
    require_distinct(beta, 1);
    const double total = beta.sum();

    AsvTable t;
    t.asv = Matrix::Zero(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
        t.asv(k, k) = (beta(k) - 1.0) / 4.0;
        for (Eigen::Index k2 = 0; k2 < p; ++k2) {
            if (k2 == k) continue;
            const double others = total - beta(k) - beta(k2) - static_cast<double>(p - 2);
            const double num = omega(k) + omega(k2) - beta(k) * beta(k) - 6.0 * beta(k2) + 9.0 + others;
            const double gap = beta(k) - beta(k2);
            t.asv(k, k2) = num / (gap * gap);
            t.e += t.asv(k, k2);
        }
    }
    return t;
}

AsvTable mfobi_asv(const MomentProfile& profile, int variant, std::size_t mode) {
    if (profile.order() != 2)
        throw DimensionError("MFOBI needs a matrix profile, got order " +
                             std::to_string(profile.order()));
    return tfobi_asv(profile, mode, variant);
}

AsvTable tfobi_asv(const MomentProfile& profile, std::size_t mode, int variant) {
    check_variant(variant);
    if (profile.order() == 1) {
        check_mode(profile.dims, mode);
        return fobi_asv(profile);
    }
    const UnfoldedProfile u = unfold_profile(profile, mode);
    if (u.beta.rows() < 2) throw DimensionError("mode " + std::to_string(mode) + " has length 1");
    return matrix_asv(u.beta, u.omega, variant, mode);
}

std::string_view to_string(Superiority s) {
    switch (s) {
        case Superiority::n1_better: return "N1_better";
        case Superiority::n0_better: return "N0_better";
        case Superiority::equivalent: return "equivalent";
    }
    return "equivalent";
}

Superiority variant_superiority(const MomentProfile& profile, std::size_t mode, std::size_t k,
                                std::size_t k2) {
    const UnfoldedProfile u = unfold_profile(profile, mode);
    const auto p = static_cast<std::size_t>(u.beta.rows());
    if (p < 2) throw DimensionError("mode " + std::to_string(mode) + " has length 1");
    if (k < 1 || k > p || k2 < 1 || k2 > p || k == k2)
        throw DimensionError("component pair out of range");
    if (p == 2 || u.beta.cols() == 1) return Superiority::equivalent;
    const Vector bbar = u.beta.rowwise().mean();
    const double others = bbar.sum() - bbar(static_cast<Eigen::Index>(k - 1)) -
                          bbar(static_cast<Eigen::Index>(k2 - 1));
    // c_0 - c_1 = (q - 1)(2(p - 2) - others).
    const double avg = others / static_cast<double>(p - 2);
    if (avg < 2.0) return Superiority::n1_better;
    if (avg > 2.0) return Superiority::n0_better;
    return Superiority::equivalent;
}

double expected_limit_mdi(std::span<const AsvTable> tables, const Dims& dims) {
    if (tables.size() != dims.size() || tables.empty())
        throw DimensionError("expected one ASV table per mode (" + std::to_string(dims.size()) +
                             "), got " + std::to_string(tables.size()));
    const double p = static_cast<double>(dims_product(dims));
    double total = 0.0;
    for (std::size_t m = 0; m < dims.size(); ++m) {
        if (static_cast<std::size_t>(tables[m].dim()) != dims[m])
            throw DimensionError("ASV table " + std::to_string(m + 1) + " has the wrong size");
        total += p / static_cast<double>(dims[m]) * tables[m].e;
    }
    return total;
}

double tfobi_limit(const MomentProfile& profile, std::span<const int> variants) {
    const std::size_t r = profile.order();
    if (!variants.empty() && variants.size() != 1 && variants.size() != r)
        throw DimensionError("expected " + std::to_string(r) + " variant flags");
    std::vector<AsvTable> tables;
    for (std::size_t m = 1; m <= r; ++m) {
        const int v = variants.empty() ? 0 : variants.size() == 1 ? variants[0] : variants[m - 1];
        tables.push_back(tfobi_asv(profile, m, v));
    }
    return expected_limit_mdi(tables, profile.dims);
}

double fobi_limit(const MomentProfile& profile) { return fobi_asv(profile).e; }

}  // namespace tbss
