#include "tbss/distributions.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace tbss {

namespace {

// Gamma(k, rate sqrt(k)) has mean sqrt(k) and variance 1; standardized it has
// skewness 2/sqrt(k), kurtosis 3 + 6/k and E z^6 = 15 + 130/k + 120/k^2.
SourceDistribution gamma_entry(std::string name, double k, double raw_mean, double raw_sd) {
    SourceDistribution d;
    d.name = std::move(name);
    d.kind = DistributionKind::gamma;
    d.shape = k;
    d.raw_mean = raw_mean;
    d.raw_sd = raw_sd;
    d.gamma3 = 2.0 / std::sqrt(k);
    d.beta = 3.0 + 6.0 / k;
    d.sixth = 15.0 + 130.0 / k + 120.0 / (k * k);
    return d;
}

SourceDistribution symmetric_entry(std::string name, DistributionKind kind, double raw_sd, double beta,
                                   double sixth) {
    SourceDistribution d;
    d.name = std::move(name);
    d.kind = kind;
    d.raw_mean = 0.0;
    d.raw_sd = raw_sd;
    d.beta = beta;
    d.sixth = sixth;
    return d;
}

std::vector<SourceDistribution> build_catalog() {
    std::vector<SourceDistribution> c;
    c.push_back(symmetric_entry("uniform", DistributionKind::uniform, 1.0, 1.8, 27.0 / 7.0));
    c.push_back(symmetric_entry("triangular", DistributionKind::triangular, 1.0, 2.4, 54.0 / 7.0));
    c.push_back(symmetric_entry("normal", DistributionKind::normal, 1.0, 3.0, 15.0));
    c.push_back(symmetric_entry("t10", DistributionKind::t10, std::sqrt(10.0 / 8.0), 4.0, 40.0));
    c.push_back(gamma_entry("gamma3", 3.0, std::sqrt(3.0), 1.0));
    c.push_back(symmetric_entry("laplace", DistributionKind::laplace, 1.0, 6.0, 90.0));
    c.push_back(gamma_entry("chisq3", 1.5, 3.0, std::sqrt(6.0)));
    c.push_back(gamma_entry("gamma1.2", 1.2, std::sqrt(1.2), 1.0));
    c.push_back(gamma_entry("exp", 1.0, 1.0, 1.0));
    c.push_back(gamma_entry("chisq1.5", 0.75, 1.5, std::sqrt(3.0)));
    c.push_back(gamma_entry("chisq1.2", 0.6, 1.2, std::sqrt(2.4)));
    SourceDistribution ig;
    ig.name = "invgauss";
    ig.kind = DistributionKind::inverse_gaussian;
    ig.raw_mean = 1.0;
    ig.raw_sd = 1.0;
    ig.gamma3 = 3.0;
    ig.beta = 18.0;
    // Cumulants (2n-3)!! give mu_6 = 945 + 15*15 + 10*9 + 15.
    ig.sixth = 1275.0;
    c.push_back(ig);
    c.push_back(symmetric_entry("bernoulli", DistributionKind::two_point, 1.0, 1.0, 1.0));
    return c;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::ranges::transform(out, out.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return out;
}

}  // namespace

const std::vector<SourceDistribution>& distribution_catalog() {
    static const std::vector<SourceDistribution> catalog = build_catalog();
    return catalog;
}

const SourceDistribution& find_distribution(std::string_view name) {
    std::string key = lower(name);
    if (key == "gaussian" || key == "n") key = "normal";
    else if (key == "exponential" || key == "exp1") key = "exp";
    else if (key == "binary" || key == "two-point" || key == "b") key = "bernoulli";
    else if (key == "u") key = "uniform";
    for (const auto& d : distribution_catalog())
        if (d.name == key) return d;
    throw std::invalid_argument("unknown distribution '" + std::string(name) + "'");
}

CellSampler::CellSampler(const SourceDistribution& dist)
    : dist_(&dist), gamma_(dist.kind == DistributionKind::gamma ? dist.shape : 1.0, 1.0) {}

double CellSampler::raw(Rng& rng) {
    const SourceDistribution& d = *dist_;
    switch (d.kind) {
        case DistributionKind::uniform:
            return std::sqrt(3.0) * (2.0 * unit_(rng) - 1.0);
        case DistributionKind::triangular:
            return std::sqrt(6.0) * (unit_(rng) + unit_(rng) - 1.0);
        case DistributionKind::normal:
            return normal_(rng);
        case DistributionKind::t10:
            return student_(rng);
        case DistributionKind::gamma:
            // Gamma(k, 1) rescaled to the catalog's raw law: mean / k = scale.
            return gamma_(rng) * d.raw_mean / d.shape;
        case DistributionKind::laplace: {
            const double e = exponential_(rng) / std::sqrt(2.0);
            return unit_(rng) < 0.5 ? -e : e;
        }
        case DistributionKind::inverse_gaussian: {
            // Michael, Schucany and Haas (1976) with mu = lambda = 1.
            const double nu = normal_(rng);
            const double y = nu * nu;
            const double x = 1.0 + 0.5 * y - 0.5 * std::sqrt(4.0 * y + y * y);
            return unit_(rng) <= 1.0 / (1.0 + x) ? x : 1.0 / x;
        }
        case DistributionKind::two_point:
            return unit_(rng) < 0.5 ? -1.0 : 1.0;
    }
    return 0.0;
}

double CellSampler::operator()(Rng& rng) { return (raw(rng) - dist_->raw_mean) / dist_->raw_sd; }

}  // namespace tbss
