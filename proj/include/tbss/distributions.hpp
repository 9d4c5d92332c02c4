#pragma once

// Standardized source laws used by the simulations. Each entry knows its raw
// law, the affine map to mean 0 / variance 1, and the exact third, fourth and
// sixth moments of the standardized variable.

#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tbss/rng.hpp"

namespace tbss {

enum class DistributionKind {
    uniform,
    triangular,
    normal,
    t10,
    gamma,
    laplace,
    inverse_gaussian,
    two_point,
};

struct SourceDistribution {
    std::string name;
    DistributionKind kind = DistributionKind::normal;
    /// Gamma shape (gamma kind only).
    double shape = 0.0;
    /// Mean and standard deviation of the raw law.
    double raw_mean = 0.0;
    double raw_sd = 1.0;
    /// E z^3, E z^4 and E z^6 of the standardized variable z.
    double gamma3 = 0.0;
    double beta = 3.0;
    double sixth = 15.0;

    double omega() const noexcept { return sixth - gamma3 * gamma3; }
};

/// The catalog: uniform, triangular, normal, t10, gamma3, laplace, chisq3,
/// gamma1.2, exp, chisq1.5, chisq1.2, invgauss, bernoulli.
const std::vector<SourceDistribution>& distribution_catalog();

/// Looks a distribution up by catalog name (case-insensitive; a few aliases
/// such as "gaussian", "exponential", "binary" are accepted).
/// Throws std::invalid_argument for unknown names.
const SourceDistribution& find_distribution(std::string_view name);

/// Draws standardized values of one distribution. Holds the stateful std
/// distribution objects, so use one sampler per thread.
class CellSampler {
public:
    explicit CellSampler(const SourceDistribution& dist);

    double operator()(Rng& rng);

    /// Raw (unstandardized) draw, for checking the catalog's raw moments.
    double raw(Rng& rng);

    const SourceDistribution& distribution() const noexcept { return *dist_; }

private:
    const SourceDistribution* dist_;
    std::normal_distribution<double> normal_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::student_t_distribution<double> student_{10.0};
    std::gamma_distribution<double> gamma_;
    std::exponential_distribution<double> exponential_{1.0};
};

}  // namespace tbss
