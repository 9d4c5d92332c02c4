#pragma once

#include <span>
#include <vector>

#include "tbss/tensor.hpp"

namespace tbss {

/// Two-class linear discriminant: class means, pooled covariance and the
/// training class proportions as priors. Labels are 0 and 1.
struct LdaModel {
    Vector weights;
    double intercept = 0.0;
    Vector mean0, mean1;
    double prior1 = 0.5;

    /// Positive scores are assigned to class 1.
    double score(const Eigen::Ref<const Vector>& x) const { return weights.dot(x) + intercept; }
};

/// Rows of `features` are observations. Throws std::invalid_argument unless
/// both classes have at least one member (and n > 2), and
/// SingularCovarianceError when the pooled covariance is not positive definite.
LdaModel lda_fit(const Matrix& features, std::span<const int> labels);

std::vector<int> lda_predict(const LdaModel& model, const Matrix& features);

/// Fraction of positions where the two label vectors agree.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

}  // namespace tbss
