#include "tbss/lda.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tbss/errors.hpp"
#include "tbss/spectra.hpp"

namespace tbss {

LdaModel lda_fit(const Matrix& features, std::span<const int> labels) {
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    if (static_cast<std::size_t>(n) != labels.size())
        throw DimensionError("LDA: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(n) + " observations");
    Vector sum0 = Vector::Zero(d), sum1 = Vector::Zero(d);
    Eigen::Index n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y == 0) {
            sum0 += features.row(i).transpose();
            ++n0;
        } else if (y == 1) {
            sum1 += features.row(i).transpose();
            ++n1;
        } else {
            throw std::invalid_argument("LDA labels must be 0 or 1, got " + std::to_string(y));
        }
    }
    if (n0 == 0 || n1 == 0) throw std::invalid_argument("LDA needs both classes in the training data");
    if (n <= 2) throw std::invalid_argument("LDA needs more than two observations");

    LdaModel m;
    m.mean0 = sum0 / static_cast<double>(n0);
    m.mean1 = sum1 / static_cast<double>(n1);
    m.prior1 = static_cast<double>(n1) / static_cast<double>(n);

    Matrix pooled = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector c = features.row(i).transpose() - (labels[static_cast<std::size_t>(i)] == 1 ? m.mean1 : m.mean0);
        pooled.selfadjointView<Eigen::Lower>().rankUpdate(c);
    }
    pooled = pooled.selfadjointView<Eigen::Lower>();
    pooled /= static_cast<double>(n - 2);

    const EigenSystem es = sym_eigen(pooled);
    const double largest = es.values(0);
    const double smallest = es.values(d - 1);
    if (!(largest > 0.0) || !(smallest > kPositiveDefiniteRatio * largest))
        throw SingularCovarianceError("LDA pooled covariance is singular (smallest eigenvalue " +
                                          std::to_string(smallest) + ")",
                                      smallest);
    const Eigen::LDLT<Matrix> ldlt(pooled);
    m.weights = ldlt.solve(m.mean1 - m.mean0);
    m.intercept = -0.5 * m.weights.dot(m.mean1 + m.mean0) + std::log(m.prior1 / (1.0 - m.prior1));
    return m;
}

std::vector<int> lda_predict(const LdaModel& model, const Matrix& features) {
    if (features.cols() != model.weights.size())
        throw DimensionError("LDA model expects " + std::to_string(model.weights.size()) +
                             " features, got " + std::to_string(features.cols()));
    std::vector<int> out(static_cast<std::size_t>(features.rows()));
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        out[static_cast<std::size_t>(i)] = model.score(features.row(i).transpose()) > 0.0 ? 1 : 0;
    return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size() || truth.empty())
        throw DimensionError("accuracy needs two non-empty label vectors of equal length");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace tbss
